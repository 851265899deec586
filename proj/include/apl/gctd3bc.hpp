#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "apl/adam.hpp"
#include "apl/agent.hpp"
#include "apl/env.hpp"
#include "apl/mlp.hpp"
#include "apl/oorb.hpp"
#include "apl/rng.hpp"

namespace apl {

enum class LambdaMode { kFixed, kNormalized };

struct GCTD3BCConfig {
  double gamma = 0.99;
  double policy_noise_sigma = -1.0;  // < 0: defaults to 0.2 * action half-range
  double noise_clip = -1.0;          // < 0: defaults to 0.5 * action half-range
  int policy_delay = 2;
  double tau = 0.005;
  LambdaMode lambda_mode = LambdaMode::kNormalized;
  double lambda_fixed = 1.0;
  double alpha_norm = 2.5;
  double critic_lr = 3e-4;
  double actor_lr = 3e-4;
  double explore_noise_std = -1.0;  // < 0: defaults to 0.1 * action half-range
  std::vector<int> hidden_widths = {64, 64};
};

/// Twin critics with targets plus a deterministic tanh actor with a target.
struct TwinCritics {
  MLPSpec critic_spec;
  MLPSpec actor_spec;  // tanh output, scaled into the action box
  ParamVector critic1, critic2;
  ParamVector target_critic1, target_critic2;
  ParamVector actor, target_actor;
};

/// Greedy-Conservative TD3BC: TD3 twin-critic value learning with target
/// policy smoothing; the actor ascends lambda * Q1(s, pi(s)) minus a
/// behavior-cloning penalty gated by the batch weight, on a delayed schedule.
class GCTD3BCAgent final : public Agent {
 public:
  GCTD3BCAgent(const EnvSpec& env_spec, const GCTD3BCConfig& config, Rng& rng);

  /// Smoothed bootstrap target: a' = clamp_box(target_actor(s') +
  /// clamp(eps, -c, c)), eps ~ N(0, sigma^2); y = r + gamma * (1 - terminal)
  /// * min(Qhat1, Qhat2)(s', a').
  Eigen::VectorXd td3_target(const SourcedBatch& batch, Rng& rng) const;

  /// One Adam step per critic on the MSE against a shared y, then a polyak
  /// step of both critic targets. Increments the critic step counter.
  UpdateDiagnostics critic_update(const SourcedBatch& batch, Rng& rng);

  /// Eq.-8 trade-off coefficient: lambda_fixed, or alpha_norm normalized by
  /// the batch mean |Q1(s, a_data)| (gradient-free).
  double lambda_value(const SourcedBatch& batch) const;

  /// One Adam ascent step on mean_b [lambda * Q1(s, pi(s)) - weight *
  /// ||pi(s) - a||^2]; critics frozen; target actor polyak-updated after.
  /// Returns the objective value before the step.
  double policy_update(const SourcedBatch& batch, double weight);

  /// Loss and exact parameter gradient of one critic's MSE against fixed y.
  double critic_loss_gradient(int critic_index, const SourcedBatch& batch,
                              const Eigen::VectorXd& y, std::span<double> grad) const;

  /// Value and exact ascent gradient of the actor objective at the given
  /// pessimism weight (lambda comes from lambda_value on this batch).
  double policy_objective_gradient(const SourcedBatch& batch, double weight,
                                   std::span<double> grad) const;

  /// Critic update every call; actor update every policy_delay-th critic
  /// step, so T critic steps produce exactly floor(T / policy_delay) actor
  /// steps.
  UpdateDiagnostics update_step(const SourcedBatch& batch, double weight, Rng& rng) override;

  /// Actor output plus exploration noise, clamped into the action box.
  Vec explore_action(const Vec& observation, Rng& rng) override;
  Vec eval_action(const Vec& observation) const override;

  /// Deterministic actor network output (scaled into the action box).
  Eigen::MatrixXd actor_action(const ParamVector& actor_params,
                               const Eigen::MatrixXd& states, ForwardCache* cache) const;

  const GCTD3BCConfig& config() const { return config_; }
  TwinCritics& model() { return model_; }
  const TwinCritics& model() const { return model_; }
  std::int64_t critic_steps() const { return critic_steps_; }
  std::int64_t actor_steps() const { return actor_steps_; }

 private:
  GCTD3BCConfig config_;
  EnvSpec env_spec_;
  TwinCritics model_;
  AdamState critic1_opt_, critic2_opt_, actor_opt_;
  std::int64_t critic_steps_ = 0;
  std::int64_t actor_steps_ = 0;
  mutable double last_bc_penalty_ = 0.0;
};

}  // namespace apl
