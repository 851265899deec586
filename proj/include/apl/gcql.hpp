#pragma once

#include <Eigen/Core>
#include <vector>

#include "apl/adam.hpp"
#include "apl/agent.hpp"
#include "apl/env.hpp"
#include "apl/mlp.hpp"
#include "apl/oorb.hpp"
#include "apl/policy.hpp"
#include "apl/rng.hpp"

namespace apl {

struct GCQLConfig {
  double gamma = 0.99;
  double alpha_cql = 1.0;        // conservative-penalty coefficient
  double alpha_ent = 0.2;        // entropy coefficient in the policy objective
  int n_critics = 5;             // N
  int subset_size = 2;           // |M| for in-target minimization
  int n_penalty_samples = 10;    // K policy draws per state in the penalty
  bool subset_per_transition = false;
  double tau = 0.005;
  double critic_lr = 3e-4;
  double actor_lr = 3e-4;
  std::vector<int> hidden_widths = {64, 64};
};

/// N critics mapping (state (+) action) -> scalar plus matching slow targets.
struct QEnsemble {
  MLPSpec critic_spec;
  std::vector<ParamVector> critics;
  std::vector<ParamVector> targets;
  int subset_size = 2;

  int n() const { return static_cast<int>(critics.size()); }
};

/// Uniform draw of k distinct indices from {0..n-1} (partial Fisher-Yates;
/// consumes exactly k bounded-integer draws).
std::vector<int> draw_subset(int n, int k, Rng& rng);

/// Greedy-Conservative Q-ensemble Learning: REDQ-style in-target minimization
/// over a random critic pair, a CQL penalty gated by the batch weight, and
/// entropy-regularized policy improvement against the ensemble mean.
class GCQLAgent final : public Agent {
 public:
  GCQLAgent(const EnvSpec& env_spec, const GCQLConfig& config, Rng& rng);

  /// Bootstrap targets y = r + gamma * (1 - terminal) * min_{i in M} Qhat_i(s', a'),
  /// a' ~ pi(.|s'). Consumes rng in this order: subset draw(s), then the a'
  /// noise. y carries no gradient.
  Eigen::VectorXd redq_target(const SourcedBatch& batch, Rng& rng) const;

  /// Mean squared Bellman residual of critic i against fixed targets y.
  double bellman_loss(int critic_index, const SourcedBatch& batch,
                      const Eigen::VectorXd& y) const;

  /// Conservative penalty of critic i: alpha_cql * mean_b [log-mean-exp_k
  /// Q_i(s_b, a'_{k,b}) - Q_i(s_b, a_b)] with a' the given policy samples
  /// (stacked K blocks of B rows, treated as constants).
  double cql_penalty(int critic_index, const SourcedBatch& batch,
                     const Eigen::MatrixXd& sampled_actions) const;

  struct CriticLoss {
    double bellman = 0.0;
    double weighted_penalty = 0.0;
    double total() const { return bellman + weighted_penalty; }
  };

  /// Loss parts and exact parameter gradient of critic i at fixed targets y:
  /// bellman + weight * penalty over the given policy samples (pass nullptr
  /// to drop the penalty branch, as a zero gate does).
  CriticLoss critic_loss_gradient(int critic_index, const SourcedBatch& batch,
                                  const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd* sampled_actions, double weight,
                                  std::span<double> grad) const;

  /// Value and exact ascent gradient of the policy objective
  /// mean_b [mean_i Q_i(s, a~) - alpha_ent * log pi(a~|s)], sampling a~ with
  /// the given rng. Returns the objective value.
  double policy_objective_gradient(const SourcedBatch& batch, Rng& rng,
                                   std::span<double> grad) const;

  /// One Adam step per critic on bellman + weight * penalty (shared y),
  /// then a polyak step of every target. The penalty branch (including its
  /// policy-sample draws) is skipped entirely when weight * alpha_cql == 0,
  /// so an online-sourced update consumes rng identically to a penalty-free
  /// one. Returns the Bellman and weighted-penalty means over critics.
  UpdateDiagnostics q_update(const SourcedBatch& batch, double weight, Rng& rng);

  /// One Adam ascent step on mean_b [mean_i Q_i(s, a~) - alpha_ent * log
  /// pi(a~|s)] with reparameterized a~; critics stay frozen. Returns the
  /// objective value before the step.
  double policy_update(const SourcedBatch& batch, Rng& rng);

  UpdateDiagnostics update_step(const SourcedBatch& batch, double weight, Rng& rng) override;
  Vec explore_action(const Vec& observation, Rng& rng) override;
  Vec eval_action(const Vec& observation) const override;

  const GCQLConfig& config() const { return config_; }
  QEnsemble& ensemble() { return ensemble_; }
  const QEnsemble& ensemble() const { return ensemble_; }
  SquashedGaussianPolicy& policy() { return policy_; }
  const SquashedGaussianPolicy& policy() const { return policy_; }

 private:
  Eigen::MatrixXd concat_state_action(const Eigen::MatrixXd& states,
                                      const Eigen::MatrixXd& actions) const;

  GCQLConfig config_;
  QEnsemble ensemble_;
  SquashedGaussianPolicy policy_;
  std::vector<AdamState> critic_opt_;
  AdamState actor_opt_;
  // Forward-pass scratch reused across critics and updates; the penalty
  // buffers are the large ones (K * batch rows).
  mutable ForwardCache data_cache_;
  mutable ForwardCache sample_cache_;
  mutable Eigen::MatrixXd sample_input_;
};

}  // namespace apl
