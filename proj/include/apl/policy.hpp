#pragma once

#include <Eigen/Core>

#include "apl/mlp.hpp"
#include "apl/rng.hpp"

namespace apl {

/// State-conditioned Gaussian policy with tanh squashing. The trunk maps a
/// state to (mean, raw log-std), each of action dimension; raw log-stds are
/// clamped into [log_std_min, log_std_max] before use. Emitted actions are
/// tanh(u) * scale + offset per dimension.
struct SquashedGaussianPolicy {
  MLPSpec trunk;
  ParamVector params;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  Vec action_scale;
  Vec action_offset;

  int obs_dim() const { return trunk.input_dim(); }
  int act_dim() const { return static_cast<int>(action_scale.size()); }
};

/// Builds a policy with the given hidden widths; trunk output is 2 * act_dim.
SquashedGaussianPolicy make_policy(int obs_dim, const Vec& action_low, const Vec& action_high,
                                   const std::vector<int>& hidden_widths, Rng& rng);

enum class ActMode { kSample, kMean };

struct ActResult {
  Vec action;
  double log_prob;
};

/// Single-state action. kMean returns the squashed mean with its log-density;
/// kSample draws via reparameterization. Throws on state dimension mismatch.
ActResult policy_act(const SquashedGaussianPolicy& policy, const Vec& state, ActMode mode,
                     Rng& rng);

/// Everything the reparameterized policy-gradient backward pass needs,
/// retained from a batched sampling forward pass.
struct PolicySampleCache {
  ForwardCache trunk;
  Eigen::MatrixXd mean;         // B x A
  Eigen::MatrixXd log_std_raw;  // B x A, pre-clamp trunk output
  Eigen::MatrixXd sigma;        // B x A, exp(clamped log-std)
  Eigen::MatrixXd noise;        // B x A, the standard-normal draws
  Eigen::MatrixXd pre_tanh;     // B x A, mean + sigma .* noise
  Eigen::MatrixXd tanh_u;       // B x A
  Eigen::MatrixXd action;       // B x A, scaled + offset
  Eigen::VectorXd log_prob;     // B
};

/// Batched reparameterized sampling (one draw per row); fills the cache.
void policy_sample(const SquashedGaussianPolicy& policy, const Eigen::MatrixXd& states,
                   Rng& rng, PolicySampleCache& cache);

/// Batched deterministic mean action (noise = 0); fills the cache.
void policy_mean(const SquashedGaussianPolicy& policy, const Eigen::MatrixXd& states,
                 PolicySampleCache& cache);

/// K independent action draws per state, stacked as K blocks of B rows
/// (row k*B + b is draw k for state b). One trunk forward pass; no gradient
/// bookkeeping — callers treat these samples as constants.
Eigen::MatrixXd policy_sample_actions(const SquashedGaussianPolicy& policy,
                                      const Eigen::MatrixXd& states, int n_draws, Rng& rng);

/// Accumulates into grad_accum the gradient w.r.t. policy parameters of
///   sum_b [ dot(action_grad.row(b), action_b) + log_prob_grad(b) * log_prob_b ]
/// where actions were produced by policy_sample / policy_mean with the given
/// cache. The noise draws are held fixed (reparameterization trick).
void policy_backward(const SquashedGaussianPolicy& policy, const PolicySampleCache& cache,
                     const Eigen::MatrixXd& action_grad, const Eigen::VectorXd& log_prob_grad,
                     std::span<double> grad_accum);

}  // namespace apl
