#include "apl/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace apl {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)
constexpr double kLog2 = 0.6931471805599453;

double softplus(double x) {
  // log(1 + e^x) without overflow for large |x|.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Shared tail of the sampling forward pass once mean/log_std_raw and noise
// are in place.
void finish_sample(const SquashedGaussianPolicy& policy, PolicySampleCache& cache) {
  const int act_dim = policy.act_dim();
  const auto rows = cache.mean.rows();

  cache.sigma = cache.log_std_raw.array()
                    .min(policy.log_std_max)
                    .max(policy.log_std_min)
                    .exp()
                    .matrix();
  cache.pre_tanh = cache.mean + cache.sigma.cwiseProduct(cache.noise);
  cache.tanh_u = cache.pre_tanh.array().tanh().matrix();

  cache.action.resize(rows, act_dim);
  cache.log_prob = Eigen::VectorXd::Zero(rows);
  for (Eigen::Index b = 0; b < rows; ++b) {
    double logp = 0.0;
    for (int d = 0; d < act_dim; ++d) {
      const double eps = cache.noise(b, d);
      const double sigma = cache.sigma(b, d);
      const double u = cache.pre_tanh(b, d);
      cache.action(b, d) = cache.tanh_u(b, d) * policy.action_scale[d] + policy.action_offset[d];
      // Gaussian density at the drawn point, then the tanh and scale
      // change-of-variables corrections: log(1 - tanh^2 u) in stable form.
      logp += -0.5 * eps * eps - std::log(sigma) - kHalfLog2Pi;
      logp -= 2.0 * (kLog2 - u - softplus(-2.0 * u));
      logp -= std::log(policy.action_scale[d]);
    }
    cache.log_prob(b) = logp;
  }
}

void trunk_forward(const SquashedGaussianPolicy& policy, const Eigen::MatrixXd& states,
                   PolicySampleCache& cache) {
  const int act_dim = policy.act_dim();
  const Eigen::MatrixXd& head = mlp_forward(policy.trunk, policy.params, states, cache.trunk);
  cache.mean = head.leftCols(act_dim);
  cache.log_std_raw = head.rightCols(act_dim);
}

}  // namespace

SquashedGaussianPolicy make_policy(int obs_dim, const Vec& action_low, const Vec& action_high,
                                   const std::vector<int>& hidden_widths, Rng& rng) {
  if (action_low.size() != action_high.size() || action_low.empty()) {
    throw std::invalid_argument("make_policy: inconsistent action bounds");
  }
  const int act_dim = static_cast<int>(action_low.size());
  SquashedGaussianPolicy policy;
  policy.trunk.widths.push_back(obs_dim);
  for (int w : hidden_widths) policy.trunk.widths.push_back(w);
  policy.trunk.widths.push_back(2 * act_dim);
  policy.trunk.hidden = Activation::kRelu;
  policy.trunk.output = Activation::kIdentity;
  policy.params = init_params(policy.trunk, rng);
  policy.action_scale.resize(act_dim);
  policy.action_offset.resize(act_dim);
  for (int d = 0; d < act_dim; ++d) {
    if (!(action_low[d] < action_high[d])) {
      throw std::invalid_argument("make_policy: action_low must be < action_high");
    }
    policy.action_scale[d] = 0.5 * (action_high[d] - action_low[d]);
    policy.action_offset[d] = 0.5 * (action_high[d] + action_low[d]);
  }
  return policy;
}

void policy_sample(const SquashedGaussianPolicy& policy, const Eigen::MatrixXd& states,
                   Rng& rng, PolicySampleCache& cache) {
  trunk_forward(policy, states, cache);
  cache.noise.resize(states.rows(), policy.act_dim());
  for (Eigen::Index b = 0; b < cache.noise.rows(); ++b) {
    for (Eigen::Index d = 0; d < cache.noise.cols(); ++d) {
      cache.noise(b, d) = rng.normal();
    }
  }
  finish_sample(policy, cache);
}

void policy_mean(const SquashedGaussianPolicy& policy, const Eigen::MatrixXd& states,
                 PolicySampleCache& cache) {
  trunk_forward(policy, states, cache);
  cache.noise = Eigen::MatrixXd::Zero(states.rows(), policy.act_dim());
  finish_sample(policy, cache);
}

ActResult policy_act(const SquashedGaussianPolicy& policy, const Vec& state, ActMode mode,
                     Rng& rng) {
  if (static_cast<int>(state.size()) != policy.obs_dim()) {
    throw std::invalid_argument("policy_act: state dimension mismatch");
  }
  Eigen::MatrixXd row(1, state.size());
  for (std::size_t i = 0; i < state.size(); ++i) row(0, i) = state[i];

  PolicySampleCache cache;
  if (mode == ActMode::kSample) {
    policy_sample(policy, row, rng, cache);
  } else {
    policy_mean(policy, row, cache);
  }
  ActResult result;
  result.action.assign(cache.action.data(), cache.action.data() + policy.act_dim());
  result.log_prob = cache.log_prob(0);
  return result;
}

Eigen::MatrixXd policy_sample_actions(const SquashedGaussianPolicy& policy,
                                      const Eigen::MatrixXd& states, int n_draws, Rng& rng) {
  if (n_draws < 1) throw std::invalid_argument("policy_sample_actions: n_draws must be >= 1");
  const int act_dim = policy.act_dim();
  const Eigen::Index batch = states.rows();

  ForwardCache trunk;
  const Eigen::MatrixXd& head = mlp_forward(policy.trunk, policy.params, states, trunk);
  Eigen::MatrixXd actions(n_draws * batch, act_dim);
  for (int k = 0; k < n_draws; ++k) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (int d = 0; d < act_dim; ++d) {
        const double mean = head(b, d);
        const double raw = head(b, act_dim + d);
        const double log_std =
            std::min(policy.log_std_max, std::max(policy.log_std_min, raw));
        const double u = mean + std::exp(log_std) * rng.normal();
        actions(k * batch + b, d) =
            std::tanh(u) * policy.action_scale[d] + policy.action_offset[d];
      }
    }
  }
  return actions;
}

void policy_backward(const SquashedGaussianPolicy& policy, const PolicySampleCache& cache,
                     const Eigen::MatrixXd& action_grad, const Eigen::VectorXd& log_prob_grad,
                     std::span<double> grad_accum) {
  const int act_dim = policy.act_dim();
  const Eigen::Index rows = cache.mean.rows();
  if (action_grad.rows() != rows || action_grad.cols() != act_dim ||
      log_prob_grad.size() != rows) {
    throw std::invalid_argument("policy_backward: gradient shape mismatch");
  }

  // Trunk head layout is [mean | raw log-std]; build dLoss/dHead.
  Eigen::MatrixXd head_grad(rows, 2 * act_dim);
  for (Eigen::Index b = 0; b < rows; ++b) {
    for (int d = 0; d < act_dim; ++d) {
      const double t = cache.tanh_u(b, d);
      const double sigma = cache.sigma(b, d);
      const double raw = cache.log_std_raw(b, d);
      // Through the action: a = tanh(u)*scale + offset.
      // Through the density: d log_prob / du = 2*tanh(u) (tanh correction),
      // plus the explicit -log(sigma) term.
      const double du = action_grad(b, d) * policy.action_scale[d] * (1.0 - t * t) +
                        log_prob_grad(b) * 2.0 * t;
      const double dsigma = du * cache.noise(b, d) - log_prob_grad(b) / sigma;
      const bool clamped = raw <= policy.log_std_min || raw >= policy.log_std_max;
      head_grad(b, d) = du;
      head_grad(b, act_dim + d) = clamped ? 0.0 : dsigma * sigma;
    }
  }
  mlp_backward(policy.trunk, policy.params, cache.trunk, head_grad, grad_accum);
}

}  // namespace apl
