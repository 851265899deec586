#include "apl/gctd3bc.hpp"

#include <cmath>
#include <stdexcept>

#include "apl/errors.hpp"

namespace apl {

namespace {

double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

Eigen::MatrixXd concat(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd joined(states.rows(), states.cols() + actions.cols());
  joined.leftCols(states.cols()) = states;
  joined.rightCols(actions.cols()) = actions;
  return joined;
}

}  // namespace

GCTD3BCAgent::GCTD3BCAgent(const EnvSpec& env_spec, const GCTD3BCConfig& config, Rng& rng)
    : config_(config), env_spec_(env_spec) {
  if (config.gamma < 0.0 || config.gamma >= 1.0) {
    throw std::invalid_argument("GCTD3BC: gamma must lie in [0, 1)");
  }
  if (config.policy_delay < 1) {
    throw std::invalid_argument("GCTD3BC: policy_delay must be >= 1");
  }
  if (config.tau <= 0.0 || config.tau > 1.0) {
    throw std::invalid_argument("GCTD3BC: tau must lie in (0, 1]");
  }

  const double half_range = env_spec.action_half_range();
  if (config_.policy_noise_sigma < 0.0) config_.policy_noise_sigma = 0.2 * half_range;
  if (config_.noise_clip < 0.0) config_.noise_clip = 0.5 * half_range;
  if (config_.explore_noise_std < 0.0) config_.explore_noise_std = 0.1 * half_range;

  model_.critic_spec.widths.push_back(env_spec.obs_dim + env_spec.act_dim);
  for (int w : config.hidden_widths) model_.critic_spec.widths.push_back(w);
  model_.critic_spec.widths.push_back(1);
  model_.critic_spec.hidden = Activation::kRelu;
  model_.critic_spec.output = Activation::kIdentity;

  model_.actor_spec.widths.push_back(env_spec.obs_dim);
  for (int w : config.hidden_widths) model_.actor_spec.widths.push_back(w);
  model_.actor_spec.widths.push_back(env_spec.act_dim);
  model_.actor_spec.hidden = Activation::kRelu;
  model_.actor_spec.output = Activation::kTanh;

  model_.critic1 = init_params(model_.critic_spec, rng);
  model_.critic2 = init_params(model_.critic_spec, rng);
  model_.target_critic1 = model_.critic1;
  model_.target_critic2 = model_.critic2;
  model_.actor = init_params(model_.actor_spec, rng);
  model_.target_actor = model_.actor;

  critic1_opt_ = AdamState::create(model_.critic1.size(), config_.critic_lr);
  critic2_opt_ = AdamState::create(model_.critic2.size(), config_.critic_lr);
  actor_opt_ = AdamState::create(model_.actor.size(), config_.actor_lr);
}

Eigen::MatrixXd GCTD3BCAgent::actor_action(const ParamVector& actor_params,
                                           const Eigen::MatrixXd& states,
                                           ForwardCache* cache) const {
  ForwardCache local;
  ForwardCache& used = cache != nullptr ? *cache : local;
  Eigen::MatrixXd out = mlp_forward(model_.actor_spec, actor_params, states, used);
  for (Eigen::Index d = 0; d < out.cols(); ++d) {
    const double half = 0.5 * (env_spec_.action_high[d] - env_spec_.action_low[d]);
    const double mid = 0.5 * (env_spec_.action_high[d] + env_spec_.action_low[d]);
    out.col(d) = out.col(d) * half + Eigen::VectorXd::Constant(out.rows(), mid);
  }
  return out;
}

Eigen::VectorXd GCTD3BCAgent::td3_target(const SourcedBatch& batch, Rng& rng) const {
  const Eigen::Index batch_size = batch.size();
  const int act_dim = env_spec_.act_dim;

  Eigen::MatrixXd next_actions = actor_action(model_.target_actor, batch.next_states, nullptr);
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    for (int d = 0; d < act_dim; ++d) {
      const double noise = clamp(config_.policy_noise_sigma * rng.normal(),
                                 -config_.noise_clip, config_.noise_clip);
      next_actions(b, d) = clamp(next_actions(b, d) + noise, env_spec_.action_low[d],
                                 env_spec_.action_high[d]);
    }
  }

  const Eigen::MatrixXd next_input = concat(batch.next_states, next_actions);
  const Eigen::VectorXd q1 =
      mlp_forward(model_.critic_spec, model_.target_critic1, next_input).col(0);
  const Eigen::VectorXd q2 =
      mlp_forward(model_.critic_spec, model_.target_critic2, next_input).col(0);

  Eigen::VectorXd y(batch_size);
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    y(b) = batch.rewards(b) +
           config_.gamma * (1.0 - batch.terminal(b)) * std::min(q1(b), q2(b));
  }
  return y;
}

double GCTD3BCAgent::critic_loss_gradient(int critic_index, const SourcedBatch& batch,
                                          const Eigen::VectorXd& y,
                                          std::span<double> grad) const {
  const Eigen::Index batch_size = batch.size();
  const ParamVector& params = critic_index == 0 ? model_.critic1 : model_.critic2;
  std::fill(grad.begin(), grad.end(), 0.0);

  const Eigen::MatrixXd input = concat(batch.states, batch.actions);
  ForwardCache cache;
  const Eigen::VectorXd q = mlp_forward(model_.critic_spec, params, input, cache).col(0);
  const double loss = (q - y).squaredNorm() / static_cast<double>(batch_size);
  const Eigen::MatrixXd dq = (2.0 / static_cast<double>(batch_size)) * (q - y);
  mlp_backward(model_.critic_spec, params, cache, dq, grad);
  return loss;
}

UpdateDiagnostics GCTD3BCAgent::critic_update(const SourcedBatch& batch, Rng& rng) {
  const Eigen::VectorXd y = td3_target(batch, rng);

  UpdateDiagnostics diag;
  ParamVector grad(model_.critic1.size());
  ParamVector* critics[2] = {&model_.critic1, &model_.critic2};
  AdamState* opts[2] = {&critic1_opt_, &critic2_opt_};
  for (int c = 0; c < 2; ++c) {
    const double loss = critic_loss_gradient(c, batch, y, grad);
    if (!std::isfinite(loss)) {
      throw NumericalFault("td3_critic_update: non-finite loss at critic " + std::to_string(c));
    }
    adam_step(*critics[c], grad, *opts[c]);
    diag.critic_loss += loss / 2.0;
  }

  polyak_update(model_.target_critic1, model_.critic1, config_.tau);
  polyak_update(model_.target_critic2, model_.critic2, config_.tau);
  critic_steps_ += 1;
  return diag;
}

double GCTD3BCAgent::lambda_value(const SourcedBatch& batch) const {
  if (config_.lambda_mode == LambdaMode::kFixed) return config_.lambda_fixed;
  const Eigen::MatrixXd input = concat(batch.states, batch.actions);
  const Eigen::VectorXd q = mlp_forward(model_.critic_spec, model_.critic1, input).col(0);
  return config_.alpha_norm / (q.cwiseAbs().mean() + 1e-8);
}

double GCTD3BCAgent::policy_objective_gradient(const SourcedBatch& batch, double weight,
                                               std::span<double> grad) const {
  const Eigen::Index batch_size = batch.size();
  const int act_dim = env_spec_.act_dim;
  const double lambda = lambda_value(batch);

  ForwardCache actor_cache;
  const Eigen::MatrixXd pi = actor_action(model_.actor, batch.states, &actor_cache);
  const Eigen::MatrixXd input = concat(batch.states, pi);

  ForwardCache critic_cache;
  const Eigen::VectorXd q =
      mlp_forward(model_.critic_spec, model_.critic1, input, critic_cache).col(0);

  // dObjective/dQ1 row weights for the mean of lambda * Q1.
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(
      batch_size, 1, lambda / static_cast<double>(batch_size));
  Eigen::MatrixXd action_grad =
      mlp_input_gradient(model_.critic_spec, model_.critic1, critic_cache, dq)
          .rightCols(act_dim);

  double bc_total = 0.0;
  if (weight != 0.0) {
    const Eigen::MatrixXd residual = pi - batch.actions;
    bc_total = residual.squaredNorm() / static_cast<double>(batch_size);
    action_grad -= (2.0 * weight / static_cast<double>(batch_size)) * residual;
  }
  last_bc_penalty_ = weight * bc_total;

  // Undo the box scaling, then backprop through the tanh-output actor.
  for (int d = 0; d < act_dim; ++d) {
    action_grad.col(d) *= 0.5 * (env_spec_.action_high[d] - env_spec_.action_low[d]);
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  mlp_backward(model_.actor_spec, model_.actor, actor_cache, action_grad, grad);
  return lambda * q.mean() - weight * bc_total;
}

double GCTD3BCAgent::policy_update(const SourcedBatch& batch, double weight) {
  ParamVector grad(model_.actor.size(), 0.0);
  const double objective = policy_objective_gradient(batch, weight, grad);
  if (!std::isfinite(objective)) {
    throw NumericalFault("gctd3bc_policy_update: non-finite objective");
  }
  for (double& g : grad) g = -g;  // ascent
  adam_step(model_.actor, grad, actor_opt_);

  polyak_update(model_.target_actor, model_.actor, config_.tau);
  actor_steps_ += 1;
  return objective;
}

UpdateDiagnostics GCTD3BCAgent::update_step(const SourcedBatch& batch, double weight,
                                            Rng& rng) {
  UpdateDiagnostics diag = critic_update(batch, rng);
  if (critic_steps_ % config_.policy_delay == 0) {
    diag.policy_objective = policy_update(batch, weight);
    diag.penalty_value = last_bc_penalty_;
    diag.policy_updated = true;
  }
  return diag;
}

Vec GCTD3BCAgent::explore_action(const Vec& observation, Rng& rng) {
  Eigen::MatrixXd row(1, observation.size());
  for (std::size_t i = 0; i < observation.size(); ++i) row(0, i) = observation[i];
  const Eigen::MatrixXd action = actor_action(model_.actor, row, nullptr);
  Vec out(env_spec_.act_dim);
  for (int d = 0; d < env_spec_.act_dim; ++d) {
    out[d] = clamp(action(0, d) + config_.explore_noise_std * rng.normal(),
                   env_spec_.action_low[d], env_spec_.action_high[d]);
  }
  return out;
}

Vec GCTD3BCAgent::eval_action(const Vec& observation) const {
  Eigen::MatrixXd row(1, observation.size());
  for (std::size_t i = 0; i < observation.size(); ++i) row(0, i) = observation[i];
  const Eigen::MatrixXd action = actor_action(model_.actor, row, nullptr);
  return Vec(action.data(), action.data() + env_spec_.act_dim);
}

}  // namespace apl
