#include "apl/gcql.hpp"

#include <cmath>
#include <stdexcept>

#include "apl/errors.hpp"

namespace apl {

std::vector<int> draw_subset(int n, int k, Rng& rng) {
  if (k < 1 || k > n) throw std::invalid_argument("draw_subset: need 1 <= k <= n");
  std::vector<int> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.integer(n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  return indices;
}

GCQLAgent::GCQLAgent(const EnvSpec& env_spec, const GCQLConfig& config, Rng& rng)
    : config_(config) {
  if (config.gamma < 0.0 || config.gamma >= 1.0) {
    throw std::invalid_argument("GCQL: gamma must lie in [0, 1)");
  }
  if (config.n_penalty_samples < 1) {
    throw std::invalid_argument("GCQL: n_penalty_samples must be >= 1");
  }
  if (config.subset_size < 1 || config.subset_size > config.n_critics) {
    throw std::invalid_argument("GCQL: need 1 <= subset_size <= n_critics");
  }
  if (config.tau <= 0.0 || config.tau > 1.0) {
    throw std::invalid_argument("GCQL: tau must lie in (0, 1]");
  }

  ensemble_.critic_spec.widths.push_back(env_spec.obs_dim + env_spec.act_dim);
  for (int w : config.hidden_widths) ensemble_.critic_spec.widths.push_back(w);
  ensemble_.critic_spec.widths.push_back(1);
  ensemble_.critic_spec.hidden = Activation::kRelu;
  ensemble_.critic_spec.output = Activation::kIdentity;
  ensemble_.subset_size = config.subset_size;

  for (int i = 0; i < config.n_critics; ++i) {
    ensemble_.critics.push_back(init_params(ensemble_.critic_spec, rng));
    critic_opt_.push_back(AdamState::create(ensemble_.critics.back().size(), config.critic_lr));
  }
  ensemble_.targets = ensemble_.critics;

  policy_ = make_policy(env_spec.obs_dim, env_spec.action_low, env_spec.action_high,
                        config.hidden_widths, rng);
  actor_opt_ = AdamState::create(policy_.params.size(), config.actor_lr);
}

Eigen::MatrixXd GCQLAgent::concat_state_action(const Eigen::MatrixXd& states,
                                               const Eigen::MatrixXd& actions) const {
  Eigen::MatrixXd joined(states.rows(), states.cols() + actions.cols());
  joined.leftCols(states.cols()) = states;
  joined.rightCols(actions.cols()) = actions;
  return joined;
}

Eigen::VectorXd GCQLAgent::redq_target(const SourcedBatch& batch, Rng& rng) const {
  const Eigen::Index batch_size = batch.size();
  const int n = ensemble_.n();

  std::vector<std::vector<int>> subsets;
  if (config_.subset_per_transition) {
    subsets.reserve(batch_size);
    for (Eigen::Index b = 0; b < batch_size; ++b) {
      subsets.push_back(draw_subset(n, ensemble_.subset_size, rng));
    }
  } else {
    subsets.push_back(draw_subset(n, ensemble_.subset_size, rng));
  }

  const Eigen::MatrixXd next_actions =
      policy_sample_actions(policy_, batch.next_states, 1, rng);
  const Eigen::MatrixXd next_input = concat_state_action(batch.next_states, next_actions);

  // Target critic outputs, computed only for critics some subset needs.
  std::vector<Eigen::VectorXd> target_q(n);
  std::vector<bool> needed(n, false);
  for (const auto& subset : subsets) {
    for (int i : subset) needed[i] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (needed[i]) {
      target_q[i] = mlp_forward(ensemble_.critic_spec, ensemble_.targets[i], next_input).col(0);
    }
  }

  Eigen::VectorXd y(batch_size);
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    const auto& subset = subsets[config_.subset_per_transition ? b : 0];
    double min_q = target_q[subset[0]](b);
    for (std::size_t j = 1; j < subset.size(); ++j) {
      min_q = std::min(min_q, target_q[subset[j]](b));
    }
    y(b) = batch.rewards(b) + config_.gamma * (1.0 - batch.terminal(b)) * min_q;
  }
  return y;
}

double GCQLAgent::bellman_loss(int critic_index, const SourcedBatch& batch,
                               const Eigen::VectorXd& y) const {
  const Eigen::MatrixXd input = concat_state_action(batch.states, batch.actions);
  const Eigen::VectorXd q =
      mlp_forward(ensemble_.critic_spec, ensemble_.critics[critic_index], input).col(0);
  return (q - y).squaredNorm() / static_cast<double>(batch.size());
}

double GCQLAgent::cql_penalty(int critic_index, const SourcedBatch& batch,
                              const Eigen::MatrixXd& sampled_actions) const {
  const Eigen::Index batch_size = batch.size();
  const int k_draws = static_cast<int>(sampled_actions.rows() / batch_size);

  const Eigen::MatrixXd data_input = concat_state_action(batch.states, batch.actions);
  const Eigen::VectorXd q_data =
      mlp_forward(ensemble_.critic_spec, ensemble_.critics[critic_index], data_input).col(0);

  Eigen::MatrixXd sample_input(sampled_actions.rows(), data_input.cols());
  for (int k = 0; k < k_draws; ++k) {
    sample_input.block(k * batch_size, 0, batch_size, batch.states.cols()) = batch.states;
  }
  sample_input.rightCols(sampled_actions.cols()) = sampled_actions;
  const Eigen::VectorXd q_samples =
      mlp_forward(ensemble_.critic_spec, ensemble_.critics[critic_index], sample_input).col(0);

  double total = 0.0;
  for (Eigen::Index b = 0; b < batch_size; ++b) {
    double max_q = q_samples(b);
    for (int k = 1; k < k_draws; ++k) max_q = std::max(max_q, q_samples(k * batch_size + b));
    double sum_exp = 0.0;
    for (int k = 0; k < k_draws; ++k) sum_exp += std::exp(q_samples(k * batch_size + b) - max_q);
    const double log_mean_exp = max_q + std::log(sum_exp / k_draws);
    total += log_mean_exp - q_data(b);
  }
  return config_.alpha_cql * total / static_cast<double>(batch_size);
}

GCQLAgent::CriticLoss GCQLAgent::critic_loss_gradient(int critic_index,
                                                      const SourcedBatch& batch,
                                                      const Eigen::VectorXd& y,
                                                      const Eigen::MatrixXd* sampled_actions,
                                                      double weight,
                                                      std::span<double> grad) const {
  const Eigen::Index batch_size = batch.size();
  const ParamVector& params = ensemble_.critics[critic_index];
  std::fill(grad.begin(), grad.end(), 0.0);

  const Eigen::MatrixXd data_input = concat_state_action(batch.states, batch.actions);
  const Eigen::VectorXd q_data =
      mlp_forward(ensemble_.critic_spec, params, data_input, data_cache_).col(0);

  CriticLoss loss;
  loss.bellman = (q_data - y).squaredNorm() / static_cast<double>(batch_size);
  Eigen::MatrixXd dq_data = (2.0 / static_cast<double>(batch_size)) * (q_data - y);

  if (sampled_actions != nullptr && weight * config_.alpha_cql != 0.0) {
    const int k_draws = static_cast<int>(sampled_actions->rows() / batch_size);
    sample_input_.resize(sampled_actions->rows(), data_input.cols());
    for (int k = 0; k < k_draws; ++k) {
      sample_input_.block(k * batch_size, 0, batch_size, batch.states.cols()) = batch.states;
    }
    sample_input_.rightCols(sampled_actions->cols()) = *sampled_actions;

    const Eigen::VectorXd q_samples =
        mlp_forward(ensemble_.critic_spec, params, sample_input_, sample_cache_).col(0);
    const double scale = weight * config_.alpha_cql / static_cast<double>(batch_size);
    Eigen::MatrixXd dq_samples(q_samples.size(), 1);
    double total = 0.0;
    for (Eigen::Index b = 0; b < batch_size; ++b) {
      double max_q = q_samples(b);
      for (int k = 1; k < k_draws; ++k) {
        max_q = std::max(max_q, q_samples(k * batch_size + b));
      }
      double sum_exp = 0.0;
      for (int k = 0; k < k_draws; ++k) {
        sum_exp += std::exp(q_samples(k * batch_size + b) - max_q);
      }
      for (int k = 0; k < k_draws; ++k) {
        dq_samples(k * batch_size + b, 0) =
            scale * std::exp(q_samples(k * batch_size + b) - max_q) / sum_exp;
      }
      total += max_q + std::log(sum_exp / k_draws) - q_data(b);
    }
    loss.weighted_penalty = weight * config_.alpha_cql * total / static_cast<double>(batch_size);
    dq_data.array() -= scale;
    mlp_backward(ensemble_.critic_spec, params, sample_cache_, dq_samples, grad);
  }

  mlp_backward(ensemble_.critic_spec, params, data_cache_, dq_data, grad);
  return loss;
}

UpdateDiagnostics GCQLAgent::q_update(const SourcedBatch& batch, double weight, Rng& rng) {
  const int n = ensemble_.n();
  const Eigen::VectorXd y = redq_target(batch, rng);

  // The whole pessimistic branch (including its rng consumption) is skipped
  // when the weight gates it to zero, so an online-sourced update is exactly
  // the penalty-free update.
  const bool penalty_active = weight * config_.alpha_cql != 0.0;
  Eigen::MatrixXd sampled;
  if (penalty_active) {
    sampled = policy_sample_actions(policy_, batch.states, config_.n_penalty_samples, rng);
  }

  UpdateDiagnostics diag;
  ParamVector grad(ensemble_.critics[0].size());
  for (int i = 0; i < n; ++i) {
    const CriticLoss loss =
        critic_loss_gradient(i, batch, y, penalty_active ? &sampled : nullptr, weight, grad);
    if (!std::isfinite(loss.total())) {
      throw NumericalFault("q_update: non-finite loss at critic " + std::to_string(i));
    }
    adam_step(ensemble_.critics[i], grad, critic_opt_[i]);
    diag.critic_loss += loss.bellman / n;
    diag.penalty_value += loss.weighted_penalty / n;
  }

  for (int i = 0; i < n; ++i) {
    polyak_update(ensemble_.targets[i], ensemble_.critics[i], config_.tau);
  }
  return diag;
}

double GCQLAgent::policy_objective_gradient(const SourcedBatch& batch, Rng& rng,
                                            std::span<double> grad) const {
  const Eigen::Index batch_size = batch.size();
  const int n = ensemble_.n();
  const int act_dim = policy_.act_dim();

  PolicySampleCache cache;
  policy_sample(policy_, batch.states, rng, cache);
  const Eigen::MatrixXd input = concat_state_action(batch.states, cache.action);

  // dObjective/dQ_i(row) for the ensemble mean of critic values.
  const Eigen::MatrixXd dq =
      Eigen::MatrixXd::Constant(batch_size, 1, 1.0 / static_cast<double>(n * batch_size));
  Eigen::MatrixXd action_grad = Eigen::MatrixXd::Zero(batch_size, act_dim);
  double q_mean = 0.0;
  ForwardCache critic_cache;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd q =
        mlp_forward(ensemble_.critic_spec, ensemble_.critics[i], input, critic_cache).col(0);
    q_mean += q.sum() / static_cast<double>(n * batch_size);
    const Eigen::MatrixXd input_grad =
        mlp_input_gradient(ensemble_.critic_spec, ensemble_.critics[i], critic_cache, dq);
    action_grad += input_grad.rightCols(act_dim);
  }

  const double objective = q_mean - config_.alpha_ent * cache.log_prob.mean();
  const Eigen::VectorXd logp_grad = Eigen::VectorXd::Constant(
      batch_size, -config_.alpha_ent / static_cast<double>(batch_size));
  std::fill(grad.begin(), grad.end(), 0.0);
  policy_backward(policy_, cache, action_grad, logp_grad, grad);
  return objective;
}

double GCQLAgent::policy_update(const SourcedBatch& batch, Rng& rng) {
  ParamVector grad(policy_.params.size(), 0.0);
  const double objective = policy_objective_gradient(batch, rng, grad);
  if (!std::isfinite(objective)) {
    throw NumericalFault("policy_update: non-finite objective");
  }
  for (double& g : grad) g = -g;  // ascent
  adam_step(policy_.params, grad, actor_opt_);
  return objective;
}

UpdateDiagnostics GCQLAgent::update_step(const SourcedBatch& batch, double weight, Rng& rng) {
  UpdateDiagnostics diag = q_update(batch, weight, rng);
  diag.policy_objective = policy_update(batch, rng);
  diag.policy_updated = true;
  return diag;
}

Vec GCQLAgent::explore_action(const Vec& observation, Rng& rng) {
  return policy_act(policy_, observation, ActMode::kSample, rng).action;
}

Vec GCQLAgent::eval_action(const Vec& observation) const {
  Rng unused(0);
  return policy_act(policy_, observation, ActMode::kMean, unused).action;
}

}  // namespace apl
