#include "apl/orchestrator.hpp"

#include <charconv>
#include <memory>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace apl {

namespace {

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

// One collection episode step bookkeeping: resets when an episode ends.
struct Collector {
  Env& env;
  Rng& rng;
  Vec observation;

  explicit Collector(Env& env_in, Rng& rng_in) : env(env_in), rng(rng_in) {
    observation = env.reset(rng.raw());
  }

  Transition collect(Agent& agent) {
    const Vec action = agent.explore_action(observation, rng);
    const StepResult step = env.step(action);
    Transition t{observation, action, step.reward, step.observation, step.terminal};
    if (step.terminal || step.truncated) {
      observation = env.reset(rng.raw());
    } else {
      observation = step.observation;
    }
    return t;
  }
};

}  // namespace

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "wg") return Variant::kWG;
  if (name == "wgo") return Variant::kWGO;
  throw std::invalid_argument("unknown variant '" + name + "' (full|wg|wgo)");
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kWG: return "wg";
    case Variant::kWGO: return "wgo";
  }
  return "full";
}

TrainStreams TrainStreams::from_seed(std::uint64_t master_seed) {
  Rng root(master_seed);
  return TrainStreams{root.split(1), root.split(2), root.split(3), root.split(4)};
}

UpdateDiagnostics pretrain(Agent& agent, OORB& oorb, const Schedule& schedule,
                           TrainStreams& streams) {
  if (schedule.t_initial > 0 && oorb.offline_size() == 0) {
    throw std::runtime_error("pretrain: offline buffer is empty");
  }
  UpdateDiagnostics mean;
  std::int64_t policy_updates = 0;
  for (std::int64_t step = 0; step < schedule.t_initial; ++step) {
    const SourcedBatch batch = oorb.sample(/*online_steps=*/0, streams.sample);
    const UpdateDiagnostics diag =
        agent.update_step(batch, weight_for(batch.source), streams.update);
    mean.critic_loss += diag.critic_loss;
    mean.penalty_value += diag.penalty_value;
    if (diag.policy_updated) {
      mean.policy_objective += diag.policy_objective;
      policy_updates += 1;
    }
  }
  if (schedule.t_initial > 0) {
    mean.critic_loss /= static_cast<double>(schedule.t_initial);
    mean.penalty_value /= static_cast<double>(schedule.t_initial);
  }
  if (policy_updates > 0) {
    mean.policy_objective /= static_cast<double>(policy_updates);
    mean.policy_updated = true;
  }
  return mean;
}

RunRecord run(Agent& agent, Env& env, OORB& oorb, const Schedule& schedule, Variant variant,
              std::uint64_t master_seed, double random_ref, double expert_ref,
              TrainStreams& streams, const UpdateDiagnostics& pretrain_diag) {
  RunRecord record;
  record.master_seed = master_seed;
  record.random_ref = random_ref;
  record.expert_ref = expert_ref;

  // Evaluation rolls its own instance so the collection episode in `env`
  // stays untouched.
  const std::unique_ptr<Env> eval_env = env.clone_fresh();
  const auto eval_row = [&](int iteration, std::int64_t s_on, const UpdateDiagnostics& diag) {
    const double mean_return =
        evaluate(agent, *eval_env, schedule.eval_episodes, streams.eval_root.split(iteration).seed());
    EvalRow row;
    row.iteration = iteration;
    row.s_on = s_on;
    row.mean_return = mean_return;
    row.normalized_score = normalized_score(mean_return, random_ref, expert_ref);
    row.critic_loss = diag.critic_loss;
    row.penalty_value = diag.penalty_value;
    row.policy_objective = diag.policy_objective;
    record.rows.push_back(row);
  };

  // Post-pretrain baseline before any interaction.
  eval_row(0, 0, pretrain_diag);

  Collector collector(env, streams.collect);
  std::int64_t s_on = 0;
  int iteration = 0;
  do {
    iteration += 1;
    for (std::int64_t t = 0; t < schedule.t_on; ++t) {
      oorb.push_online(collector.collect(agent));
    }
    s_on += schedule.t_on;

    UpdateDiagnostics mean;
    std::int64_t policy_updates = 0;
    for (std::int64_t t = 0; t < schedule.t_off; ++t) {
      const SourcedBatch batch = variant == Variant::kWGO
                                     ? oorb.sample_from(BatchSource::kOffline, streams.sample)
                                     : oorb.sample(s_on, streams.sample);
      const double weight =
          variant == Variant::kFull ? weight_for(batch.source) : 1.0;
      const UpdateDiagnostics diag = agent.update_step(batch, weight, streams.update);
      mean.critic_loss += diag.critic_loss;
      mean.penalty_value += diag.penalty_value;
      if (diag.policy_updated) {
        mean.policy_objective += diag.policy_objective;
        policy_updates += 1;
      }
    }
    if (schedule.t_off > 0) {
      mean.critic_loss /= static_cast<double>(schedule.t_off);
      mean.penalty_value /= static_cast<double>(schedule.t_off);
    }
    if (policy_updates > 0) {
      mean.policy_objective /= static_cast<double>(policy_updates);
    }

    if (iteration % schedule.eval_every == 0) {
      eval_row(iteration, s_on, mean);
    }
  } while (s_on <= schedule.s_total);

  return record;
}

double evaluate(const std::function<Vec(const Vec&)>& policy, Env& env, int episodes,
                std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  const Rng seed_root(seed);
  double total = 0.0;
  for (int episode = 0; episode < episodes; ++episode) {
    Vec obs = env.reset(seed_root.split(episode).seed());
    double episode_return = 0.0;
    while (true) {
      const StepResult step = env.step(policy(obs));
      episode_return += step.reward;
      if (step.terminal || step.truncated) break;
      obs = step.observation;
    }
    total += episode_return;
  }
  return total / static_cast<double>(episodes);
}

double evaluate(const Agent& agent, Env& env, int episodes, std::uint64_t seed) {
  return evaluate([&agent](const Vec& obs) { return agent.eval_action(obs); }, env, episodes,
                  seed);
}

double normalized_score(double raw, double random_ref, double expert_ref) {
  if (!(expert_ref > random_ref)) {
    throw std::invalid_argument("normalized_score: expert_ref must exceed random_ref");
  }
  return 100.0 * (raw - random_ref) / (expert_ref - random_ref);
}

std::pair<double, double> compute_references(Env& env, std::uint64_t seed, int episodes) {
  const Rng root(seed);
  Rng action_rng = root.split(1);
  const EnvSpec& spec = env.spec();

  const auto random_policy = [&](const Vec&) {
    Vec action(spec.act_dim);
    for (int d = 0; d < spec.act_dim; ++d) {
      action[d] = action_rng.uniform(spec.action_low[d], spec.action_high[d]);
    }
    return action;
  };
  const double random_ref = evaluate(random_policy, env, episodes, root.split(2).seed());

  const auto expert_policy = [&env, &spec](const Vec&) {
    return scripted_expert_action(spec.name, env.physical_state());
  };
  const double expert_ref = evaluate(expert_policy, env, episodes, root.split(3).seed());
  return {random_ref, expert_ref};
}

void write_metrics_csv(const RunRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "iteration,s_on,mean_return,normalized_score,critic_loss,penalty_value,"
         "policy_objective\n";
  for (const EvalRow& row : record.rows) {
    out << row.iteration << ',' << row.s_on << ',' << format_double(row.mean_return) << ','
        << format_double(row.normalized_score) << ',' << format_double(row.critic_loss) << ','
        << format_double(row.penalty_value) << ',' << format_double(row.policy_objective)
        << '\n';
  }
  if (!out.good()) throw std::runtime_error("write_metrics_csv: write failed for " + path);
}

}  // namespace apl
