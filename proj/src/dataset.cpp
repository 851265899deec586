#include "apl/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "apl/errors.hpp"
#include "apl/gcql.hpp"
#include "apl/orchestrator.hpp"
#include "apl/rng.hpp"

namespace apl {

namespace {

using nlohmann::json;

json transition_to_json(const Transition& t) {
  return json{{"s", t.state},
              {"a", t.action},
              {"r", t.reward},
              {"s2", t.next_state},
              {"done", t.terminal ? 1 : 0}};
}

Vec json_vector(const json& value, int expected_dim, const char* key, long line) {
  if (!value.is_array() || static_cast<int>(value.size()) != expected_dim) {
    throw ParseError(std::string("record field '") + key + "' must be an array of length " +
                         std::to_string(expected_dim),
                     line);
  }
  Vec out;
  out.reserve(value.size());
  for (const auto& entry : value) {
    if (!entry.is_number()) {
      throw ParseError(std::string("record field '") + key + "' holds a non-number", line);
    }
    out.push_back(entry.get<double>());
  }
  return out;
}

// Rolls episodes under a per-step behavior callback until `n` records exist.
std::vector<Transition> roll_behavior(
    Env& env, std::int64_t n, Rng& rng,
    const std::function<Vec(const Vec& physical_state, Rng& rng)>& behavior) {
  std::vector<Transition> records;
  records.reserve(n);
  Vec obs = env.reset(rng.raw());
  while (static_cast<std::int64_t>(records.size()) < n) {
    const Vec action = behavior(env.physical_state(), rng);
    const StepResult step = env.step(action);
    records.push_back({obs, action, step.reward, step.observation, step.terminal});
    if (step.terminal || step.truncated) {
      obs = env.reset(rng.raw());
    } else {
      obs = step.observation;
    }
  }
  return records;
}

Vec uniform_action(const EnvSpec& spec, Rng& rng) {
  Vec action(spec.act_dim);
  for (int d = 0; d < spec.act_dim; ++d) {
    action[d] = rng.uniform(spec.action_low[d], spec.action_high[d]);
  }
  return action;
}

Vec noisy_expert_action(const EnvSpec& spec, const Vec& physical_state, Rng& rng) {
  Vec action = scripted_expert_action(spec.name, physical_state);
  for (int d = 0; d < spec.act_dim; ++d) {
    action[d] += 0.05 * spec.action_half_range(d) * rng.normal();
    action[d] = std::clamp(action[d], spec.action_low[d], spec.action_high[d]);
  }
  return action;
}

// Mean return of the 50/50 expert/random mixture; defines the medium tier.
double medium_tier_return(Env& env, std::uint64_t seed, int episodes) {
  Rng rng(seed);
  const EnvSpec& spec = env.spec();
  double total = 0.0;
  for (int episode = 0; episode < episodes; ++episode) {
    env.reset(rng.raw());
    double episode_return = 0.0;
    while (true) {
      const Vec action = rng.uniform() < 0.5
                             ? scripted_expert_action(spec.name, env.physical_state())
                             : uniform_action(spec, rng);
      const StepResult step = env.step(action);
      episode_return += step.reward;
      if (step.terminal || step.truncated) break;
    }
    total += episode_return;
  }
  return total / episodes;
}

// Chronological replay log of an online GCQL run stopped when evaluation
// first reaches the medium-tier return; `n` caps the env-step budget.
std::vector<Transition> roll_medium_replay(Env& env, std::int64_t n, std::uint64_t seed) {
  const double medium_ref = medium_tier_return(env, Rng(seed).split(10).seed(), 20);

  Rng init = Rng(seed).split(0);
  GCQLAgent agent(env.spec(), GCQLConfig{}, init);
  OORBConfig oorb_config;
  oorb_config.offline_capacity = std::max<std::size_t>(oorb_config.offline_capacity, n);
  OORB oorb(env.spec().obs_dim, env.spec().act_dim, oorb_config);
  TrainStreams streams = TrainStreams::from_seed(Rng(seed).split(1).seed());

  const std::int64_t steps_per_iter = 1000;
  std::vector<Transition> records;
  records.reserve(n);
  std::unique_ptr<Env> eval_env = env.clone_fresh();

  Vec obs = env.reset(streams.collect.raw());
  std::int64_t s_on = 0;
  int iteration = 0;
  while (s_on < n) {
    iteration += 1;
    const std::int64_t chunk = std::min(steps_per_iter, n - s_on);
    for (std::int64_t t = 0; t < chunk; ++t) {
      const Vec action = agent.explore_action(obs, streams.collect);
      const StepResult step = env.step(action);
      const Transition transition{obs, action, step.reward, step.observation, step.terminal};
      records.push_back(transition);
      oorb.push_online(transition);
      obs = (step.terminal || step.truncated) ? env.reset(streams.collect.raw())
                                              : step.observation;
    }
    s_on += chunk;

    for (std::int64_t t = 0; t < steps_per_iter; ++t) {
      if (oorb.offline_size() < oorb.config().batch_size) break;
      const SourcedBatch batch = oorb.sample(s_on, streams.sample);
      agent.update_step(batch, weight_for(batch.source), streams.update);
    }

    const double eval_return =
        evaluate(agent, *eval_env, 10, streams.eval_root.split(iteration).seed());
    if (eval_return >= medium_ref) break;
  }
  return records;
}

}  // namespace

void write_dataset(const std::string& path, const DatasetFile& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  const json header{{"format_version", dataset.header.format_version},
                    {"env_name", dataset.header.env_name},
                    {"obs_dim", dataset.header.obs_dim},
                    {"act_dim", dataset.header.act_dim},
                    {"n_records", dataset.header.n_records},
                    {"behavior_tag", dataset.header.behavior_tag},
                    {"generator_seed", dataset.header.generator_seed}};
  out << header.dump() << '\n';
  for (const Transition& t : dataset.records) {
    out << transition_to_json(t).dump() << '\n';
  }
  if (!out.good()) throw std::runtime_error("write_dataset: write failed for " + path);
}

DatasetFile read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);

  std::string line;
  long line_number = 1;
  if (!std::getline(in, line)) throw ParseError("missing header line", 1);

  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid header JSON: ") + e.what(), 1);
  }

  DatasetFile dataset;
  try {
    dataset.header.format_version = header.at("format_version").get<int>();
    dataset.header.env_name = header.at("env_name").get<std::string>();
    dataset.header.obs_dim = header.at("obs_dim").get<int>();
    dataset.header.act_dim = header.at("act_dim").get<int>();
    dataset.header.n_records = header.at("n_records").get<std::int64_t>();
    dataset.header.behavior_tag = header.at("behavior_tag").get<std::string>();
    dataset.header.generator_seed = header.at("generator_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad header field: ") + e.what(), 1);
  }
  if (dataset.header.format_version != 1) {
    throw ParseError("unsupported format_version " +
                         std::to_string(dataset.header.format_version) + " (expected 1)",
                     1);
  }

  dataset.records.reserve(dataset.header.n_records);
  for (std::int64_t i = 0; i < dataset.header.n_records; ++i) {
    line_number += 1;
    if (!std::getline(in, line)) {
      throw ParseError("dataset truncated: header promises " +
                           std::to_string(dataset.header.n_records) + " records, file ends after " +
                           std::to_string(i),
                       line_number);
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid record JSON: ") + e.what(), line_number);
    }
    if (!record.is_object() || !record.contains("s") || !record.contains("a") ||
        !record.contains("r") || !record.contains("s2") || !record.contains("done")) {
      throw ParseError("record must be an object with keys s, a, r, s2, done", line_number);
    }

    Transition t;
    t.state = json_vector(record["s"], dataset.header.obs_dim, "s", line_number);
    t.action = json_vector(record["a"], dataset.header.act_dim, "a", line_number);
    t.next_state = json_vector(record["s2"], dataset.header.obs_dim, "s2", line_number);
    if (!record["r"].is_number()) throw ParseError("record field 'r' must be a number", line_number);
    t.reward = record["r"].get<double>();
    if (!std::isfinite(t.reward)) throw ParseError("record field 'r' must be finite", line_number);
    const json& done = record["done"];
    if (!done.is_number_integer() || (done.get<long>() != 0 && done.get<long>() != 1)) {
      throw ParseError("record field 'done' must be 0 or 1", line_number);
    }
    t.terminal = done.get<long>() == 1;
    dataset.records.push_back(std::move(t));
  }

  while (std::getline(in, line)) {
    line_number += 1;
    if (!line.empty()) {
      throw ParseError("unexpected content after the promised record count", line_number);
    }
  }
  return dataset;
}

DatasetFile generate_dataset(Env& env, const std::string& behavior_tag, std::int64_t n,
                             std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  const EnvSpec& spec = env.spec();

  DatasetFile dataset;
  dataset.header.env_name = spec.name;
  dataset.header.obs_dim = spec.obs_dim;
  dataset.header.act_dim = spec.act_dim;
  dataset.header.behavior_tag = behavior_tag;
  dataset.header.generator_seed = seed;

  Rng rng = Rng(seed).split(2);
  if (behavior_tag == "random") {
    dataset.records = roll_behavior(
        env, n, rng, [&spec](const Vec&, Rng& r) { return uniform_action(spec, r); });
  } else if (behavior_tag == "expert") {
    dataset.records = roll_behavior(env, n, rng, [&spec](const Vec& state, Rng& r) {
      return noisy_expert_action(spec, state, r);
    });
  } else if (behavior_tag == "medium") {
    dataset.records = roll_behavior(env, n, rng, [&spec](const Vec& state, Rng& r) {
      return r.uniform() < 0.5 ? scripted_expert_action(spec.name, state)
                               : uniform_action(spec, r);
    });
  } else if (behavior_tag == "medium-replay") {
    dataset.records = roll_medium_replay(env, n, seed);
  } else if (behavior_tag == "medium-expert") {
    DatasetFile medium = generate_dataset(env, "medium", n / 2, Rng(seed).split(3).seed());
    DatasetFile expert = generate_dataset(env, "expert", n / 2, Rng(seed).split(4).seed());
    dataset.records = std::move(medium.records);
    dataset.records.insert(dataset.records.end(), expert.records.begin(),
                           expert.records.end());
  } else {
    throw std::invalid_argument("generate_dataset: unknown behavior tag '" + behavior_tag +
                                "' (random|medium|expert|medium-replay|medium-expert)");
  }

  dataset.header.n_records = static_cast<std::int64_t>(dataset.records.size());
  return dataset;
}

}  // namespace apl
