#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "apl/agent.hpp"
#include "apl/env.hpp"
#include "apl/oorb.hpp"
#include "apl/rng.hpp"

namespace apl {

/// Algorithm-1 counters and budgets at desk scale.
struct Schedule {
  std::int64_t t_initial = 5000;  // offline pre-train update steps
  std::int64_t t_on = 1000;       // env steps per iteration
  std::int64_t t_off = 2000;      // update steps per iteration
  std::int64_t s_total = 20000;   // S_T: total online env-step budget
  int eval_every = 1;             // iterations between evaluations
  int eval_episodes = 10;
};

/// Ablation variants: WG pins the pessimism weight to 1 on every batch;
/// WGO additionally never samples the online buffer.
enum class Variant { kFull, kWG, kWGO };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant variant);

struct EvalRow {
  int iteration = 0;
  std::int64_t s_on = 0;
  double mean_return = 0.0;
  double normalized_score = 0.0;
  double critic_loss = 0.0;
  double penalty_value = 0.0;
  double policy_objective = 0.0;
};

struct RunRecord {
  std::uint64_t master_seed = 0;
  double random_ref = 0.0;
  double expert_ref = 0.0;
  std::vector<EvalRow> rows;  // append-only, ordered by s_on
};

/// The independent random streams of one training run, all derived from the
/// master seed: agent updates, OORB source/index draws, collection, and
/// evaluation seeding. Keeping OORB draws on their own stream makes the WG
/// variant see the same source sequence as the full algorithm.
struct TrainStreams {
  Rng update;
  Rng sample;
  Rng collect;
  Rng eval_root;

  static TrainStreams from_seed(std::uint64_t master_seed);
};

/// Offline pre-training: t_initial update steps with every batch drawn while
/// the online step counter is 0, hence offline-sourced with weight 1; no
/// environment interaction. Returns mean diagnostics over the steps.
/// Throws if t_initial > 0 and the offline buffer is empty.
UpdateDiagnostics pretrain(Agent& agent, OORB& oorb, const Schedule& schedule,
                           TrainStreams& streams);

/// The interleaved interaction/update loop of Algorithm 1, run until the
/// cumulative online steps exceed s_total (checked after each iteration).
/// Records an iteration-0 row with the post-pretrain evaluation, then one row
/// per eval_every iterations. `pretrain_diag` fills the iteration-0 loss
/// columns.
RunRecord run(Agent& agent, Env& env, OORB& oorb, const Schedule& schedule, Variant variant,
              std::uint64_t master_seed, double random_ref, double expert_ref,
              TrainStreams& streams, const UpdateDiagnostics& pretrain_diag = {});

/// Mean undiscounted return of a deterministic policy over fresh episodes,
/// env instances seeded from `seed`.
double evaluate(const std::function<Vec(const Vec&)>& policy, Env& env, int episodes,
                std::uint64_t seed);
double evaluate(const Agent& agent, Env& env, int episodes, std::uint64_t seed);

/// 100 * (raw - random_ref) / (expert_ref - random_ref). Throws if the scale
/// is degenerate (expert_ref <= random_ref).
double normalized_score(double raw, double random_ref, double expert_ref);

/// Mean returns of the uniform-random policy and the scripted expert, the 0
/// and 100 anchors of the normalized score.
std::pair<double, double> compute_references(Env& env, std::uint64_t seed, int episodes);

/// Metrics CSV: header then one row per evaluation, shortest round-trip
/// number formatting so identical runs produce byte-identical files.
void write_metrics_csv(const RunRecord& record, const std::string& path);

}  // namespace apl
