#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "apl/env.hpp"
#include "apl/orchestrator.hpp"
#include "apl/rng.hpp"

using namespace apl;

namespace {

// Records every update call; acts as a fixed zero policy.
class SpyAgent final : public Agent {
 public:
  UpdateDiagnostics update_step(const SourcedBatch& batch, double weight, Rng&) override {
    sources.push_back(batch.source);
    weights.push_back(weight);
    UpdateDiagnostics diag;
    diag.critic_loss = 1.0;
    diag.policy_objective = 2.0;
    diag.policy_updated = true;
    return diag;
  }

  Vec explore_action(const Vec&, Rng&) override { return Vec{0.0}; }
  Vec eval_action(const Vec&) const override { return Vec{0.0}; }

  std::vector<BatchSource> sources;
  std::vector<double> weights;
};

std::vector<Transition> synthetic_dataset(int n) {
  Rng rng(55);
  std::vector<Transition> dataset;
  for (int i = 0; i < n; ++i) {
    dataset.push_back(Transition{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-8, 8)},
                                 {rng.uniform(-2, 2)},
                                 rng.uniform(-10, 0),
                                 {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-8, 8)},
                                 false});
  }
  return dataset;
}

OORBConfig small_oorb() {
  OORBConfig config;
  config.p = 0.5;
  config.warmup_steps = 60;
  config.online_capacity = 64;
  config.offline_capacity = 5000;
  config.batch_size = 8;
  return config;
}

Schedule small_schedule() {
  Schedule schedule;
  schedule.t_initial = 5;
  schedule.t_on = 50;
  schedule.t_off = 7;
  schedule.s_total = 150;
  schedule.eval_every = 2;
  schedule.eval_episodes = 1;
  return schedule;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/apl_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("normalized_score: anchors and linearity") {
  CHECK(normalized_score(-1200.0, -1200.0, -150.0) == 0.0);
  CHECK(normalized_score(-150.0, -1200.0, -150.0) == 100.0);
  CHECK(normalized_score(-675.0, -1200.0, -150.0) == doctest::Approx(50.0));
  CHECK_THROWS_AS(normalized_score(0.0, 5.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(normalized_score(0.0, 5.0, 1.0), std::invalid_argument);
}

TEST_CASE("evaluate: deterministic, and episodes = 1 equals a single rollout") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  const double a = evaluate(agent, *env, 3, 99);
  const double b = evaluate(agent, *env, 3, 99);
  CHECK(a == b);

  const double single = evaluate(agent, *env, 1, 123);
  auto rollout_env = make_env("pendulum");
  Vec obs = rollout_env->reset(Rng(123).split(0).seed());
  double total = 0.0;
  while (true) {
    const StepResult step = rollout_env->step(agent.eval_action(obs));
    total += step.reward;
    if (step.terminal || step.truncated) break;
    obs = step.observation;
  }
  CHECK(single == total);
}

TEST_CASE("compute_references: reproducible, expert above random, random negative") {
  auto env = make_env("pendulum");
  const auto [random_a, expert_a] = compute_references(*env, 7, 20);
  const auto [random_b, expert_b] = compute_references(*env, 7, 20);
  CHECK(random_a == random_b);
  CHECK(expert_a == expert_b);
  CHECK(expert_a > random_a);
  CHECK(random_a < 0.0);
}

TEST_CASE("pretrain: offline-only batches, weight 1, exact step count") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  OORB oorb(3, 1, small_oorb());
  oorb.load_offline(synthetic_dataset(100));
  TrainStreams streams = TrainStreams::from_seed(11);
  const UpdateDiagnostics diag = pretrain(agent, oorb, small_schedule(), streams);

  CHECK(agent.sources.size() == 5);
  for (const BatchSource source : agent.sources) CHECK(source == BatchSource::kOffline);
  for (const double weight : agent.weights) CHECK(weight == 1.0);
  CHECK(diag.critic_loss == 1.0);
  CHECK(oorb.online_size() == 0);  // no interaction happened
}

TEST_CASE("pretrain: t_initial = 0 performs no updates; empty buffer faults") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  OORB empty(3, 1, small_oorb());
  Schedule schedule = small_schedule();
  TrainStreams streams = TrainStreams::from_seed(12);
  CHECK_THROWS_AS(pretrain(agent, empty, schedule, streams), std::runtime_error);

  schedule.t_initial = 0;
  CHECK_NOTHROW(pretrain(agent, empty, schedule, streams));
  CHECK(agent.sources.empty());
}

TEST_CASE("run: counter arithmetic and evaluation cadence") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  OORB oorb(3, 1, small_oorb());
  oorb.load_offline(synthetic_dataset(100));
  TrainStreams streams = TrainStreams::from_seed(13);
  const Schedule schedule = small_schedule();
  pretrain(agent, oorb, schedule, streams);
  const RunRecord record =
      run(agent, *env, oorb, schedule, Variant::kFull, 13, -1200.0, -150.0, streams);

  // s_total = 150, t_on = 50: iterations at s_on 50/100/150/200 (checked
  // after each), so 4 iterations and t_initial + 4 * t_off updates total.
  CHECK(agent.sources.size() == 5 + 4 * 7);
  CHECK(oorb.offline_size() == 100 + 200);
  CHECK(oorb.online_size() == 64);

  REQUIRE(record.rows.size() == 3);  // iteration 0 + evals at 2 and 4
  CHECK(record.rows[0].iteration == 0);
  CHECK(record.rows[0].s_on == 0);
  CHECK(record.rows[1].iteration == 2);
  CHECK(record.rows[1].s_on == 100);
  CHECK(record.rows[2].iteration == 4);
  CHECK(record.rows[2].s_on == 200);
  for (std::size_t i = 1; i < record.rows.size(); ++i) {
    CHECK(record.rows[i].s_on > record.rows[i - 1].s_on);
  }
  CHECK(record.master_seed == 13);
}

TEST_CASE("run: full-mode weights follow the batch source") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  OORB oorb(3, 1, small_oorb());
  oorb.load_offline(synthetic_dataset(100));
  TrainStreams streams = TrainStreams::from_seed(14);
  const Schedule schedule = small_schedule();
  pretrain(agent, oorb, schedule, streams);
  run(agent, *env, oorb, schedule, Variant::kFull, 14, -1200.0, -150.0, streams);

  REQUIRE(agent.sources.size() == agent.weights.size());
  int online_count = 0;
  for (std::size_t i = 0; i < agent.sources.size(); ++i) {
    const double expected = agent.sources[i] == BatchSource::kOnline ? 0.0 : 1.0;
    CHECK(agent.weights[i] == expected);
    if (agent.sources[i] == BatchSource::kOnline) online_count += 1;
  }
  CHECK(online_count > 0);  // mixing kicked in after the warm-up
}

TEST_CASE("run: WG sees the full-mode source sequence with weight pinned to 1") {
  const Schedule schedule = small_schedule();

  SpyAgent full_agent;
  {
    auto env = make_env("pendulum");
    OORB oorb(3, 1, small_oorb());
    oorb.load_offline(synthetic_dataset(100));
    TrainStreams streams = TrainStreams::from_seed(15);
    pretrain(full_agent, oorb, schedule, streams);
    run(full_agent, *env, oorb, schedule, Variant::kFull, 15, -1200.0, -150.0, streams);
  }

  SpyAgent wg_agent;
  {
    auto env = make_env("pendulum");
    OORB oorb(3, 1, small_oorb());
    oorb.load_offline(synthetic_dataset(100));
    TrainStreams streams = TrainStreams::from_seed(15);
    pretrain(wg_agent, oorb, schedule, streams);
    run(wg_agent, *env, oorb, schedule, Variant::kWG, 15, -1200.0, -150.0, streams);
  }

  REQUIRE(full_agent.sources.size() == wg_agent.sources.size());
  for (std::size_t i = 0; i < full_agent.sources.size(); ++i) {
    CHECK(full_agent.sources[i] == wg_agent.sources[i]);
    CHECK(wg_agent.weights[i] == 1.0);
  }
}

TEST_CASE("run: WGO never samples the online buffer") {
  auto env = make_env("pendulum");
  SpyAgent agent;
  OORB oorb(3, 1, small_oorb());
  oorb.load_offline(synthetic_dataset(100));
  TrainStreams streams = TrainStreams::from_seed(16);
  const Schedule schedule = small_schedule();
  pretrain(agent, oorb, schedule, streams);
  run(agent, *env, oorb, schedule, Variant::kWGO, 16, -1200.0, -150.0, streams);

  for (std::size_t i = 0; i < agent.sources.size(); ++i) {
    CHECK(agent.sources[i] == BatchSource::kOffline);
    CHECK(agent.weights[i] == 1.0);
  }
  CHECK(oorb.online_size() == 64);  // pushes still happen
}

TEST_CASE("variant parsing round-trips") {
  CHECK(variant_from_string("full") == Variant::kFull);
  CHECK(variant_from_string("wg") == Variant::kWG);
  CHECK(variant_from_string("wgo") == Variant::kWGO);
  CHECK(to_string(Variant::kWGO) == "wgo");
  CHECK_THROWS_AS(variant_from_string("none"), std::invalid_argument);
}

TEST_CASE("metrics CSV: stable header and byte-identical for identical records") {
  RunRecord record;
  record.master_seed = 3;
  record.random_ref = -1200.0;
  record.expert_ref = -150.0;
  record.rows.push_back(EvalRow{0, 0, -1234.5678901234567, -3.2109876543210987, 1.0, 0.5, -2.0});
  record.rows.push_back(EvalRow{1, 1000, -456.78, 70.8, 0.9, 0.4, -1.5});

  const TempFile file_a("metrics_a.csv");
  const TempFile file_b("metrics_b.csv");
  write_metrics_csv(record, file_a.path);
  write_metrics_csv(record, file_b.path);

  const auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };
  const std::string a = slurp(file_a.path);
  CHECK(a == slurp(file_b.path));
  CHECK(a.find("iteration,s_on,mean_return,normalized_score,critic_loss,penalty_value,"
               "policy_objective\n") == 0);
  // Full round-trip precision for the doubles.
  CHECK(a.find("-1234.5678901234567") != std::string::npos);
}
