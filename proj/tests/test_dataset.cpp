#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "apl/dataset.hpp"
#include "apl/errors.hpp"
#include "apl/rng.hpp"

using namespace apl;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/apl_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

DatasetFile small_dataset() {
  DatasetFile dataset;
  dataset.header.env_name = "pendulum";
  dataset.header.obs_dim = 3;
  dataset.header.act_dim = 1;
  dataset.header.behavior_tag = "random";
  dataset.header.generator_seed = 12345;
  Rng rng(1);
  for (int i = 0; i < 3; ++i) {
    Transition t;
    t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-8, 8)};
    t.action = {rng.uniform(-2, 2)};
    t.reward = rng.uniform(-17, 0);
    t.next_state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-8, 8)};
    t.terminal = i == 2;
    dataset.records.push_back(t);
  }
  dataset.header.n_records = 3;
  return dataset;
}

}  // namespace

TEST_CASE("dataset: write/read round-trips exactly, field by field") {
  const TempFile file("roundtrip.jsonl");
  const DatasetFile original = small_dataset();
  write_dataset(file.path, original);
  const DatasetFile loaded = read_dataset(file.path);

  CHECK(loaded.header.format_version == original.header.format_version);
  CHECK(loaded.header.env_name == original.header.env_name);
  CHECK(loaded.header.obs_dim == original.header.obs_dim);
  CHECK(loaded.header.act_dim == original.header.act_dim);
  CHECK(loaded.header.n_records == original.header.n_records);
  CHECK(loaded.header.behavior_tag == original.header.behavior_tag);
  CHECK(loaded.header.generator_seed == original.header.generator_seed);
  REQUIRE(loaded.records.size() == original.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    CHECK(loaded.records[i].state == original.records[i].state);
    CHECK(loaded.records[i].action == original.records[i].action);
    CHECK(loaded.records[i].reward == original.records[i].reward);
    CHECK(loaded.records[i].next_state == original.records[i].next_state);
    CHECK(loaded.records[i].terminal == original.records[i].terminal);
  }
}

TEST_CASE("dataset: truncated file reports the offending line") {
  const TempFile file("truncated.jsonl");
  DatasetFile dataset = small_dataset();
  dataset.header.n_records = 5;  // promises more than the 3 records written
  write_dataset(file.path, dataset);
  try {
    read_dataset(file.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 5);  // header is line 1; records 2-4 parse; line 5 missing
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("dataset: done must be stored as integer 0/1") {
  const TempFile file("done.jsonl");
  {
    std::ofstream out(file.path);
    out << R"({"format_version":1,"env_name":"pendulum","obs_dim":1,"act_dim":1,)"
        << R"("n_records":1,"behavior_tag":"random","generator_seed":0})" << "\n";
    out << R"({"s":[0.0],"a":[0.0],"r":-1.0,"s2":[0.0],"done":true})" << "\n";
  }
  try {
    read_dataset(file.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("done") != std::string::npos);
  }

  {
    std::ofstream out(file.path);
    out << R"({"format_version":1,"env_name":"pendulum","obs_dim":1,"act_dim":1,)"
        << R"("n_records":1,"behavior_tag":"random","generator_seed":0})" << "\n";
    out << R"({"s":[0.0],"a":[0.0],"r":-1.0,"s2":[0.0],"done":2})" << "\n";
  }
  CHECK_THROWS_AS(read_dataset(file.path), ParseError);
}

TEST_CASE("dataset: version and dimension mismatches are distinct parse errors") {
  const TempFile file("version.jsonl");
  {
    std::ofstream out(file.path);
    out << R"({"format_version":7,"env_name":"pendulum","obs_dim":1,"act_dim":1,)"
        << R"("n_records":0,"behavior_tag":"random","generator_seed":0})" << "\n";
  }
  try {
    read_dataset(file.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("format_version") != std::string::npos);
  }

  {
    std::ofstream out(file.path);
    out << R"({"format_version":1,"env_name":"pendulum","obs_dim":2,"act_dim":1,)"
        << R"("n_records":1,"behavior_tag":"random","generator_seed":0})" << "\n";
    out << R"({"s":[0.0],"a":[0.0],"r":-1.0,"s2":[0.0,0.0],"done":0})" << "\n";
  }
  try {
    read_dataset(file.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("'s'") != std::string::npos);
  }
}

TEST_CASE("dataset: trailing content beyond n_records is rejected") {
  const TempFile file("trailing.jsonl");
  write_dataset(file.path, small_dataset());
  {
    std::ofstream out(file.path, std::ios::app);
    out << R"({"s":[0,0,0],"a":[0],"r":0,"s2":[0,0,0],"done":0})" << "\n";
  }
  CHECK_THROWS_AS(read_dataset(file.path), ParseError);
}

TEST_CASE("generate_dataset: unknown tag rejected, n validated") {
  auto env = make_env("pendulum");
  CHECK_THROWS_AS(generate_dataset(*env, "superb", 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(*env, "random", 0, 1), std::invalid_argument);
}

TEST_CASE("generate_dataset: pure function of (env, tag, n, seed)") {
  auto env_a = make_env("pointmass");
  auto env_b = make_env("pointmass");
  const DatasetFile a = generate_dataset(*env_a, "medium", 500, 9);
  const DatasetFile b = generate_dataset(*env_b, "medium", 500, 9);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].state == b.records[i].state);
    CHECK(a.records[i].action == b.records[i].action);
    CHECK(a.records[i].reward == b.records[i].reward);
  }
}

TEST_CASE("generate_dataset: random tier actions cover the box uniformly") {
  auto env = make_env("pendulum");
  const DatasetFile dataset = generate_dataset(*env, "random", 10000, 4);
  CHECK(dataset.header.n_records == 10000);
  double mean = 0.0;
  for (const Transition& t : dataset.records) mean += t.action[0] / 10000.0;
  // Box center is 0, half-range 2: mean within +-0.1 * half_range.
  CHECK(std::abs(mean) < 0.2);
}

TEST_CASE("generate_dataset: episode structure respects env truncation rules") {
  auto env = make_env("pendulum");
  const DatasetFile dataset = generate_dataset(*env, "expert", 500, 5);
  // Pendulum never terminates, so no record may carry a terminal flag.
  for (const Transition& t : dataset.records) CHECK(!t.terminal);
  // Chronological: within an episode, next_state chains into state.
  int chained = 0;
  for (int i = 1; i < 500; ++i) {
    if (dataset.records[i].state == dataset.records[i - 1].next_state) chained += 1;
  }
  CHECK(chained >= 496);  // one break per 200-step episode boundary
}

TEST_CASE("generate_dataset: medium-expert concatenates equal halves, tags present") {
  auto env = make_env("pointmass");
  const DatasetFile dataset = generate_dataset(*env, "medium-expert", 1000, 6);
  CHECK(dataset.header.n_records == 1000);
  CHECK(dataset.header.behavior_tag.find("medium") != std::string::npos);
  CHECK(dataset.header.behavior_tag.find("expert") != std::string::npos);

  // The expert half tracks the goal far more tightly than the medium half.
  double medium_reward = 0.0, expert_reward = 0.0;
  for (int i = 0; i < 500; ++i) medium_reward += dataset.records[i].reward / 500.0;
  for (int i = 500; i < 1000; ++i) expert_reward += dataset.records[i].reward / 500.0;
  CHECK(expert_reward > medium_reward);
}

TEST_CASE("generate_dataset: tier ordering on mean episode returns") {
  auto env = make_env("pendulum");
  const auto episode_returns = [](const DatasetFile& dataset) {
    std::vector<double> returns;
    double current = 0.0;
    int steps = 0;
    for (const Transition& t : dataset.records) {
      current += t.reward;
      steps += 1;
      if (steps == 200) {  // pendulum episodes always truncate at 200
        returns.push_back(current);
        current = 0.0;
        steps = 0;
      }
    }
    return returns;
  };
  const auto mean_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / v.size();
    return m;
  };

  const double random_mean = mean_of(episode_returns(generate_dataset(*env, "random", 4000, 7)));
  const double medium_mean = mean_of(episode_returns(generate_dataset(*env, "medium", 4000, 7)));
  const double expert_mean = mean_of(episode_returns(generate_dataset(*env, "expert", 4000, 7)));
  CHECK(random_mean < medium_mean);
  CHECK(medium_mean < expert_mean);
}
