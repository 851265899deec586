#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "apl/config.hpp"
#include "apl/dataset.hpp"
#include "apl/env.hpp"
#include "apl/gcql.hpp"
#include "apl/gctd3bc.hpp"
#include "apl/oorb.hpp"
#include "apl/orchestrator.hpp"
#include "apl/snapshot.hpp"

namespace {

std::string resolve_out_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env_dir = std::getenv("APL_OUT_DIR"); env_dir != nullptr && *env_dir) {
    return env_dir;
  }
  return ".";
}

int run_gen_data(const std::string& env_name, const std::string& tier, std::int64_t n,
                 std::uint64_t seed, const std::string& out_path) {
  auto env = apl::make_env(env_name);
  const apl::DatasetFile dataset = apl::generate_dataset(*env, tier, n, seed);
  apl::write_dataset(out_path, dataset);
  std::cout << "wrote " << dataset.header.n_records << " " << tier << " transitions for "
            << env_name << " to " << out_path << "\n";
  return 0;
}

int run_baselines(const std::string& env_name, int episodes, std::uint64_t seed,
                  const std::string& out_path) {
  auto env = apl::make_env(env_name);
  const auto [random_ref, expert_ref] = apl::compute_references(*env, seed, episodes);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("baselines: cannot open " + out_path);
  out << "env=" << env_name << "\n";
  out << "episodes=" << episodes << "\n";
  out << "seed=" << seed << "\n";
  out << "random_ref=" << random_ref << "\n";
  out << "expert_ref=" << expert_ref << "\n";
  std::cout << "env=" << env_name << " random_ref=" << random_ref
            << " expert_ref=" << expert_ref << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  apl::RunConfig config = apl::parse_config_file(config_path);
  for (const std::string& assignment : overrides) {
    apl::apply_override(config, assignment);
  }

  const std::string out_dir = resolve_out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);

  auto env = apl::make_env(config.env);
  const apl::EnvSpec& spec = env->spec();

  apl::OORB oorb(spec.obs_dim, spec.act_dim, config.oorb);
  if (!config.dataset_path.empty()) {
    const apl::DatasetFile dataset = apl::read_dataset(config.dataset_path);
    if (dataset.header.env_name != config.env) {
      throw std::runtime_error("train: dataset " + config.dataset_path + " was generated for '" +
                               dataset.header.env_name + "', config wants '" + config.env + "'");
    }
    oorb.load_offline(dataset.records);
  }

  apl::Rng init = apl::Rng(config.seed).split(0);
  std::unique_ptr<apl::Agent> agent;
  const apl::GCQLAgent* gcql_agent = nullptr;
  const apl::GCTD3BCAgent* gctd3bc_agent = nullptr;
  if (config.agent == "gcql") {
    auto built = std::make_unique<apl::GCQLAgent>(spec, config.gcql, init);
    gcql_agent = built.get();
    agent = std::move(built);
  } else {
    auto built = std::make_unique<apl::GCTD3BCAgent>(spec, config.gctd3bc, init);
    gctd3bc_agent = built.get();
    agent = std::move(built);
  }

  auto ref_env = env->clone_fresh();
  const auto [random_ref, expert_ref] = apl::compute_references(
      *ref_env, apl::Rng(config.seed).split(5).seed(), config.ref_episodes);

  // Snapshot first: the run is fully determined by it.
  {
    std::ofstream snap(out_dir + "/config.txt", std::ios::trunc);
    if (!snap) throw std::runtime_error("train: cannot open " + out_dir + "/config.txt");
    snap << config.snapshot();
    snap << "# random_ref=" << random_ref << "\n";
    snap << "# expert_ref=" << expert_ref << "\n";
  }

  apl::TrainStreams streams = apl::TrainStreams::from_seed(config.seed);
  const apl::UpdateDiagnostics pretrain_diag =
      apl::pretrain(*agent, oorb, config.schedule, streams);
  const apl::RunRecord record =
      apl::run(*agent, *env, oorb, config.schedule, apl::variant_from_string(config.variant),
               config.seed, random_ref, expert_ref, streams, pretrain_diag);

  apl::write_metrics_csv(record, out_dir + "/metrics.csv");
  if (gcql_agent != nullptr) {
    apl::save_snapshot(*gcql_agent, config.env, out_dir + "/agent.json");
  } else if (gctd3bc_agent != nullptr) {
    apl::save_snapshot(*gctd3bc_agent, config.env, out_dir + "/agent.json");
  }

  const apl::EvalRow& last = record.rows.back();
  std::cout << "done: iterations=" << last.iteration << " s_on=" << last.s_on
            << " mean_return=" << last.mean_return
            << " normalized_score=" << last.normalized_score << "\n";
  std::cout << "metrics: " << out_dir << "/metrics.csv\n";
  return 0;
}

int run_eval(const std::string& env_name, const std::string& snapshot_path, int episodes,
             std::uint64_t seed) {
  const apl::EvalPolicy policy = apl::load_eval_policy(snapshot_path);
  if (!env_name.empty() && env_name != policy.env_name) {
    throw std::runtime_error("eval: snapshot was trained on '" + policy.env_name +
                             "', requested env '" + env_name + "'");
  }
  auto env = apl::make_env(policy.env_name);
  const double mean_return = apl::evaluate(
      [&policy](const apl::Vec& obs) { return policy.act(obs); }, *env, episodes, seed);
  std::cout << "env=" << policy.env_name << " episodes=" << episodes
            << " mean_return=" << mean_return << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive policy learning for offline-to-online RL"};
  app.require_subcommand(1);

  std::string env_name = "pendulum";
  std::string tier = "random";
  std::int64_t n_records = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string snapshot_path;
  int episodes = 10;

  auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
  gen->add_option("--env", env_name, "Environment name")->required();
  gen->add_option("--tier", tier, "random|medium|expert|medium-replay|medium-expert")
      ->required();
  gen->add_option("--n", n_records, "Number of transitions (budget cap for medium-replay)")
      ->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out_path, "Output dataset path")->required();

  auto* baselines = app.add_subcommand("baselines", "Compute normalized-score references");
  baselines->add_option("--env", env_name, "Environment name")->required();
  baselines->add_option("--episodes", episodes, "Episodes per reference")->required();
  baselines->add_option("--seed", seed, "Seed")->required();
  baselines->add_option("--out", out_path, "Output file")->required();

  auto* train = app.add_subcommand("train", "Run offline pre-training plus the online loop");
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--override", overrides, "key=value overrides (repeatable)");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved agent snapshot");
  eval->add_option("--env", env_name, "Environment name (must match the snapshot)");
  eval->add_option("--agent-snapshot", snapshot_path, "Path to agent.json")->required();
  eval->add_option("--episodes", episodes, "Evaluation episodes")->required();
  eval->add_option("--seed", seed, "Evaluation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(env_name, tier, n_records, seed, out_path);
    if (baselines->parsed()) return run_baselines(env_name, episodes, seed, out_path);
    if (train->parsed()) return run_train(config_path, overrides);
    if (eval->parsed()) return run_eval(env_name, snapshot_path, episodes, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
