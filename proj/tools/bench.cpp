// Update-throughput probe: times GCQL and GCTD3BC update steps at the
// default desk-scale configuration to size training-run budgets.
#include <chrono>
#include <iostream>

#include "apl/dataset.hpp"
#include "apl/env.hpp"
#include "apl/gcql.hpp"
#include "apl/gctd3bc.hpp"
#include "apl/oorb.hpp"
#include "apl/rng.hpp"

int main() {
  using Clock = std::chrono::steady_clock;

  auto env = apl::make_env("pendulum");
  const apl::EnvSpec& spec = env->spec();

  apl::OORBConfig oorb_config;
  apl::OORB oorb(spec.obs_dim, spec.act_dim, oorb_config);
  const apl::DatasetFile data = apl::generate_dataset(*env, "random", 5000, 7);
  oorb.load_offline(data.records);

  apl::Rng rng(42);
  {
    apl::GCQLAgent agent(spec, apl::GCQLConfig{}, rng);
    const int steps = 200;
    const auto start = Clock::now();
    for (int i = 0; i < steps; ++i) {
      const apl::SourcedBatch batch = oorb.sample(0, rng);
      agent.update_step(batch, 1.0, rng);
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << "gcql (penalty on): " << steps / seconds << " updates/s  ("
              << 1e3 * seconds / steps << " ms/update)\n";

    const auto start2 = Clock::now();
    for (int i = 0; i < steps; ++i) {
      const apl::SourcedBatch batch = oorb.sample(0, rng);
      agent.update_step(batch, 0.0, rng);
    }
    const double seconds2 = std::chrono::duration<double>(Clock::now() - start2).count();
    std::cout << "gcql (penalty off): " << steps / seconds2 << " updates/s ("
              << 1e3 * seconds2 / steps << " ms/update)\n";
  }
  {
    apl::GCTD3BCAgent agent(spec, apl::GCTD3BCConfig{}, rng);
    const int steps = 2000;
    const auto start = Clock::now();
    for (int i = 0; i < steps; ++i) {
      const apl::SourcedBatch batch = oorb.sample(0, rng);
      agent.update_step(batch, 1.0, rng);
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << "gctd3bc: " << steps / seconds << " updates/s (" << 1e3 * seconds / steps
              << " ms/update)\n";
  }
  return 0;
}
