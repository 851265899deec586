#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "apl/mlp.hpp"
#include "apl/rng.hpp"

namespace apl {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int act_dim = 0;
  Vec action_low;
  Vec action_high;
  int max_episode_steps = 0;
  double dt = 0.0;

  double action_half_range(int d = 0) const { return 0.5 * (action_high[d] - action_low[d]); }
};

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool terminal = false;   // true environment termination only
  bool truncated = false;  // time-limit cutoff; never terminal
};

/// Deterministic, seedable toy continuous-control environment. Actions are
/// clamped into the action box before the dynamics see them. Stepping a
/// finished episode throws; call reset first.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Vec reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Vec& action) = 0;
  /// Raw physical state (pendulum: [theta, theta_dot]; pointmass:
  /// [px, py, vx, vy]). Feeds the scripted experts.
  virtual Vec physical_state() const = 0;
  /// Overwrites the physical state mid-episode (step counters untouched).
  virtual void set_physical_state(const Vec& state) = 0;
  virtual std::unique_ptr<Env> clone_fresh() const = 0;
};

/// Factory by name: "pendulum" or "pointmass". Unknown name throws.
std::unique_ptr<Env> make_env(const std::string& name);

/// Hand-written controller used for dataset generation and as the expert
/// reference of the normalized score. Actions lie within the env's bounds.
Vec scripted_expert_action(const std::string& env_name, const Vec& physical_state);

}  // namespace apl
