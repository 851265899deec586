#include "apl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace apl {

namespace {

double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

// Wrap an angle into (-pi, pi].
double wrap_angle(double theta) {
  double wrapped = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (wrapped <= 0.0) wrapped += 2.0 * M_PI;
  return wrapped - M_PI;
}

// Torque-limited swing-up: g=10, m=1, l=1, dt=0.05, torque in [-2, 2],
// angular velocity clamped to [-8, 8]. theta = 0 is upright; reward is the
// classic negative quadratic cost on the pre-step state.
class PendulumEnv final : public Env {
 public:
  PendulumEnv() {
    spec_.name = "pendulum";
    spec_.obs_dim = 3;
    spec_.act_dim = 1;
    spec_.action_low = {-kMaxTorque};
    spec_.action_high = {kMaxTorque};
    spec_.max_episode_steps = 200;
    spec_.dt = kDt;
  }

  const EnvSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t seed) override {
    Rng rng(seed);
    theta_ = rng.uniform(-M_PI, M_PI);
    theta_dot_ = rng.uniform(-1.0, 1.0);
    elapsed_steps_ = 0;
    finished_ = false;
    return observation();
  }

  StepResult step(const Vec& action) override {
    if (finished_) {
      throw std::logic_error("pendulum: episode finished; call reset before stepping");
    }
    if (action.size() != 1) {
      throw std::invalid_argument("pendulum: action must have 1 dimension");
    }
    const double torque = clamp(action[0], -kMaxTorque, kMaxTorque);

    const double cost = wrap_angle(theta_) * wrap_angle(theta_) +
                        0.1 * theta_dot_ * theta_dot_ + 0.001 * torque * torque;

    theta_dot_ += (3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                   3.0 / (kMass * kLength * kLength) * torque) *
                  kDt;
    theta_dot_ = clamp(theta_dot_, -kMaxSpeed, kMaxSpeed);
    theta_ += theta_dot_ * kDt;
    elapsed_steps_ += 1;

    StepResult result;
    result.observation = observation();
    result.reward = -cost;
    result.terminal = false;
    result.truncated = elapsed_steps_ >= spec_.max_episode_steps;
    finished_ = result.truncated;
    return result;
  }

  Vec physical_state() const override { return {theta_, theta_dot_}; }

  void set_physical_state(const Vec& state) override {
    if (state.size() != 2) {
      throw std::invalid_argument("pendulum: physical state is [theta, theta_dot]");
    }
    theta_ = state[0];
    theta_dot_ = clamp(state[1], -kMaxSpeed, kMaxSpeed);
  }

  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<PendulumEnv>(); }

  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kMaxSpeed = 8.0;

 private:
  Vec observation() const { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  int elapsed_steps_ = 0;
  bool finished_ = false;
};

// 2-D double integrator driving toward the origin. Acceleration command in
// [-1, 1]^2, velocity clamped to [-5, 5] per axis, terminal inside a 0.05
// goal radius, truncation at 100 steps.
class PointMassEnv final : public Env {
 public:
  PointMassEnv() {
    spec_.name = "pointmass";
    spec_.obs_dim = 4;
    spec_.act_dim = 2;
    spec_.action_low = {-1.0, -1.0};
    spec_.action_high = {1.0, 1.0};
    spec_.max_episode_steps = 100;
    spec_.dt = kDt;
  }

  const EnvSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t seed) override {
    Rng rng(seed);
    // Start outside the goal region so episodes have work to do.
    do {
      pos_[0] = rng.uniform(-1.0, 1.0);
      pos_[1] = rng.uniform(-1.0, 1.0);
    } while (std::hypot(pos_[0], pos_[1]) < 0.2);
    vel_[0] = rng.uniform(-0.1, 0.1);
    vel_[1] = rng.uniform(-0.1, 0.1);
    elapsed_steps_ = 0;
    finished_ = false;
    return observation();
  }

  StepResult step(const Vec& action) override {
    if (finished_) {
      throw std::logic_error("pointmass: episode finished; call reset before stepping");
    }
    if (action.size() != 2) {
      throw std::invalid_argument("pointmass: action must have 2 dimensions");
    }
    double ax = clamp(action[0], -1.0, 1.0);
    double ay = clamp(action[1], -1.0, 1.0);

    const double dist = std::hypot(pos_[0], pos_[1]);
    const double reward = -dist - 0.01 * (ax * ax + ay * ay);

    vel_[0] = clamp(vel_[0] + ax * kDt, -kMaxSpeed, kMaxSpeed);
    vel_[1] = clamp(vel_[1] + ay * kDt, -kMaxSpeed, kMaxSpeed);
    pos_[0] += vel_[0] * kDt;
    pos_[1] += vel_[1] * kDt;
    elapsed_steps_ += 1;

    StepResult result;
    result.observation = observation();
    result.reward = reward;
    result.terminal = std::hypot(pos_[0], pos_[1]) < kGoalRadius;
    result.truncated = !result.terminal && elapsed_steps_ >= spec_.max_episode_steps;
    finished_ = result.terminal || result.truncated;
    return result;
  }

  Vec physical_state() const override { return {pos_[0], pos_[1], vel_[0], vel_[1]}; }

  void set_physical_state(const Vec& state) override {
    if (state.size() != 4) {
      throw std::invalid_argument("pointmass: physical state is [px, py, vx, vy]");
    }
    pos_[0] = state[0];
    pos_[1] = state[1];
    vel_[0] = clamp(state[2], -kMaxSpeed, kMaxSpeed);
    vel_[1] = clamp(state[3], -kMaxSpeed, kMaxSpeed);
  }

  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<PointMassEnv>(); }

  static constexpr double kDt = 0.1;
  static constexpr double kMaxSpeed = 5.0;
  static constexpr double kGoalRadius = 0.05;

 private:
  Vec observation() const { return {pos_[0], pos_[1], vel_[0], vel_[1]}; }

  EnvSpec spec_;
  double pos_[2] = {0.0, 0.0};
  double vel_[2] = {0.0, 0.0};
  int elapsed_steps_ = 0;
  bool finished_ = false;
};

// Energy-shaping swing-up with a linear stabilizer near upright.
Vec pendulum_expert(const Vec& state) {
  if (state.size() != 2) {
    throw std::invalid_argument("pendulum expert: state must be [theta, theta_dot]");
  }
  const double theta = wrap_angle(state[0]);
  const double theta_dot = state[1];
  const double mass = PendulumEnv::kMass;
  const double length = PendulumEnv::kLength;
  const double gravity = PendulumEnv::kGravity;

  double torque;
  if (std::abs(theta) < 0.35 && std::abs(theta_dot) < 2.5) {
    torque = -10.0 * theta - 2.0 * theta_dot;
  } else {
    // Rod about the pivot: E = (1/6) m l^2 w^2 + (m g l / 2) cos(theta),
    // upright rest at E* = m g l / 2.
    const double energy = mass * length * length * theta_dot * theta_dot / 6.0 +
                          0.5 * mass * gravity * length * std::cos(theta);
    const double target = 0.5 * mass * gravity * length;
    const double direction = theta_dot != 0.0 ? (theta_dot > 0.0 ? 1.0 : -1.0) : 1.0;
    torque = 2.0 * (target - energy) * direction;
  }
  return {clamp(torque, -PendulumEnv::kMaxTorque, PendulumEnv::kMaxTorque)};
}

// Proportional-derivative control toward the goal at the origin.
Vec pointmass_expert(const Vec& state) {
  if (state.size() != 4) {
    throw std::invalid_argument("pointmass expert: state must be [px, py, vx, vy]");
  }
  const double kp = 3.0;
  const double kd = 3.5;
  return {clamp(-kp * state[0] - kd * state[2], -1.0, 1.0),
          clamp(-kp * state[1] - kd * state[3], -1.0, 1.0)};
}

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "pointmass") return std::make_unique<PointMassEnv>();
  throw std::invalid_argument("make_env: unknown environment '" + name + "'");
}

Vec scripted_expert_action(const std::string& env_name, const Vec& physical_state) {
  if (env_name == "pendulum") return pendulum_expert(physical_state);
  if (env_name == "pointmass") return pointmass_expert(physical_state);
  throw std::invalid_argument("scripted_expert_action: unknown environment '" + env_name + "'");
}

}  // namespace apl
