#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "apl/mlp.hpp"
#include "apl/rng.hpp"

namespace apl {

/// One environment step. `terminal` is true environment termination only;
/// time-limit truncation stays false so bootstrapped targets keep the tail.
struct Transition {
  Vec state;
  Vec action;
  double reward = 0.0;
  Vec next_state;
  bool terminal = false;
};

enum class BatchSource { kOnline, kOffline };

struct OORBConfig {
  double p = 0.5;                        // online-source probability
  std::int64_t warmup_steps = 1000;      // T_s: env steps before online sampling
  std::size_t online_capacity = 2000;    // small FIFO, keeps data near-on-policy
  std::size_t offline_capacity = 300000;
  std::size_t batch_size = 256;
};

/// Batch drawn from a single buffer, packed as one row per transition.
struct SourcedBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd terminal;  // 0/1
  BatchSource source = BatchSource::kOffline;

  Eigen::Index size() const { return states.rows(); }
};

/// Pessimism weight gating the conservative term: online batches get 0,
/// offline batches get 1.
double weight_for(BatchSource source);

/// Online-Offline Replay Buffer: a small FIFO buffer of freshly collected
/// transitions paired with a large buffer holding the offline dataset plus
/// everything collected online. Batches come from one buffer at a time,
/// chosen by a Bernoulli draw once the online warm-up has passed.
class OORB {
 public:
  OORB(int obs_dim, int act_dim, const OORBConfig& config);

  /// Appends a dataset to the offline buffer. Throws if the result would
  /// exceed offline_capacity or any transition is dimensionally inconsistent.
  void load_offline(const std::vector<Transition>& dataset);

  /// Stores a collected experience in BOTH buffers (FIFO eviction each).
  void push_online(const Transition& t);

  /// Algorithm-1 sampling rule: draw p_s ~ U(0,1); take the online buffer iff
  /// p_s < p and online_steps > warmup_steps and it holds a full batch;
  /// otherwise the offline buffer. Uniform with replacement within a buffer.
  /// Throws if the offline buffer holds fewer than batch_size transitions.
  SourcedBatch sample(std::int64_t online_steps, Rng& rng) const;

  /// Samples from the stated buffer, bypassing the Bernoulli rule.
  SourcedBatch sample_from(BatchSource source, Rng& rng) const;

  std::size_t online_size() const { return online_.size(); }
  std::size_t offline_size() const { return offline_.size(); }
  const OORBConfig& config() const { return config_; }

  /// Online buffer contents oldest-to-newest (test hook for FIFO order).
  std::vector<Transition> online_contents() const { return online_.contents(); }

 private:
  class Ring {
   public:
    explicit Ring(std::size_t capacity) : capacity_(capacity) {}
    void push(const Transition& t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at_fifo(std::size_t i) const;
    std::vector<Transition> contents() const;

   private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // index of the oldest element once full
    std::vector<Transition> data_;
  };

  void check_transition(const Transition& t) const;

  int obs_dim_;
  int act_dim_;
  OORBConfig config_;
  Ring online_;
  Ring offline_;
};

}  // namespace apl
