#include "apl/oorb.hpp"

#include <cmath>
#include <stdexcept>

namespace apl {

double weight_for(BatchSource source) {
  return source == BatchSource::kOnline ? 0.0 : 1.0;
}

void OORB::Ring::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& OORB::Ring::at_fifo(std::size_t i) const {
  return data_[(head_ + i) % data_.size()];
}

std::vector<Transition> OORB::Ring::contents() const {
  std::vector<Transition> out;
  out.reserve(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) out.push_back(at_fifo(i));
  return out;
}

OORB::OORB(int obs_dim, int act_dim, const OORBConfig& config)
    : obs_dim_(obs_dim),
      act_dim_(act_dim),
      config_(config),
      online_(config.online_capacity),
      offline_(config.offline_capacity) {
  if (config.p < 0.0 || config.p > 1.0) {
    throw std::invalid_argument("OORB: p must lie in [0, 1]");
  }
  if (config.warmup_steps < 0) {
    throw std::invalid_argument("OORB: warmup_steps must be >= 0");
  }
  if (config.online_capacity == 0 || config.batch_size == 0) {
    throw std::invalid_argument("OORB: capacities and batch size must be positive");
  }
  if (config.online_capacity > config.offline_capacity) {
    throw std::invalid_argument("OORB: online_capacity must be <= offline_capacity");
  }
  if (config.batch_size > config.online_capacity) {
    throw std::invalid_argument("OORB: batch_size must be <= online_capacity");
  }
}

void OORB::check_transition(const Transition& t) const {
  if (static_cast<int>(t.state.size()) != obs_dim_ ||
      static_cast<int>(t.next_state.size()) != obs_dim_) {
    throw std::invalid_argument("OORB: transition state dimension mismatch");
  }
  if (static_cast<int>(t.action.size()) != act_dim_) {
    throw std::invalid_argument("OORB: transition action dimension mismatch");
  }
  if (!std::isfinite(t.reward)) {
    throw std::invalid_argument("OORB: transition reward must be finite");
  }
}

void OORB::load_offline(const std::vector<Transition>& dataset) {
  if (dataset.empty()) {
    throw std::invalid_argument("OORB: offline dataset must be nonempty");
  }
  if (offline_.size() + dataset.size() > config_.offline_capacity) {
    throw std::invalid_argument("OORB: dataset of " + std::to_string(dataset.size()) +
                                " would overflow offline capacity " +
                                std::to_string(config_.offline_capacity) + " (currently " +
                                std::to_string(offline_.size()) + ")");
  }
  for (const Transition& t : dataset) check_transition(t);
  for (const Transition& t : dataset) offline_.push(t);
}

void OORB::push_online(const Transition& t) {
  check_transition(t);
  online_.push(t);
  offline_.push(t);
}

SourcedBatch OORB::sample(std::int64_t online_steps, Rng& rng) const {
  if (offline_.size() < config_.batch_size) {
    throw std::runtime_error("OORB: offline buffer holds " + std::to_string(offline_.size()) +
                             " < batch_size " + std::to_string(config_.batch_size) +
                             "; training cannot start");
  }
  const double p_s = rng.uniform();
  const bool online = p_s < config_.p && online_steps > config_.warmup_steps &&
                      online_.size() >= config_.batch_size;
  return sample_from(online ? BatchSource::kOnline : BatchSource::kOffline, rng);
}

SourcedBatch OORB::sample_from(BatchSource source, Rng& rng) const {
  const Ring& ring = source == BatchSource::kOnline ? online_ : offline_;
  if (ring.size() < config_.batch_size) {
    throw std::runtime_error("OORB: buffer holds fewer transitions than batch_size");
  }
  const auto batch_size = static_cast<Eigen::Index>(config_.batch_size);
  SourcedBatch batch;
  batch.source = source;
  batch.states.resize(batch_size, obs_dim_);
  batch.actions.resize(batch_size, act_dim_);
  batch.next_states.resize(batch_size, obs_dim_);
  batch.rewards.resize(batch_size);
  batch.terminal.resize(batch_size);
  for (Eigen::Index row = 0; row < batch_size; ++row) {
    const Transition& t = ring.at_fifo(rng.integer(ring.size()));
    for (int i = 0; i < obs_dim_; ++i) {
      batch.states(row, i) = t.state[i];
      batch.next_states(row, i) = t.next_state[i];
    }
    for (int i = 0; i < act_dim_; ++i) batch.actions(row, i) = t.action[i];
    batch.rewards(row) = t.reward;
    batch.terminal(row) = t.terminal ? 1.0 : 0.0;
  }
  return batch;
}

}  // namespace apl
