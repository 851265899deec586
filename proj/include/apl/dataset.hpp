#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apl/env.hpp"
#include "apl/oorb.hpp"

namespace apl {

struct DatasetHeader {
  int format_version = 1;
  std::string env_name;
  int obs_dim = 0;
  int act_dim = 0;
  std::int64_t n_records = 0;
  std::string behavior_tag;
  std::uint64_t generator_seed = 0;
};

/// Offline dataset: a header line plus one JSON record per line with keys
/// s, a, r, s2, done (done stored strictly as 0/1). Reals are written with
/// shortest round-trip precision, so read(write(d)) reproduces d exactly.
struct DatasetFile {
  DatasetHeader header;
  std::vector<Transition> records;
};

void write_dataset(const std::string& path, const DatasetFile& dataset);

/// Throws ParseError naming the offending line on version mismatch,
/// truncation, or dimension mismatch.
DatasetFile read_dataset(const std::string& path);

/// D4RL-style tiers on the built-in envs:
///   random        - uniform actions in the box
///   expert        - scripted expert + Gaussian noise (std 0.05 * half-range)
///   medium        - per step, expert action with probability 0.5, else random
///   medium-replay - chronological interaction log of an online GCQL agent
///                   trained from scratch until evaluation first reaches the
///                   medium tier (n acts as the env-step budget cap)
///   medium-expert - concatenation of an n/2 medium and an n/2 expert dataset
/// Generation is a pure function of (env, tag, n, seed).
DatasetFile generate_dataset(Env& env, const std::string& behavior_tag, std::int64_t n,
                             std::uint64_t seed);

}  // namespace apl
