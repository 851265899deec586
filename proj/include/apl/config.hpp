#pragma once

#include <cstdint>
#include <string>

#include "apl/gcql.hpp"
#include "apl/gctd3bc.hpp"
#include "apl/oorb.hpp"
#include "apl/orchestrator.hpp"

namespace apl {

/// Everything a training run needs, parsed from a flat key=value file.
/// Unknown keys are rejected so typos cannot silently fall back to defaults.
struct RunConfig {
  std::string agent = "gcql";  // gcql | gctd3bc
  std::string env = "pendulum";
  std::string variant = "full";  // full | wg | wgo
  std::string dataset_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int ref_episodes = 100;  // episodes behind each normalized-score anchor

  OORBConfig oorb;
  GCQLConfig gcql;
  GCTD3BCConfig gctd3bc;
  Schedule schedule;

  /// Applies one "key=value" assignment; throws on unknown key or bad value.
  void set(const std::string& key, const std::string& value);

  /// Every effective key in a fixed order, one "key=value" per line. Written
  /// at run start; replaying the snapshot reproduces the run.
  std::string snapshot() const;
};

/// Parses a key=value file ('#' starts a comment, blank lines ignored).
RunConfig parse_config_file(const std::string& path);

/// Parses "key=value" override syntax as passed on the command line.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace apl
