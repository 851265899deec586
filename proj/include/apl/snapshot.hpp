#pragma once

#include <string>

#include "apl/gcql.hpp"
#include "apl/gctd3bc.hpp"
#include "apl/mlp.hpp"

namespace apl {

/// The deterministic evaluation policy of a trained agent, reloadable without
/// the rest of the agent state.
struct EvalPolicy {
  std::string agent_type;  // gcql | gctd3bc
  std::string env_name;
  std::string head;  // gaussian_mean | tanh_actor
  MLPSpec net;
  ParamVector params;
  Vec action_scale;
  Vec action_offset;

  Vec act(const Vec& observation) const;
};

void save_snapshot(const GCQLAgent& agent, const std::string& env_name,
                   const std::string& path);
void save_snapshot(const GCTD3BCAgent& agent, const std::string& env_name,
                   const std::string& path);

EvalPolicy load_eval_policy(const std::string& path);

}  // namespace apl
