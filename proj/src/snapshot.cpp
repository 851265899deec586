#include "apl/snapshot.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace apl {

namespace {

using nlohmann::json;

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "identity";
}

Activation activation_from(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::runtime_error("snapshot: unknown activation '" + name + "'");
}

void write_snapshot(const std::string& path, const std::string& agent_type,
                    const std::string& env_name, const std::string& head, const MLPSpec& net,
                    const ParamVector& params, const Vec& scale, const Vec& offset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_snapshot: cannot open " + path);
  const json doc{{"agent", agent_type},
                 {"env", env_name},
                 {"head", head},
                 {"widths", net.widths},
                 {"hidden_activation", activation_name(net.hidden)},
                 {"output_activation", activation_name(net.output)},
                 {"params", params},
                 {"action_scale", scale},
                 {"action_offset", offset}};
  out << doc.dump() << '\n';
  if (!out.good()) throw std::runtime_error("save_snapshot: write failed for " + path);
}

}  // namespace

Vec EvalPolicy::act(const Vec& observation) const {
  const Vec raw = mlp_forward(net, params, observation);
  const std::size_t act_dim = action_scale.size();
  Vec action(act_dim);
  for (std::size_t d = 0; d < act_dim; ++d) {
    // gaussian_mean heads emit (mean, log-std); squash the mean half.
    const double value = head == "gaussian_mean" ? std::tanh(raw[d]) : raw[d];
    action[d] = value * action_scale[d] + action_offset[d];
  }
  return action;
}

void save_snapshot(const GCQLAgent& agent, const std::string& env_name,
                   const std::string& path) {
  const SquashedGaussianPolicy& policy = agent.policy();
  write_snapshot(path, "gcql", env_name, "gaussian_mean", policy.trunk, policy.params,
                 policy.action_scale, policy.action_offset);
}

void save_snapshot(const GCTD3BCAgent& agent, const std::string& env_name,
                   const std::string& path) {
  const TwinCritics& model = agent.model();
  Vec scale(model.actor_spec.output_dim());
  Vec offset(model.actor_spec.output_dim());
  const EnvSpec spec = make_env(env_name)->spec();
  for (int d = 0; d < spec.act_dim; ++d) {
    scale[d] = spec.action_half_range(d);
    offset[d] = 0.5 * (spec.action_high[d] + spec.action_low[d]);
  }
  write_snapshot(path, "gctd3bc", env_name, "tanh_actor", model.actor_spec, model.actor, scale,
                 offset);
}

EvalPolicy load_eval_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_eval_policy: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_eval_policy: invalid JSON in " + path + ": " + e.what());
  }

  EvalPolicy policy;
  try {
    policy.agent_type = doc.at("agent").get<std::string>();
    policy.env_name = doc.at("env").get<std::string>();
    policy.head = doc.at("head").get<std::string>();
    policy.net.widths = doc.at("widths").get<std::vector<int>>();
    policy.net.hidden = activation_from(doc.at("hidden_activation").get<std::string>());
    policy.net.output = activation_from(doc.at("output_activation").get<std::string>());
    policy.params = doc.at("params").get<ParamVector>();
    policy.action_scale = doc.at("action_scale").get<Vec>();
    policy.action_offset = doc.at("action_offset").get<Vec>();
  } catch (const json::exception& e) {
    throw std::runtime_error("load_eval_policy: bad snapshot field in " + path + ": " +
                             e.what());
  }
  if (policy.params.size() != param_count(policy.net)) {
    throw std::runtime_error("load_eval_policy: parameter count mismatch in " + path);
  }
  return policy;
}

}  // namespace apl
