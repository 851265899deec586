#include "apl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apl {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value '" + value + "' for key '" + key +
                                "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t parsed = 0;
  const auto result = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (result.ec != std::errc{} || result.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad integer value '" + value + "' for key '" + key +
                                "'");
  }
  return parsed;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t parsed = 0;
  const auto result = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (result.ec != std::errc{} || result.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: bad unsigned value '" + value + "' for key '" + key +
                                "'");
  }
  return parsed;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "0" || value == "false") return false;
  if (value == "1" || value == "true") return true;
  throw std::invalid_argument("config: bad boolean value '" + value + "' for key '" + key +
                              "' (use 0/1)");
}

std::vector<int> parse_widths(const std::string& key, const std::string& value) {
  std::vector<int> widths;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    widths.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (widths.empty()) {
    throw std::invalid_argument("config: key '" + key + "' needs at least one width");
  }
  return widths;
}

std::string widths_to_string(const std::vector<int>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "agent") {
    if (value != "gcql" && value != "gctd3bc") {
      throw std::invalid_argument("config: agent must be gcql or gctd3bc, got '" + value + "'");
    }
    agent = value;
  } else if (key == "env") {
    env = value;
  } else if (key == "variant") {
    variant_from_string(value);  // validates
    variant = value;
  } else if (key == "dataset") {
    dataset_path = value;
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "ref_episodes") {
    ref_episodes = static_cast<int>(parse_int(key, value));
  } else if (key == "p") {
    oorb.p = parse_double(key, value);
  } else if (key == "t_s") {
    oorb.warmup_steps = parse_int(key, value);
  } else if (key == "online_capacity") {
    oorb.online_capacity = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "offline_capacity") {
    oorb.offline_capacity = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "batch_size") {
    oorb.batch_size = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "gamma") {
    gcql.gamma = gctd3bc.gamma = parse_double(key, value);
  } else if (key == "tau") {
    gcql.tau = gctd3bc.tau = parse_double(key, value);
  } else if (key == "critic_lr") {
    gcql.critic_lr = gctd3bc.critic_lr = parse_double(key, value);
  } else if (key == "actor_lr") {
    gcql.actor_lr = gctd3bc.actor_lr = parse_double(key, value);
  } else if (key == "hidden_widths") {
    gcql.hidden_widths = gctd3bc.hidden_widths = parse_widths(key, value);
  } else if (key == "alpha_cql") {
    gcql.alpha_cql = parse_double(key, value);
  } else if (key == "alpha_ent") {
    gcql.alpha_ent = parse_double(key, value);
  } else if (key == "n_critics") {
    gcql.n_critics = static_cast<int>(parse_int(key, value));
  } else if (key == "subset_size") {
    gcql.subset_size = static_cast<int>(parse_int(key, value));
  } else if (key == "n_penalty_samples") {
    gcql.n_penalty_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "subset_per_transition") {
    gcql.subset_per_transition = parse_bool(key, value);
  } else if (key == "policy_noise_sigma") {
    gctd3bc.policy_noise_sigma = parse_double(key, value);
  } else if (key == "noise_clip") {
    gctd3bc.noise_clip = parse_double(key, value);
  } else if (key == "policy_delay") {
    gctd3bc.policy_delay = static_cast<int>(parse_int(key, value));
  } else if (key == "lambda_mode") {
    if (value == "fixed") {
      gctd3bc.lambda_mode = LambdaMode::kFixed;
    } else if (value == "normalized") {
      gctd3bc.lambda_mode = LambdaMode::kNormalized;
    } else {
      throw std::invalid_argument("config: lambda_mode must be fixed or normalized");
    }
  } else if (key == "lambda_fixed") {
    gctd3bc.lambda_fixed = parse_double(key, value);
  } else if (key == "alpha_norm") {
    gctd3bc.alpha_norm = parse_double(key, value);
  } else if (key == "explore_noise_std") {
    gctd3bc.explore_noise_std = parse_double(key, value);
  } else if (key == "t_initial") {
    schedule.t_initial = parse_int(key, value);
  } else if (key == "t_on") {
    schedule.t_on = parse_int(key, value);
  } else if (key == "t_off") {
    schedule.t_off = parse_int(key, value);
  } else if (key == "s_total") {
    schedule.s_total = parse_int(key, value);
  } else if (key == "eval_every") {
    schedule.eval_every = static_cast<int>(parse_int(key, value));
  } else if (key == "eval_episodes") {
    schedule.eval_episodes = static_cast<int>(parse_int(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

std::string RunConfig::snapshot() const {
  std::ostringstream out;
  out << "agent=" << agent << '\n';
  out << "env=" << env << '\n';
  out << "variant=" << variant << '\n';
  out << "dataset=" << dataset_path << '\n';
  out << "out_dir=" << out_dir << '\n';
  out << "seed=" << seed << '\n';
  out << "ref_episodes=" << ref_episodes << '\n';
  out << "p=" << format_double(oorb.p) << '\n';
  out << "t_s=" << oorb.warmup_steps << '\n';
  out << "online_capacity=" << oorb.online_capacity << '\n';
  out << "offline_capacity=" << oorb.offline_capacity << '\n';
  out << "batch_size=" << oorb.batch_size << '\n';
  out << "gamma=" << format_double(gcql.gamma) << '\n';
  out << "tau=" << format_double(gcql.tau) << '\n';
  out << "critic_lr=" << format_double(gcql.critic_lr) << '\n';
  out << "actor_lr=" << format_double(gcql.actor_lr) << '\n';
  out << "hidden_widths=" << widths_to_string(gcql.hidden_widths) << '\n';
  out << "alpha_cql=" << format_double(gcql.alpha_cql) << '\n';
  out << "alpha_ent=" << format_double(gcql.alpha_ent) << '\n';
  out << "n_critics=" << gcql.n_critics << '\n';
  out << "subset_size=" << gcql.subset_size << '\n';
  out << "n_penalty_samples=" << gcql.n_penalty_samples << '\n';
  out << "subset_per_transition=" << (gcql.subset_per_transition ? 1 : 0) << '\n';
  out << "policy_noise_sigma=" << format_double(gctd3bc.policy_noise_sigma) << '\n';
  out << "noise_clip=" << format_double(gctd3bc.noise_clip) << '\n';
  out << "policy_delay=" << gctd3bc.policy_delay << '\n';
  out << "lambda_mode="
      << (gctd3bc.lambda_mode == LambdaMode::kFixed ? "fixed" : "normalized") << '\n';
  out << "lambda_fixed=" << format_double(gctd3bc.lambda_fixed) << '\n';
  out << "alpha_norm=" << format_double(gctd3bc.alpha_norm) << '\n';
  out << "explore_noise_std=" << format_double(gctd3bc.explore_noise_std) << '\n';
  out << "t_initial=" << schedule.t_initial << '\n';
  out << "t_on=" << schedule.t_on << '\n';
  out << "t_off=" << schedule.t_off << '\n';
  out << "s_total=" << schedule.s_total << '\n';
  out << "eval_every=" << schedule.eval_every << '\n';
  out << "eval_episodes=" << schedule.eval_episodes << '\n';
  return out.str();
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  RunConfig config;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_number) +
                                  " is not key=value: '" + line + "'");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must be key=value, got '" + assignment + "'");
  }
  config.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace apl
