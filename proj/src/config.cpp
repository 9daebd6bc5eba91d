#include "pidtune/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "pidtune/csv.hpp"

namespace pidtune {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& v) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& v) {
  try {
    return parse_int(v);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

struct KeyBinding {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = [] {
    std::vector<KeyBinding> t;
    t.push_back({"algo",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "emtd3")
                     c.algo = Algorithm::Emtd3;
                   else if (v == "td3")
                     c.algo = Algorithm::Td3;
                   else
                     throw ConfigError("algo must be emtd3 or td3, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) { return algorithm_name(c.algo); }});
    t.push_back({"seed",
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long s = to_int(v);
                   if (s < 0) throw ConfigError("seed must be non-negative");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    t.push_back({"budget",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.agent.budget = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.agent.budget); }});
    t.push_back({"out_dir",
                 [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const ExperimentConfig& c) { return c.out_dir; }});

    // plant
    t.push_back({"plant_gain",
                 [](ExperimentConfig& c, const std::string& v) { c.plant.gain = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plant.gain); }});
    t.push_back({"plant_a2",
                 [](ExperimentConfig& c, const std::string& v) { c.plant.a2 = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plant.a2); }});
    t.push_back({"plant_a1",
                 [](ExperimentConfig& c, const std::string& v) { c.plant.a1 = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plant.a1); }});
    t.push_back({"plant_a0",
                 [](ExperimentConfig& c, const std::string& v) { c.plant.a0 = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plant.a0); }});
    t.push_back({"plant_dead_time",
                 [](ExperimentConfig& c, const std::string& v) { c.plant.dead_time = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plant.dead_time); }});
    t.push_back({"dt",
                 [](ExperimentConfig& c, const std::string& v) {
                   const double dt = to_double(v);
                   c.plant.dt = dt;
                   c.episode.dt = dt;
                 },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.dt); }});

    // episode
    t.push_back({"horizon",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.episode.horizon = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.episode.horizon); }});
    t.push_back({"setpoint",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.setpoint = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.setpoint); }});
    t.push_back({"u_min",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.limits.u_min = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.limits.u_min); }});
    t.push_back({"u_max",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.limits.u_max = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.limits.u_max); }});
    t.push_back({"state_points",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.episode.state_points = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.episode.state_points); }});
    t.push_back({"tau_i_floor",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.tau_i_floor = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.tau_i_floor); }});
    t.push_back({"kp_lo",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.kp.lo = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.kp.lo); }});
    t.push_back({"kp_hi",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.kp.hi = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.kp.hi); }});
    t.push_back({"tau_i_lo",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.tau_i.lo = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.tau_i.lo); }});
    t.push_back({"tau_i_hi",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.tau_i.hi = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.tau_i.hi); }});
    t.push_back({"tau_d_lo",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.tau_d.lo = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.tau_d.lo); }});
    t.push_back({"tau_d_hi",
                 [](ExperimentConfig& c, const std::string& v) { c.episode.action_box.tau_d.hi = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.episode.action_box.tau_d.hi); }});

    // agent
    t.push_back({"gamma",
                 [](ExperimentConfig& c, const std::string& v) { c.agent.gamma = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.agent.gamma); }});
    t.push_back({"batch_size",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.agent.batch_size = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.agent.batch_size); }});
    t.push_back({"actor_lr",
                 [](ExperimentConfig& c, const std::string& v) { c.agent.actor_lr = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.agent.actor_lr); }});
    t.push_back({"critic_lr",
                 [](ExperimentConfig& c, const std::string& v) { c.agent.critic_lr = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.agent.critic_lr); }});
    t.push_back({"rho_new",
                 [](ExperimentConfig& c, const std::string& v) { c.agent.rho_new = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.agent.rho_new); }});
    t.push_back({"buffer_capacity",
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long n = to_int(v);
                   if (n < 1) throw ConfigError("buffer_capacity must be positive");
                   c.agent.buffer_capacity = static_cast<std::size_t>(n);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.agent.buffer_capacity); }});
    t.push_back({"hidden_units",
                 [](ExperimentConfig& c, const std::string& v) {
                   const int n = static_cast<int>(to_int(v));
                   if (n < 1) throw ConfigError("hidden_units must be positive");
                   for (int& h : c.agent.hidden) h = n;
                 },
                 [](const ExperimentConfig& c) {
                   return std::to_string(c.agent.hidden.empty() ? 0 : c.agent.hidden[0]);
                 }});
    t.push_back({"hidden_layers",
                 [](ExperimentConfig& c, const std::string& v) {
                   const int n = static_cast<int>(to_int(v));
                   if (n < 1) throw ConfigError("hidden_layers must be positive");
                   const int width = c.agent.hidden.empty() ? 64 : c.agent.hidden[0];
                   c.agent.hidden.assign(n, width);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.agent.hidden.size()); }});

    // schedules
    t.push_back({"warmup",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schedules.warmup = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.schedules.warmup); }});
    t.push_back({"beta0",
                 [](ExperimentConfig& c, const std::string& v) {
                   const double b = to_double(v);
                   if (!(b > 0.0)) throw ConfigError("beta0 must be positive");
                   c.schedules.inv_beta = 1.0 / b;
                 },
                 [](const ExperimentConfig& c) { return fmt_double(1.0 / c.schedules.inv_beta); }});
    t.push_back({"inv_beta_increment",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schedules.inv_beta_increment = to_double(v);
                 },
                 [](const ExperimentConfig& c) { return fmt_double(c.schedules.inv_beta_increment); }});
    t.push_back({"sigma2_0",
                 [](ExperimentConfig& c, const std::string& v) { c.schedules.sigma2 = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.schedules.sigma2); }});
    t.push_back({"noise_decay",
                 [](ExperimentConfig& c, const std::string& v) { c.schedules.noise_decay = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.schedules.noise_decay); }});
    t.push_back({"noise_decay_mode",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "multiplicative")
                     c.schedules.multiplicative_decay = true;
                   else if (v == "subtractive")
                     c.schedules.multiplicative_decay = false;
                   else
                     throw ConfigError("noise_decay_mode must be multiplicative or subtractive");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.schedules.multiplicative_decay ? "multiplicative"
                                                                       : "subtractive");
                 }});
    t.push_back({"target_noise_sigma",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schedules.target_noise_sigma = to_double(v);
                 },
                 [](const ExperimentConfig& c) { return fmt_double(c.schedules.target_noise_sigma); }});
    t.push_back({"target_noise_clip",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schedules.target_noise_clip = to_double(v);
                 },
                 [](const ExperimentConfig& c) { return fmt_double(c.schedules.target_noise_clip); }});
    t.push_back({"policy_delay",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schedules.policy_delay = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.schedules.policy_delay); }});

    // stopping
    t.push_back({"stop_on_plateau",
                 [](ExperimentConfig& c, const std::string& v) { c.stop_on_plateau = to_bool(v); },
                 [](const ExperimentConfig& c) {
                   return std::string(c.stop_on_plateau ? "true" : "false");
                 }});
    t.push_back({"plateau_window",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.plateau_window = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.plateau_window); }});
    t.push_back({"plateau_patience",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.plateau_patience = static_cast<int>(to_int(v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.plateau_patience); }});
    t.push_back({"plateau_tol",
                 [](ExperimentConfig& c, const std::string& v) { c.plateau_tol = to_double(v); },
                 [](const ExperimentConfig& c) { return fmt_double(c.plateau_tol); }});
    return t;
  }();
  return table;
}

}  // namespace

std::string algorithm_name(Algorithm algo) {
  return algo == Algorithm::Emtd3 ? "emtd3" : "td3";
}

ExperimentConfig case1_config() { return ExperimentConfig{}; }

ExperimentConfig case2_config() {
  ExperimentConfig cfg;
  cfg.agent.critic_lr = 0.008;
  cfg.schedules.warmup = 100;
  cfg.schedules.inv_beta_increment = 0.0001;
  cfg.schedules.sigma2 = 0.08;
  cfg.schedules.noise_decay = 0.0045;
  cfg.episode.action_box.kp = {0.0, 20.0};
  cfg.episode.action_box.tau_i = {0.0, 20.0};
  cfg.episode.action_box.tau_d = {0.0, 20.0};
  return cfg;
}

ExperimentConfig preset_config(const std::string& name) {
  if (name == "case1") return case1_config();
  if (name == "case2") return case2_config();
  throw ConfigError("unknown preset '" + name + "' (expected case1 or case2)");
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const KeyBinding& b : bindings()) {
    if (key == b.name) {
      b.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void validate(const ExperimentConfig& cfg) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  if (!(cfg.episode.dt > 0.0)) fail("dt must be positive");
  if (cfg.plant.dt != cfg.episode.dt) fail("plant and episode dt must match");
  if (!(cfg.plant.a2 > 0.0) || !(cfg.plant.a0 > 0.0)) fail("plant a2 and a0 must be positive");
  if (cfg.plant.dead_time < 0.0) fail("plant_dead_time must be non-negative");
  const double ratio = cfg.plant.dead_time / cfg.plant.dt;
  if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio))
    fail("plant_dead_time must be an integer multiple of dt");

  if (cfg.episode.state_points < 1) fail("state_points must be >= 1");
  if (cfg.episode.horizon < cfg.episode.state_points)
    fail("horizon must be >= state_points");
  if (cfg.episode.horizon % cfg.episode.state_points != 0)
    fail("horizon must be divisible by state_points");
  if (!std::isfinite(cfg.episode.setpoint)) fail("setpoint must be finite");
  if (!(cfg.episode.limits.u_min < cfg.episode.limits.u_max)) fail("u_min must be < u_max");
  if (!(cfg.episode.tau_i_floor > 0.0)) fail("tau_i_floor must be positive");
  const auto check_bounds = [&](const Bounds& b, const char* name) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
      fail(std::string(name) + " bounds must be finite with lo <= hi");
  };
  check_bounds(cfg.episode.action_box.kp, "kp");
  check_bounds(cfg.episode.action_box.tau_i, "tau_i");
  check_bounds(cfg.episode.action_box.tau_d, "tau_d");

  if (!(cfg.agent.gamma >= 0.0 && cfg.agent.gamma <= 1.0)) fail("gamma must be in [0,1]");
  if (cfg.agent.batch_size < 1) fail("batch_size must be >= 1");
  if (static_cast<std::size_t>(cfg.agent.batch_size) > cfg.agent.buffer_capacity)
    fail("batch_size must not exceed buffer_capacity");
  if (!(cfg.agent.actor_lr > 0.0) || !(cfg.agent.critic_lr > 0.0))
    fail("learning rates must be positive");
  if (!(cfg.agent.rho_new >= 0.0 && cfg.agent.rho_new <= 1.0)) fail("rho_new must be in [0,1]");
  if (cfg.agent.budget < 0) fail("budget must be non-negative");
  if (cfg.agent.hidden.empty()) fail("need at least one hidden layer");

  if (cfg.schedules.warmup < 0) fail("warmup must be non-negative");
  if (cfg.schedules.policy_delay < 1) fail("policy_delay must be >= 1");
  if (!(cfg.schedules.inv_beta > 0.0)) fail("beta0 must be positive");
  if (cfg.schedules.sigma2 < 0.0) fail("sigma2_0 must be non-negative");
  if (cfg.schedules.target_noise_sigma < 0.0) fail("target_noise_sigma must be non-negative");
  if (cfg.schedules.target_noise_clip < 0.0) fail("target_noise_clip must be non-negative");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const KeyBinding& b : bindings()) out << b.name << " = " << b.get(cfg) << "\n";
  return out.str();
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace pidtune
