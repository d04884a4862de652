#include "mecsim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mecsim/errors.hpp"

namespace mecsim {

namespace {

using nlohmann::json;

// Single list of every configurable field; used for reading, writing and key checks.
template <class Visitor>
void visit_config(ExperimentConfig& c, Visitor&& v) {
  v("system", "num_devices", c.num_devices);
  v("system", "services_per_device", c.services_per_device);
  v("system", "arrival_rate", c.arrival_rate);
  v("system", "slot_s", c.slot_s);
  v("system", "period_slots", c.period_slots);
  v("system", "local_capacity_hz", c.local_capacity_hz);
  v("system", "edge_capacity_hz", c.edge_capacity_hz);
  v("system", "p_max_w", c.p_max_w);
  v("system", "rho", c.rho);
  v("system", "energy_coeff", c.weights.energy_coeff);
  v("system", "weight_local", c.weights.local);
  v("system", "weight_transmit", c.weights.transmit);
  v("system", "arrival_quantile", c.arrival_quantile);
  v("system", "action_set", c.action_set);

  v("channel", "antenna_gain", c.antenna_gain);
  v("channel", "carrier_hz", c.carrier_hz);
  v("channel", "path_loss_exp", c.path_loss_exp);
  v("channel", "bandwidth_hz", c.bandwidth_hz);
  v("channel", "noise_dbm_per_hz", c.noise_dbm_per_hz);
  v("channel", "min_distance_m", c.min_distance_m);
  v("channel", "max_distance_m", c.max_distance_m);
  v("channel", "distances_m", c.distances_m);

  v("profiles", "path", c.profiles_path);
  v("profiles", "synthetic_layers", c.synthetic_layers);
  v("profiles", "synthetic_models", c.synthetic_models);
  v("profiles", "synthetic_seed", c.synthetic_seed);
  v("profiles", "models", c.models);

  v("ppo", "gamma", c.ppo.gamma);
  v("ppo", "clip", c.ppo.clip);
  v("ppo", "learning_rate", c.ppo.learning_rate);
  v("ppo", "epochs", c.ppo.epochs);
  v("ppo", "minibatch", c.ppo.minibatch);
  v("ppo", "energy_weight", c.ppo.energy_weight);
  v("ppo", "queue_weight", c.ppo.queue_weight);
  v("ppo", "queue_scale_cycles", c.ppo.queue_scale_cycles);
  v("ppo", "queue_scale_bits", c.ppo.queue_scale_bits);
  v("ppo", "standardize_advantages", c.ppo.standardize_advantages);
  v("ppo", "entropy_coef", c.ppo.entropy_coef);
  v("ppo", "max_grad_norm", c.ppo.max_grad_norm);
  v("ppo", "hidden", c.ppo.hidden);

  v("run", "seed", c.seed);
  v("run", "episodes", c.episodes);
  v("run", "periods_per_episode", c.periods_per_episode);
  v("run", "eval_episodes", c.eval_episodes);
  v("run", "algorithm", c.algorithm);
  v("run", "fixed_partitions", c.fixed_partitions);
}

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw SchemaError("config key '" + path + "': expected " + expected);
}

void read(const json& j, int& out, const std::string& path) {
  if (!j.is_number_integer()) type_error(path, "an integer");
  out = j.get<int>();
}
void read(const json& j, std::uint64_t& out, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    type_error(path, "a non-negative integer");
  }
  out = j.get<std::uint64_t>();
}
void read(const json& j, double& out, const std::string& path) {
  if (!j.is_number()) type_error(path, "a number");
  out = j.get<double>();
}
void read(const json& j, bool& out, const std::string& path) {
  if (!j.is_boolean()) type_error(path, "a boolean");
  out = j.get<bool>();
}
void read(const json& j, std::string& out, const std::string& path) {
  if (!j.is_string()) type_error(path, "a string");
  out = j.get<std::string>();
}
template <class T>
void read(const json& j, std::vector<T>& out, const std::string& path) {
  if (!j.is_array()) type_error(path, "an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T item{};
    read(j[i], item, path + "[" + std::to_string(i) + "]");
    out.push_back(std::move(item));
  }
}
void read(const json& j, ActionSet& out, const std::string& path) {
  if (!j.is_string()) type_error(path, "\"full\" or \"restricted\"");
  const auto s = j.get<std::string>();
  if (s == "full") {
    out = ActionSet::kFull;
  } else if (s == "restricted") {
    out = ActionSet::kRestricted;
  } else {
    type_error(path, "\"full\" or \"restricted\"");
  }
}
void read(const json& j, Algorithm& out, const std::string& path) {
  if (!j.is_string()) type_error(path, "\"lyappo\", \"fixcov\" or \"randomcov\"");
  try {
    out = parse_algorithm(j.get<std::string>());
  } catch (const SchemaError&) {
    type_error(path, "\"lyappo\", \"fixcov\" or \"randomcov\"");
  }
}

json write(int v) { return v; }
json write(std::uint64_t v) { return v; }
json write(double v) { return v; }
json write(bool v) { return v; }
json write(const std::string& v) { return v; }
template <class T>
json write(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(write(x));
  return a;
}
json write(ActionSet v) { return v == ActionSet::kFull ? "full" : "restricted"; }
json write(Algorithm v) { return to_string(v); }

}  // namespace

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kLyaPpo:
      return "lyappo";
    case Algorithm::kFixCov:
      return "fixcov";
    case Algorithm::kRandomCov:
      return "randomcov";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "lyappo") return Algorithm::kLyaPpo;
  if (name == "fixcov") return Algorithm::kFixCov;
  if (name == "randomcov") return Algorithm::kRandomCov;
  throw SchemaError("unknown algorithm '" + std::string(name) + "' (expected lyappo, fixcov or randomcov)");
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  auto positive = [&](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(std::string(key) + " must be > 0");
  };
  if (c.num_devices < 1) fail("system.num_devices must be >= 1");
  if (c.services_per_device < 1) fail("system.services_per_device must be >= 1");
  if (!(c.arrival_rate >= 0.0)) fail("system.arrival_rate must be >= 0");
  positive(c.slot_s, "system.slot_s");
  if (c.period_slots < 1) fail("system.period_slots (G) must be >= 1");
  positive(c.local_capacity_hz, "system.local_capacity_hz");
  positive(c.edge_capacity_hz, "system.edge_capacity_hz");
  positive(c.p_max_w, "system.p_max_w");
  positive(c.rho, "system.rho");
  positive(c.weights.energy_coeff, "system.energy_coeff");
  positive(c.weights.local, "system.weight_local");
  positive(c.weights.transmit, "system.weight_transmit");
  if (!(c.arrival_quantile > 0.0 && c.arrival_quantile < 1.0)) fail("system.arrival_quantile must be in (0, 1)");
  positive(c.antenna_gain, "channel.antenna_gain");
  positive(c.carrier_hz, "channel.carrier_hz");
  positive(c.path_loss_exp, "channel.path_loss_exp");
  positive(c.bandwidth_hz, "channel.bandwidth_hz");
  positive(c.min_distance_m, "channel.min_distance_m");
  if (c.max_distance_m < c.min_distance_m) fail("channel.max_distance_m < channel.min_distance_m");
  if (!c.distances_m.empty() && c.distances_m.size() != static_cast<std::size_t>(c.num_devices)) {
    fail("channel.distances_m needs one entry per device");
  }
  if (c.synthetic_layers < 0) fail("profiles.synthetic_layers must be >= 0");
  if (c.synthetic_layers > 0 && c.synthetic_models < 1) fail("profiles.synthetic_models must be >= 1");
  if (!(c.ppo.gamma > 0.0 && c.ppo.gamma < 1.0)) fail("ppo.gamma must be in (0, 1)");
  positive(c.ppo.clip, "ppo.clip");
  if (!(c.ppo.learning_rate >= 0.0)) fail("ppo.learning_rate must be >= 0");
  if (c.ppo.epochs < 0) fail("ppo.epochs must be >= 0");
  if (c.ppo.minibatch < 1) fail("ppo.minibatch must be >= 1");
  positive(c.ppo.queue_scale_cycles, "ppo.queue_scale_cycles");
  positive(c.ppo.queue_scale_bits, "ppo.queue_scale_bits");
  for (int h : c.ppo.hidden) {
    if (h < 1) fail("ppo.hidden layer sizes must be >= 1");
  }
  if (c.episodes < 0) fail("run.episodes must be >= 0");
  if (c.periods_per_episode < 1) fail("run.periods_per_episode must be >= 1");
  if (c.eval_episodes < 0) fail("run.eval_episodes must be >= 0");
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("config: top level must be an object");

  ExperimentConfig cfg;
  std::map<std::string, std::set<std::string>> known;
  visit_config(cfg, [&](const char* group, const char* key, auto& field) {
    known[group].insert(key);
    const auto g = doc.find(group);
    if (g == doc.end()) return;
    if (!g->is_object()) type_error(group, "an object");
    const auto k = g->find(key);
    if (k == g->end()) return;
    read(*k, field, std::string(group) + "." + key);
  });
  for (const auto& [group, body] : doc.items()) {
    const auto it = known.find(group);
    if (it == known.end()) throw SchemaError("config: unknown key '" + group + "'");
    for (const auto& [key, _] : body.items()) {
      if (!it->second.count(key)) throw SchemaError("config: unknown key '" + group + "." + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  json doc = json::object();
  visit_config(copy, [&](const char* group, const char* key, auto& field) { doc[group][key] = write(field); });
  return doc.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MECSIM_DATA_DIR"); env && *env) return env;
  return MECSIM_DEFAULT_DATA_DIR;
}

const char* version() { return MECSIM_VERSION; }

}  // namespace mecsim
