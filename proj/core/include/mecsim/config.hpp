#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mecsim/lyapunov_alloc.hpp"
#include "mecsim/ppo.hpp"
#include "mecsim/queueing.hpp"

namespace mecsim {

enum class Algorithm { kLyaPpo, kFixCov, kRandomCov };

const char* to_string(Algorithm algo);
/// "lyappo", "fixcov" or "randomcov"; throws SchemaError otherwise.
Algorithm parse_algorithm(std::string_view name);

/// Full experiment description. Defaults reproduce the reference setting
/// (4 devices x 2 services, 10 ms slots, G = 10, 1.5 GHz / 20 GHz, 0.3 W).
struct ExperimentConfig {
  // System.
  int num_devices = 4;
  int services_per_device = 2;
  double arrival_rate = 0.2;  // tasks per slot per service
  double slot_s = 0.01;
  int period_slots = 10;
  double local_capacity_hz = 1.5e9;
  double edge_capacity_hz = 20e9;
  double p_max_w = 0.3;
  double rho = 0.12;
  PenaltyWeights weights;
  double arrival_quantile = 1.0 - 1e-6;
  ActionSet action_set = ActionSet::kFull;

  // Channel.
  double antenna_gain = 3.0;
  double carrier_hz = 915e6;
  double path_loss_exp = 3.0;
  double bandwidth_hz = 1e6;
  double noise_dbm_per_hz = -174.0;
  double min_distance_m = 150.0;
  double max_distance_m = 250.0;
  std::vector<double> distances_m;  // empty: drawn from the seed

  // Profiles. Service n of every device runs model n mod (number of models).
  std::string profiles_path;  // empty: shipped example profiles
  int synthetic_layers = 0;   // > 0: generate profiles instead of loading
  int synthetic_models = 2;
  std::uint64_t synthetic_seed = 7;
  std::vector<std::string> models;  // optional subset / order by model_name

  PpoConfig ppo;

  // Run.
  std::uint64_t seed = 1;
  int episodes = 2500;
  int periods_per_episode = 200;
  int eval_episodes = 5;
  Algorithm algorithm = Algorithm::kLyaPpo;
  std::vector<int> fixed_partitions;  // Fix-Cov; empty: ceil(K/2)
};

/// Throws ValidationError on non-physical values.
void validate(const ExperimentConfig& config);

/// Parses a JSON override document on top of the defaults. Unknown keys and
/// wrong types raise SchemaError with the key path.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// Stable FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Directory holding the shipped data files (MECSIM_DATA_DIR overrides).
std::filesystem::path default_data_dir();

/// Library version string.
const char* version();

}  // namespace mecsim
