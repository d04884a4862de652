#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mecsim {

/// Partition cost table of one DNN model.
///
/// `compute_fraction[k]` is the share of the model's MACs executed before
/// partition point k; `feature_ratio[k]` is the size of the tensor crossing
/// the cut relative to the model input. k = 0 offloads everything, k = K runs
/// the whole model on the device.
struct DnnProfile {
  std::string model_name;
  double total_macs = 0.0;
  double input_bits = 0.0;
  std::vector<double> compute_fraction;
  std::vector<double> feature_ratio;

  int num_partition_layers() const { return static_cast<int>(compute_fraction.size()) - 1; }

  friend bool operator==(const DnnProfile&, const DnnProfile&) = default;
};

/// Stage workloads of one task under a fixed partition point.
struct PartitionCosts {
  double local_cycles = 0.0;
  double transfer_bits = 0.0;
  double edge_cycles = 0.0;

  friend bool operator==(const PartitionCosts&, const PartitionCosts&) = default;
};

/// Throws ValidationError naming the first violated rule (and index k, if any).
void validate_profile(const DnnProfile& profile);

/// Parses a JSON array of profiles. SchemaError carries line context.
std::vector<DnnProfile> parse_profiles(std::string_view json_text);
std::vector<DnnProfile> load_profiles(const std::filesystem::path& path);
std::string serialize_profiles(std::span<const DnnProfile> profiles);

/// Workloads at partition point k with `rho` cycles per MAC. Throws std::out_of_range.
PartitionCosts partition_view(const DnnProfile& profile, int k, double rho);

/// Random but well-formed profile with `num_layers` partition layers; deterministic in seed.
DnnProfile synth_profile(int num_layers, std::uint64_t seed);

}  // namespace mecsim
