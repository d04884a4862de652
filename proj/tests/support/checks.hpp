#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mecsim/config.hpp"

namespace mecsim::checks {

struct CheckResult {
  std::string family;
  bool passed = false;
  int instances = 0;
  int failures = 0;
  /// Worst observed error divided by its tolerance; <= 1 passes.
  double worst_ratio = 0.0;
  double seconds = 0.0;
  /// Inputs of the first failing instance, as JSON.
  std::string failing_input;
};

using EdgeSolver = std::function<std::vector<double>(std::span<const double>, double, double)>;

/// Edge allocation against LP vertex enumeration (objective, 1e-6 relative).
CheckResult edge_optimality(std::uint64_t seed, int instances, const EdgeSolver& solver);
/// Edge allocation satisfies KKT with the recovered multiplier.
CheckResult edge_kkt(std::uint64_t seed, int instances, const EdgeSolver& solver);
/// Local allocation against the 2000-point grid oracle.
CheckResult local_optimality(std::uint64_t seed, int instances);
/// Transmission allocation against the 2000-point grid oracle.
CheckResult transmission_optimality(std::uint64_t seed, int instances);
/// Realized one-slot Lyapunov drift of every queue against its bound, with
/// random partitions redrawn every period.
CheckResult drift_inequality(const ExperimentConfig& config, std::uint64_t seed, int slots);
/// Analytic actor / critic gradients against central differences (h = 1e-5, 1e-4 relative).
CheckResult actor_gradient(std::uint64_t seed, int points);
CheckResult critic_gradient(std::uint64_t seed, int points);
/// Episode energy equals the sum of slot energies and every task is accounted for.
CheckResult energy_accounting(const ExperimentConfig& config, std::uint64_t seed);
/// Profiles and config survive a serialize / parse round trip.
CheckResult serialization_roundtrip(const ExperimentConfig& config);

/// Every family with the default sizes.
std::vector<CheckResult> run_all(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace mecsim::checks
