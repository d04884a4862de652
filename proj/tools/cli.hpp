#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mecsim/config.hpp"
#include "mecsim/simulator.hpp"

namespace mecsim::cli {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kCheckFailed = 3 };

/// Describes one command invocation; every CSV it writes carries its run_id.
struct RunManifest {
  std::string run_id;
  std::string command;
  std::string version;
  std::string started_at;  // UTC, ISO 8601
  ExperimentConfig config;
  std::vector<std::string> outputs;
};

RunManifest make_manifest(std::string command, const ExperimentConfig& config);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Shortest round-trip decimal with a period separator, independent of locale.
std::string format_number(double value);

std::string episode_csv_header();
std::string episode_csv_row(const std::string& run_id, const EpisodeMetrics& m);

/// Trains from scratch, or from `resume` continuing its episode counter.
/// Writes checkpoint.json, train_curve.csv and manifest_train.json into `out`.
int cmd_train(const ExperimentConfig& config, const std::filesystem::path& out,
              const std::optional<std::filesystem::path>& resume, std::ostream& log);

/// Greedy (or baseline) evaluation; one row per episode in eval_<algo>.csv.
int cmd_eval(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint,
             const std::filesystem::path& out, std::ostream& log);

/// One sweep_<var>_<algo>.csv per algorithm.
int cmd_sweep(const ExperimentConfig& config, SweepVariable variable, const std::vector<double>& values,
              const std::vector<Algorithm>& algorithms, int threads, const std::filesystem::path& out,
              std::ostream& log);

/// Runs every oracle and invariant family and prints one line per family.
int cmd_selfcheck(const ExperimentConfig& config, std::uint64_t seed, std::ostream& report);

/// Full command line; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mecsim::cli
