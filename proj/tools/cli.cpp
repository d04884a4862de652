#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "checks.hpp"
#include "json.hpp"
#include "mecsim/checkpoint.hpp"
#include "mecsim/errors.hpp"

namespace mecsim::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class Verbosity { kQuiet, kInfo, kDebug };

Verbosity verbosity() {
  const char* v = std::getenv("MECSIM_LOG");
  if (v == nullptr) return Verbosity::kInfo;
  const std::string s(v);
  if (s == "quiet" || s == "0" || s == "error") return Verbosity::kQuiet;
  if (s == "debug" || s == "2") return Verbosity::kDebug;
  return Verbosity::kInfo;
}

void info(std::ostream& log, const std::string& line) {
  if (verbosity() != Verbosity::kQuiet) log << line << '\n';
}

void debug(std::ostream& log, const std::string& line) {
  if (verbosity() == Verbosity::kDebug) log << line << '\n';
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::string checkpoint_hash(ExperimentConfig config) {
  // Episode counts and the algorithm may change between resumed runs.
  config.episodes = 0;
  config.eval_episodes = 0;
  config.algorithm = Algorithm::kLyaPpo;
  return config_hash(config);
}

}  // namespace

RunManifest make_manifest(std::string command, const ExperimentConfig& config) {
  RunManifest m;
  m.run_id = command + "-" + config_hash(config);
  m.command = std::move(command);
  m.version = version();
  m.started_at = utc_now();
  m.config = config;
  return m;
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
  json seeds = {{"master", manifest.config.seed}};
  for (const auto& [name, stream] : {std::pair{"distance", Stream::kDistance}, {"init", Stream::kInit}}) {
    seeds[name] = derive_seed(manifest.config.seed, stream);
  }
  const json doc = {{"run_id", manifest.run_id},
                    {"command", manifest.command},
                    {"version", manifest.version},
                    {"started_at", manifest.started_at},
                    {"seeds", seeds},
                    {"config", json::parse(config_to_json(manifest.config))},
                    {"outputs", manifest.outputs}};
  open_out(path) << doc.dump(2) << '\n';
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string episode_csv_header() {
  return "run_id,algorithm,episode,slots,mean_total_energy,mean_local_energy,mean_transmit_energy,"
         "mean_backlog_local,mean_backlog_transmit,mean_backlog_edge,norm_backlog_local,norm_backlog_transmit,"
         "norm_backlog_edge,mean_partition,mean_partition_fraction,cumulative_reward,tasks_created,tasks_completed";
}

namespace {

std::string metric_fields(const EpisodeMetrics& m) {
  std::ostringstream os;
  os << format_number(m.mean_total_energy) << ',' << format_number(m.mean_local_energy) << ','
     << format_number(m.mean_transmit_energy) << ',' << format_number(m.mean_backlog_local) << ','
     << format_number(m.mean_backlog_transmit) << ',' << format_number(m.mean_backlog_edge) << ','
     << format_number(m.norm_backlog_local) << ',' << format_number(m.norm_backlog_transmit) << ','
     << format_number(m.norm_backlog_edge) << ',' << format_number(m.mean_partition) << ','
     << format_number(m.mean_partition_fraction) << ',' << format_number(m.cumulative_reward) << ','
     << m.tasks_created << ',' << m.tasks_completed;
  return os.str();
}

}  // namespace

std::string episode_csv_row(const std::string& run_id, const EpisodeMetrics& m) {
  std::ostringstream os;
  os << run_id << ',' << to_string(m.algorithm) << ',' << m.episode << ',' << m.slots << ',' << metric_fields(m);
  return os.str();
}

int cmd_train(const ExperimentConfig& config, const fs::path& out, const std::optional<fs::path>& resume,
              std::ostream& log) {
  const Environment env = Environment::build(config);
  fs::create_directories(out);
  ActorCritic ac = make_actor_critic(env);
  CheckpointMeta meta;
  meta.config_hash = checkpoint_hash(config);
  if (resume) {
    CheckpointMeta loaded;
    ac = load_checkpoint(*resume, env.policy_spec, config.ppo.hidden, &loaded);
    if (loaded.config_hash != meta.config_hash) {
      throw CheckpointError("checkpoint " + resume->string() + " was trained under a different configuration (" +
                            loaded.config_hash + " vs " + meta.config_hash + ")");
    }
    meta.episodes_completed = loaded.episodes_completed;
    info(log, "resuming at episode " + std::to_string(meta.episodes_completed));
  }

  RunManifest manifest = make_manifest("train", config);
  const fs::path curve_path = out / "train_curve.csv";
  const fs::path ckpt_path = out / "checkpoint.json";
  manifest.outputs = {curve_path.string(), ckpt_path.string()};

  const bool append = resume && fs::exists(curve_path);
  std::ofstream curve(curve_path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!curve) throw Error("cannot write " + curve_path.string());
  if (!append) {
    curve << "run_id,episode,cumulative_reward,mean_total_energy,mean_local_energy,mean_transmit_energy,"
             "norm_backlog_local,norm_backlog_transmit,norm_backlog_edge,mean_partition,"
             "actor_loss_before,actor_loss_after,critic_loss_before,critic_loss_after\n";
  }
  const std::int64_t first = meta.episodes_completed;
  train(env, ac, first, config.episodes, [&](const TrainingRow& row) {
    const auto& m = row.metrics;
    curve << manifest.run_id << ',' << row.episode << ',' << format_number(m.cumulative_reward) << ','
          << format_number(m.mean_total_energy) << ',' << format_number(m.mean_local_energy) << ','
          << format_number(m.mean_transmit_energy) << ',' << format_number(m.norm_backlog_local) << ','
          << format_number(m.norm_backlog_transmit) << ',' << format_number(m.norm_backlog_edge) << ','
          << format_number(m.mean_partition) << ',' << format_number(row.update.actor_loss_before) << ','
          << format_number(row.update.actor_loss_after) << ',' << format_number(row.update.critic_loss_before)
          << ',' << format_number(row.update.critic_loss_after) << '\n';
    debug(log, "episode " + std::to_string(row.episode) + " reward " + format_number(m.cumulative_reward));
  });
  curve.close();
  meta.episodes_completed = first + config.episodes;
  save_checkpoint(ckpt_path, ac, meta);
  write_manifest(out / "manifest_train.json", manifest);
  info(log, "trained episodes " + std::to_string(first) + ".." + std::to_string(meta.episodes_completed - 1) +
                "; checkpoint " + ckpt_path.string());
  return kOk;
}

int cmd_eval(const ExperimentConfig& config, const std::optional<fs::path>& checkpoint, const fs::path& out,
             std::ostream& log) {
  const Environment env = Environment::build(config);
  std::optional<ActorCritic> ac;
  if (config.algorithm == Algorithm::kLyaPpo) {
    if (!checkpoint) throw ValidationError("eval --algo lyappo needs --checkpoint");
    ac = load_checkpoint(*checkpoint, env.policy_spec, config.ppo.hidden);
  }
  fs::create_directories(out);
  RunManifest manifest = make_manifest("eval", config);
  const fs::path path = out / (std::string("eval_") + to_string(config.algorithm) + ".csv");
  manifest.outputs = {path.string()};
  std::ofstream csv = open_out(path);
  csv << episode_csv_header() << '\n';
  const Mode mode = mode_for(config.algorithm, false);
  for (int e = 0; e < config.eval_episodes; ++e) {
    const auto m = run_episode(env, ac ? &*ac : nullptr, mode, kEvalEpisodeOffset + static_cast<std::uint64_t>(e));
    csv << episode_csv_row(manifest.run_id, m) << '\n';
  }
  write_manifest(out / (std::string("manifest_eval_") + to_string(config.algorithm) + ".json"), manifest);
  info(log, "wrote " + path.string());
  return kOk;
}

int cmd_sweep(const ExperimentConfig& config, SweepVariable variable, const std::vector<double>& values,
              const std::vector<Algorithm>& algorithms, int threads, const fs::path& out, std::ostream& log) {
  const SweepSpec spec{variable, values, algorithms, threads};
  const auto rows = run_sweep(config, spec);
  fs::create_directories(out);
  RunManifest manifest = make_manifest(std::string("sweep_") + to_string(variable), config);
  for (Algorithm algo : algorithms) {
    const fs::path path = out / (std::string("sweep_") + to_string(variable) + "_" + to_string(algo) + ".csv");
    manifest.outputs.push_back(path.string());
    std::ofstream csv = open_out(path);
    csv << "run_id,variable,value,algorithm,mean_total_energy,mean_local_energy,mean_transmit_energy,"
           "mean_backlog_local,mean_backlog_transmit,mean_backlog_edge,norm_backlog_local,norm_backlog_transmit,"
           "norm_backlog_edge,mean_partition,mean_partition_fraction,cumulative_reward,tasks_created,"
           "tasks_completed\n";
    for (const auto& r : rows) {
      if (r.algorithm != algo) continue;
      csv << manifest.run_id << ',' << to_string(variable) << ',' << format_number(r.value) << ','
          << to_string(algo) << ',' << metric_fields(r.metrics) << '\n';
    }
    info(log, "wrote " + path.string());
  }
  write_manifest(out / (std::string("manifest_sweep_") + to_string(variable) + ".json"), manifest);
  return kOk;
}

int cmd_selfcheck(const ExperimentConfig& config, std::uint64_t seed, std::ostream& report) {
  const auto results = checks::run_all(config, seed);
  bool ok = true;
  for (const auto& r : results) {
    report << (r.passed ? "PASS " : "FAIL ") << r.family << " instances=" << r.instances
           << " failures=" << r.failures << " worst_error_over_tolerance=" << format_number(r.worst_ratio)
           << " seconds=" << format_number(r.seconds) << '\n';
    if (!r.passed) {
      ok = false;
      report << "  failing input: " << r.failing_input << '\n';
    }
  }
  report << results.size() << " check families, " << (ok ? "all passed" : "FAILURES") << '\n';
  return ok ? kOk : kCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-timescale MEC partitioning and resource allocation simulator", "mecsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string algo;
  std::string checkpoint;
  std::string resume;
  std::string var;
  std::vector<double> values;
  std::string algos;
  int threads = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config overriding the defaults");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed");
  };
  CLI::App* train_cmd = app.add_subcommand("train", "Train LyaPPO and write a checkpoint and reward curve");
  common(train_cmd);
  train_cmd->add_option("--episodes", episodes, "Episodes to train");
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a policy or baseline, one CSV row per episode");
  common(eval_cmd);
  eval_cmd->add_option("--episodes", episodes, "Evaluation episodes");
  eval_cmd->add_option("--algo", algo, "lyappo, fixcov or randomcov")->check(CLI::IsMember({"lyappo", "fixcov", "randomcov"}));
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint for lyappo");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Sweep one system parameter over all algorithms");
  common(sweep_cmd);
  sweep_cmd->add_option("--var", var, "F_l (GHz), p_max (W), F_e (GHz) or N_m")->required();
  sweep_cmd->add_option("--values", values, "Comma separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--algo", algos, "Comma separated subset of lyappo,fixcov,randomcov");
  sweep_cmd->add_option("--episodes", episodes, "Training episodes per point");
  sweep_cmd->add_option("--threads", threads, "Sweep points run in parallel")->check(CLI::PositiveNumber);

  CLI::App* check_cmd = app.add_subcommand("selfcheck", "Run the oracle and invariant suite");
  check_cmd->add_option("--config", config_path, "JSON config overriding the defaults");
  check_cmd->add_option("--seed", seed, "Seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    if (train_cmd->parsed()) {
      if (episodes) config.episodes = *episodes;
      validate(config);
      return cmd_train(config, out_dir, resume.empty() ? std::nullopt : std::optional<fs::path>(resume), err);
    }
    if (eval_cmd->parsed()) {
      if (episodes) config.eval_episodes = *episodes;
      if (!algo.empty()) config.algorithm = parse_algorithm(algo);
      validate(config);
      return cmd_eval(config, checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint), out_dir, err);
    }
    if (sweep_cmd->parsed()) {
      if (episodes) config.episodes = *episodes;
      validate(config);
      SweepVariable variable;
      std::vector<Algorithm> algorithms;
      try {
        variable = parse_sweep_variable(var);
        if (algos.empty()) {
          algorithms = {Algorithm::kLyaPpo, Algorithm::kRandomCov, Algorithm::kFixCov};
        } else {
          std::stringstream ss(algos);
          for (std::string item; std::getline(ss, item, ',');) algorithms.push_back(parse_algorithm(item));
        }
      } catch (const SchemaError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
      }
      return cmd_sweep(config, variable, values, algorithms, threads, out_dir, err);
    }
    validate(config);
    return cmd_selfcheck(config, seed.value_or(1), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace mecsim::cli
