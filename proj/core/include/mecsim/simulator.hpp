#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mecsim/channel.hpp"
#include "mecsim/config.hpp"
#include "mecsim/lyapunov_alloc.hpp"
#include "mecsim/ppo.hpp"
#include "mecsim/queueing.hpp"
#include "mecsim/slot_log.hpp"

namespace mecsim {

/// Everything derived once per experiment from an ExperimentConfig.
struct Environment {
  ExperimentConfig config;
  Topology topology;
  std::vector<DnnProfile> service_profiles;  // one per service
  ChannelParams channel;
  AllocatorParams allocator;
  ArrivalBounds arrival_bounds;
  ObservationScales scales;
  PolicySpec policy_spec;
  std::vector<int> initial_partitions;  // ceil(K/2)
  std::vector<int> fixed_partitions;    // Fix-Cov

  static Environment build(const ExperimentConfig& config);
  /// Resolves the profile list (file or synthetic) named by `config`.
  static std::vector<DnnProfile> resolve_profiles(const ExperimentConfig& config);

  SystemState initial_state() const;
  std::vector<PartitionCosts> costs_of(const std::vector<int>& partitions) const;
};

/// Random streams of one episode, split from the experiment seed.
struct EpisodeStreams {
  Rng channel;
  Rng arrivals;
  Rng policy;
  Rng baseline;

  static EpisodeStreams make(std::uint64_t seed, std::uint64_t episode);
};

/// Episode indices at or above this offset are evaluation episodes.
inline constexpr std::uint64_t kEvalEpisodeOffset = 1'000'000;

/// One slot: fading draw, the three allocations, arrivals and the queue step.
SlotLog run_slot(SystemState& state, const Environment& env, Rng& channel_rng, Rng& arrival_rng);

enum class Mode { kTrain, kEval, kFixed, kRandom };

Mode mode_for(Algorithm algo, bool training);

struct PeriodResult {
  std::vector<SlotLog> window;
  PeriodObservation next_state;
  double reward = 0.0;
};

/// G slots under the partition already in force, then reward and next state.
PeriodResult run_period(SystemState& state, const Environment& env, EpisodeStreams& streams);

struct EpisodeMetrics {
  std::int64_t episode = 0;
  Algorithm algorithm = Algorithm::kLyaPpo;
  std::int64_t slots = 0;
  double mean_total_energy = 0.0;  // J per slot, summed over devices
  double mean_local_energy = 0.0;
  double mean_transmit_energy = 0.0;
  double total_energy = 0.0;  // J over the episode
  // Time-averaged backlog summed over services.
  double mean_backlog_local = 0.0;     // cycles
  double mean_backlog_transmit = 0.0;  // bits
  double mean_backlog_edge = 0.0;      // cycles
  // Same, divided by the observation queue scales.
  double norm_backlog_local = 0.0;
  double norm_backlog_transmit = 0.0;
  double norm_backlog_edge = 0.0;
  double mean_partition = 0.0;             // mean k over services and periods
  double mean_partition_fraction = 0.0;    // mean k / K
  std::vector<double> mean_partition_per_service;
  double cumulative_reward = 0.0;
  std::uint64_t tasks_created = 0;
  std::uint64_t tasks_completed = 0;
};

struct EpisodeHooks {
  std::function<void(const SlotLog&)> on_slot;
  std::function<void(const Transition&)> on_transition;
};

/// Runs `periods_per_episode` periods from empty queues. In Mode::kTrain the
/// transitions are appended to `replay`; `ac` may be null for baselines.
EpisodeMetrics run_episode(const Environment& env, const ActorCritic* ac, Mode mode, std::uint64_t episode,
                           std::vector<Transition>* replay = nullptr, const EpisodeHooks& hooks = {});

struct TrainingRow {
  std::int64_t episode = 0;
  EpisodeMetrics metrics;
  UpdateStats update;
};

/// Episodes [first_episode, first_episode + episodes): rollout, PPO update, replay cleared.
std::vector<TrainingRow> train(const Environment& env, ActorCritic& ac, std::int64_t first_episode, int episodes,
                               const std::function<void(const TrainingRow&)>& on_episode = {});

ActorCritic make_actor_critic(const Environment& env);

/// Mean of `count` evaluation episodes.
EpisodeMetrics evaluate(const Environment& env, const ActorCritic* ac, Algorithm algo, int count);
EpisodeMetrics average(const std::vector<EpisodeMetrics>& rows);

enum class SweepVariable { kLocalCapacity, kMaxPower, kEdgeCapacity, kServicesPerDevice };

/// "F_l" (GHz), "p_max" (W), "F_e" (GHz) or "N_m"; throws SchemaError otherwise.
SweepVariable parse_sweep_variable(std::string_view name);
const char* to_string(SweepVariable var);
/// Copy of `config` with the variable set to `value` (in the units above).
ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepVariable var, double value);

struct SweepSpec {
  SweepVariable variable = SweepVariable::kLocalCapacity;
  std::vector<double> values;
  std::vector<Algorithm> algorithms = {Algorithm::kLyaPpo, Algorithm::kRandomCov, Algorithm::kFixCov};
  int threads = 1;
};

struct SweepRow {
  double value = 0.0;
  Algorithm algorithm = Algorithm::kLyaPpo;
  EpisodeMetrics metrics;  // averaged over the evaluation episodes
};

/// Trains LyaPPO (config.episodes) and evaluates every algorithm
/// (config.eval_episodes) at each value. Seeds do not depend on the value.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const SweepSpec& spec);

}  // namespace mecsim
