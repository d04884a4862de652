#include "mecsim/simulator.hpp"

#include <algorithm>
#include <future>
#include <map>

#include "mecsim/errors.hpp"

namespace mecsim {

std::vector<DnnProfile> Environment::resolve_profiles(const ExperimentConfig& config) {
  std::vector<DnnProfile> all;
  if (config.synthetic_layers > 0) {
    for (int j = 0; j < config.synthetic_models; ++j) {
      all.push_back(synth_profile(config.synthetic_layers, config.synthetic_seed + static_cast<std::uint64_t>(j)));
    }
  } else {
    const std::filesystem::path path =
        config.profiles_path.empty() ? default_data_dir() / "profiles.json" : std::filesystem::path(config.profiles_path);
    all = load_profiles(path);
  }
  if (all.empty()) throw ValidationError("profile list is empty");
  if (config.models.empty()) return all;
  std::vector<DnnProfile> picked;
  for (const auto& name : config.models) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const DnnProfile& p) { return p.model_name == name; });
    if (it == all.end()) throw ValidationError("profiles.models: no profile named '" + name + "'");
    picked.push_back(*it);
  }
  return picked;
}

Environment Environment::build(const ExperimentConfig& config) {
  validate(config);
  Environment env;
  env.config = config;
  env.topology = Topology::uniform(config.num_devices, config.services_per_device);
  const auto profiles = resolve_profiles(config);
  const int n = env.topology.num_services();
  for (int i = 0; i < n; ++i) {
    const int service = i - env.topology.offset(env.topology.device_of(i));
    env.service_profiles.push_back(profiles[static_cast<std::size_t>(service) % profiles.size()]);
  }

  env.channel.antenna_gain = config.antenna_gain;
  env.channel.carrier_hz = config.carrier_hz;
  env.channel.path_loss_exp = config.path_loss_exp;
  env.channel.total_bandwidth_hz = config.bandwidth_hz;
  env.channel.noise_psd_w_per_hz = dbm_per_hz_to_watt_per_hz(config.noise_dbm_per_hz);
  env.channel.min_distance_m = config.min_distance_m;
  env.channel.max_distance_m = config.max_distance_m;
  if (config.distances_m.empty()) {
    Rng rng = make_rng(config.seed, Stream::kDistance);
    env.channel.distance_m = draw_distances(config.num_devices, config.min_distance_m, config.max_distance_m, rng);
  } else {
    env.channel.distance_m = config.distances_m;
  }
  validate(env.channel);

  env.allocator.tau = config.slot_s;
  env.allocator.local_capacity_hz = config.local_capacity_hz;
  env.allocator.edge_capacity_hz = config.edge_capacity_hz;
  env.allocator.p_max_w = config.p_max_w;
  env.allocator.bandwidth_hz = env.channel.per_device_bandwidth_hz();
  env.allocator.noise_psd = env.channel.noise_psd_w_per_hz;
  env.allocator.weights = config.weights;

  const double a_max = poisson_quantile(config.arrival_rate, config.arrival_quantile);
  env.arrival_bounds = ArrivalBounds{a_max, a_max, a_max};

  env.scales.queue_cycles = config.ppo.queue_scale_cycles;
  env.scales.queue_bits = config.ppo.queue_scale_bits;
  for (const auto& p : env.service_profiles) {
    env.scales.total_cycles.push_back(p.total_macs * config.rho);
    env.scales.input_bits.push_back(p.input_bits);
  }
  env.scales.local_capacity_hz = config.local_capacity_hz;
  env.scales.edge_capacity_hz = config.edge_capacity_hz;
  env.scales.p_max_w = config.p_max_w;
  for (int m = 0; m < config.num_devices; ++m) {
    env.scales.reference_rate_bps.push_back(uplink_rate(config.p_max_w, mean_gain(env.channel, m),
                                                        env.allocator.bandwidth_hz, env.allocator.noise_psd));
  }

  env.policy_spec.observation_size = observation_size(env.topology);
  for (const auto& p : env.service_profiles) {
    env.policy_spec.head_sizes.push_back(action_count(p.num_partition_layers(), config.action_set));
    env.initial_partitions.push_back(midpoint_partition(p.num_partition_layers()));
  }

  const auto& fixed = config.fixed_partitions;
  if (fixed.empty()) {
    env.fixed_partitions = env.initial_partitions;
  } else if (fixed.size() == static_cast<std::size_t>(n)) {
    env.fixed_partitions = fixed;
  } else if (fixed.size() == static_cast<std::size_t>(config.services_per_device)) {
    for (int i = 0; i < n; ++i) {
      env.fixed_partitions.push_back(fixed[static_cast<std::size_t>(i - env.topology.offset(env.topology.device_of(i)))]);
    }
  } else {
    throw ValidationError("run.fixed_partitions needs one entry per service or per service index");
  }
  const int lo = config.action_set == ActionSet::kFull ? 0 : 1;
  for (int i = 0; i < n; ++i) {
    const int k = env.fixed_partitions[static_cast<std::size_t>(i)];
    if (k < lo || k > env.service_profiles[static_cast<std::size_t>(i)].num_partition_layers()) {
      throw ValidationError("run.fixed_partitions: partition " + std::to_string(k) + " outside the action set");
    }
  }
  return env;
}

SystemState Environment::initial_state() const {
  return SystemState::make(topology, service_profiles, config.rho, config.period_slots, initial_partitions);
}

std::vector<PartitionCosts> Environment::costs_of(const std::vector<int>& partitions) const {
  std::vector<PartitionCosts> out;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    out.push_back(partition_view(service_profiles[i], partitions[i], config.rho));
  }
  return out;
}

EpisodeStreams EpisodeStreams::make(std::uint64_t seed, std::uint64_t episode) {
  return EpisodeStreams{make_rng(seed, Stream::kChannel, episode), make_rng(seed, Stream::kArrivals, episode),
                        make_rng(seed, Stream::kPolicy, episode), make_rng(seed, Stream::kBaseline, episode)};
}

SlotLog run_slot(SystemState& state, const Environment& env, Rng& channel_rng, Rng& arrival_rng) {
  const Topology& topo = state.topology;
  const auto n = state.services.size();
  SlotLog log;
  log.slot = state.slot;
  for (const auto& q : state.services) {
    log.backlog_local.push_back(q.local.backlog());
    log.backlog_transmit.push_back(q.transmit.backlog());
    log.backlog_edge.push_back(q.edge.backlog());
    log.partition.push_back(q.partition);
    log.costs.push_back(q.costs);
  }
  for (int m = 0; m < topo.num_devices(); ++m) log.gain.push_back(sample_gain(env.channel, m, channel_rng));
  log.allocation = allocate_slot(state, log.gain, env.allocator);
  log.arrivals.resize(n);
  for (auto& a : log.arrivals) a = sample_arrivals(env.config.arrival_rate, arrival_rng);
  log.flows = step_queues(state, log.allocation, log.arrivals, env.allocator.tau);

  for (int m = 0; m < topo.num_devices(); ++m) {
    double fl = 0.0;
    for (int j = 0; j < topo.services_on(m); ++j) fl += log.allocation.local_hz[static_cast<std::size_t>(topo.flat(m, j))];
    log.local_energy.push_back(local_energy(fl, env.allocator.weights.energy_coeff, env.allocator.tau));
    log.transmit_energy.push_back(transmit_energy(log.allocation.power_w[static_cast<std::size_t>(m)], env.allocator.tau));
  }
  return log;
}

Mode mode_for(Algorithm algo, bool training) {
  switch (algo) {
    case Algorithm::kLyaPpo:
      return training ? Mode::kTrain : Mode::kEval;
    case Algorithm::kFixCov:
      return Mode::kFixed;
    case Algorithm::kRandomCov:
      return Mode::kRandom;
  }
  return Mode::kEval;
}

PeriodResult run_period(SystemState& state, const Environment& env, EpisodeStreams& streams) {
  if (!state.at_period_boundary()) throw ContractError("run_period: state is not at a period boundary");
  PeriodResult out;
  const int g = env.config.period_slots;
  out.window.reserve(static_cast<std::size_t>(g));
  for (int s = 0; s < g; ++s) out.window.push_back(run_slot(state, env, streams.channel, streams.arrivals));
  out.reward = reward(out.window, env.topology, env.config.ppo);
  out.next_state = build_state(out.window, g, env.topology, env.scales);
  return out;
}

namespace {

Algorithm algorithm_of(Mode mode) {
  switch (mode) {
    case Mode::kTrain:
    case Mode::kEval:
      return Algorithm::kLyaPpo;
    case Mode::kFixed:
      return Algorithm::kFixCov;
    case Mode::kRandom:
      break;
  }
  return Algorithm::kRandomCov;
}

std::vector<int> to_actions(const std::vector<int>& partitions, ActionSet set) {
  std::vector<int> out;
  for (int k : partitions) out.push_back(partition_to_action(k, set));
  return out;
}

std::vector<int> to_partitions(const std::vector<int>& actions, ActionSet set) {
  std::vector<int> out;
  for (int a : actions) out.push_back(action_to_partition(a, set));
  return out;
}

}  // namespace

EpisodeMetrics run_episode(const Environment& env, const ActorCritic* ac, Mode mode, std::uint64_t episode,
                           std::vector<Transition>* replay, const EpisodeHooks& hooks) {
  const bool learned = mode == Mode::kTrain || mode == Mode::kEval;
  if (learned && ac == nullptr) throw ContractError("run_episode: LyaPPO modes need an actor-critic");
  if (mode == Mode::kTrain && replay == nullptr) throw ContractError("run_episode: training needs a replay buffer");
  const ActionSet set = env.config.action_set;
  const auto n = static_cast<std::size_t>(env.topology.num_services());

  EpisodeStreams streams = EpisodeStreams::make(env.config.seed, episode);
  SystemState state = env.initial_state();
  std::vector<int> partitions = mode == Mode::kFixed ? env.fixed_partitions : env.initial_partitions;
  PeriodObservation obs = initial_state(env.topology, env.costs_of(partitions), env.scales);
  std::vector<int> action = to_actions(partitions, set);
  double log_prob = learned ? joint_log_prob(ac->actor_old, env.policy_spec, obs.features, action) : 0.0;

  EpisodeMetrics m;
  m.episode = static_cast<std::int64_t>(episode);
  m.algorithm = algorithm_of(mode);
  m.mean_partition_per_service.assign(n, 0.0);
  double partition_fraction = 0.0;

  const int periods = env.config.periods_per_episode;
  for (int tp = 0; tp < periods; ++tp) {
    apply_partition(state, partitions, set);
    PeriodResult period = run_period(state, env, streams);

    for (const SlotLog& s : period.window) {
      if (hooks.on_slot) hooks.on_slot(s);
      double el = 0.0;
      double et = 0.0;
      for (double v : s.local_energy) el += v;
      for (double v : s.transmit_energy) et += v;
      m.mean_local_energy += el;
      m.mean_transmit_energy += et;
      m.total_energy += el + et;
      for (std::size_t i = 0; i < n; ++i) {
        m.mean_backlog_local += s.backlog_local[i];
        m.mean_backlog_transmit += s.backlog_transmit[i];
        m.mean_backlog_edge += s.backlog_edge[i];
      }
      ++m.slots;
    }
    for (std::size_t i = 0; i < n; ++i) {
      m.mean_partition_per_service[i] += partitions[i];
      partition_fraction +=
          static_cast<double>(partitions[i]) / env.service_profiles[i].num_partition_layers();
    }
    m.cumulative_reward += period.reward;

    if (mode == Mode::kTrain) {
      Transition tr{obs.features, action, period.reward, period.next_state.features, log_prob, tp + 1 == periods};
      if (hooks.on_transition) hooks.on_transition(tr);
      replay->push_back(std::move(tr));
    }
    obs = std::move(period.next_state);

    switch (mode) {
      case Mode::kTrain:
      case Mode::kEval: {
        ActionSample sample = act(*ac, obs.features, streams.policy, mode == Mode::kEval);
        action = std::move(sample.action);
        log_prob = sample.log_prob;
        partitions = to_partitions(action, set);
        break;
      }
      case Mode::kFixed:
        break;
      case Mode::kRandom: {
        for (std::size_t i = 0; i < n; ++i) {
          std::uniform_int_distribution<int> pick(0, env.policy_spec.head_sizes[i] - 1);
          action[i] = pick(streams.baseline);
        }
        partitions = to_partitions(action, set);
        break;
      }
    }
  }

  const double slots = static_cast<double>(m.slots);
  m.mean_local_energy /= slots;
  m.mean_transmit_energy /= slots;
  m.mean_total_energy = m.total_energy / slots;
  m.mean_backlog_local /= slots;
  m.mean_backlog_transmit /= slots;
  m.mean_backlog_edge /= slots;
  m.norm_backlog_local = m.mean_backlog_local / env.scales.queue_cycles;
  m.norm_backlog_transmit = m.mean_backlog_transmit / env.scales.queue_bits;
  m.norm_backlog_edge = m.mean_backlog_edge / env.scales.queue_cycles;
  double k_sum = 0.0;
  for (auto& k : m.mean_partition_per_service) {
    k /= periods;
    k_sum += k;
  }
  m.mean_partition = k_sum / static_cast<double>(n);
  m.mean_partition_fraction = partition_fraction / (static_cast<double>(n) * periods);
  m.tasks_created = state.tasks_created;
  m.tasks_completed = state.tasks_completed;
  return m;
}

ActorCritic make_actor_critic(const Environment& env) {
  return ActorCritic::create(env.policy_spec, env.config.ppo.hidden, env.config.ppo.learning_rate,
                             derive_seed(env.config.seed, Stream::kInit));
}

std::vector<TrainingRow> train(const Environment& env, ActorCritic& ac, std::int64_t first_episode, int episodes,
                               const std::function<void(const TrainingRow&)>& on_episode) {
  std::vector<TrainingRow> rows;
  std::vector<Transition> replay;
  for (int e = 0; e < episodes; ++e) {
    const auto episode = static_cast<std::uint64_t>(first_episode + e);
    replay.clear();
    TrainingRow row;
    row.episode = static_cast<std::int64_t>(episode);
    row.metrics = run_episode(env, &ac, Mode::kTrain, episode, &replay);
    Rng rng = make_rng(env.config.seed, Stream::kTraining, episode);
    row.update = update(ac, replay, env.config.ppo, rng);
    replay.clear();
    if (on_episode) on_episode(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

EpisodeMetrics average(const std::vector<EpisodeMetrics>& rows) {
  if (rows.empty()) throw ContractError("average: no episodes");
  EpisodeMetrics out;
  out.episode = rows.front().episode;
  out.algorithm = rows.front().algorithm;
  out.mean_partition_per_service.assign(rows.front().mean_partition_per_service.size(), 0.0);
  const double c = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    out.slots += r.slots;
    out.mean_total_energy += r.mean_total_energy / c;
    out.mean_local_energy += r.mean_local_energy / c;
    out.mean_transmit_energy += r.mean_transmit_energy / c;
    out.total_energy += r.total_energy / c;
    out.mean_backlog_local += r.mean_backlog_local / c;
    out.mean_backlog_transmit += r.mean_backlog_transmit / c;
    out.mean_backlog_edge += r.mean_backlog_edge / c;
    out.norm_backlog_local += r.norm_backlog_local / c;
    out.norm_backlog_transmit += r.norm_backlog_transmit / c;
    out.norm_backlog_edge += r.norm_backlog_edge / c;
    out.mean_partition += r.mean_partition / c;
    out.mean_partition_fraction += r.mean_partition_fraction / c;
    for (std::size_t i = 0; i < out.mean_partition_per_service.size(); ++i) {
      out.mean_partition_per_service[i] += r.mean_partition_per_service[i] / c;
    }
    out.cumulative_reward += r.cumulative_reward / c;
    out.tasks_created += r.tasks_created;
    out.tasks_completed += r.tasks_completed;
  }
  return out;
}

EpisodeMetrics evaluate(const Environment& env, const ActorCritic* ac, Algorithm algo, int count) {
  std::vector<EpisodeMetrics> rows;
  for (int e = 0; e < count; ++e) {
    rows.push_back(run_episode(env, ac, mode_for(algo, false), kEvalEpisodeOffset + static_cast<std::uint64_t>(e)));
  }
  return average(rows);
}

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "F_l") return SweepVariable::kLocalCapacity;
  if (name == "p_max") return SweepVariable::kMaxPower;
  if (name == "F_e") return SweepVariable::kEdgeCapacity;
  if (name == "N_m") return SweepVariable::kServicesPerDevice;
  throw SchemaError("unknown sweep variable '" + std::string(name) + "' (expected F_l, p_max, F_e or N_m)");
}

const char* to_string(SweepVariable var) {
  switch (var) {
    case SweepVariable::kLocalCapacity:
      return "F_l";
    case SweepVariable::kMaxPower:
      return "p_max";
    case SweepVariable::kEdgeCapacity:
      return "F_e";
    case SweepVariable::kServicesPerDevice:
      return "N_m";
  }
  return "?";
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepVariable var, double value) {
  ExperimentConfig out = config;
  switch (var) {
    case SweepVariable::kLocalCapacity:
      out.local_capacity_hz = value * 1e9;
      break;
    case SweepVariable::kMaxPower:
      out.p_max_w = value;
      break;
    case SweepVariable::kEdgeCapacity:
      out.edge_capacity_hz = value * 1e9;
      break;
    case SweepVariable::kServicesPerDevice:
      if (value < 1 || value != static_cast<int>(value)) throw ValidationError("N_m sweep values must be integers >= 1");
      out.services_per_device = static_cast<int>(value);
      out.fixed_partitions.clear();
      break;
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const SweepSpec& spec) {
  if (spec.values.empty()) throw ContractError("run_sweep: empty sweep");
  if (spec.algorithms.empty()) throw ContractError("run_sweep: no algorithms");

  auto run_point = [&](double value) {
    const Environment env = Environment::build(apply_sweep_value(config, spec.variable, value));
    std::vector<SweepRow> rows;
    for (Algorithm algo : spec.algorithms) {
      SweepRow row{value, algo, {}};
      if (algo == Algorithm::kLyaPpo) {
        ActorCritic ac = make_actor_critic(env);
        train(env, ac, 0, env.config.episodes);
        row.metrics = evaluate(env, &ac, algo, env.config.eval_episodes);
      } else {
        row.metrics = evaluate(env, nullptr, algo, env.config.eval_episodes);
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };

  std::vector<std::vector<SweepRow>> per_point(spec.values.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, spec.threads));
  for (std::size_t start = 0; start < spec.values.size(); start += width) {
    std::vector<std::future<std::vector<SweepRow>>> jobs;
    const std::size_t end = std::min(spec.values.size(), start + width);
    for (std::size_t i = start; i < end; ++i) {
      jobs.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, run_point, spec.values[i]));
    }
    for (std::size_t i = start; i < end; ++i) per_point[i] = jobs[i - start].get();
  }
  std::vector<SweepRow> out;
  for (auto& rows : per_point) {
    for (auto& r : rows) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mecsim
