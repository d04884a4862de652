#include <cmath>
#include <set>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "mecsim/checkpoint.hpp"
#include "mecsim/errors.hpp"
#include "mecsim/simulator.hpp"

using namespace mecsim;

TEST_CASE("environment from the defaults") {
  const Environment env = Environment::build(ExperimentConfig{});
  CHECK(env.topology.num_devices() == 4);
  CHECK(env.topology.num_services() == 8);
  CHECK(env.service_profiles[0].model_name == "gesture_cnn");
  CHECK(env.service_profiles[1].model_name == "face_net");
  CHECK(env.service_profiles[2].model_name == "gesture_cnn");
  CHECK(env.allocator.bandwidth_hz == 2.5e5);
  CHECK(env.allocator.noise_psd == doctest::Approx(3.98e-21).epsilon(1e-3));
  CHECK(env.arrival_bounds.local == 5);
  for (double d : env.channel.distance_m) CHECK((d >= 150 && d <= 250));
  CHECK(env.initial_partitions == std::vector<int>(8, 5));
  CHECK(env.fixed_partitions == std::vector<int>(8, 5));
  CHECK(env.policy_spec.observation_size == 9 * 8 + 2 * 4);
  CHECK(env.policy_spec.head_sizes == std::vector<int>(8, 11));

  ExperimentConfig restricted;
  restricted.action_set = ActionSet::kRestricted;
  CHECK(Environment::build(restricted).policy_spec.head_sizes == std::vector<int>(8, 10));

  ExperimentConfig bad;
  bad.models = {"no_such_model"};
  CHECK_THROWS_AS(Environment::build(bad), ValidationError);
  ExperimentConfig per_service;
  per_service.fixed_partitions = {2, 7};
  CHECK(Environment::build(per_service).fixed_partitions == std::vector<int>{2, 7, 2, 7, 2, 7, 2, 7});
  per_service.fixed_partitions = {2, 7, 1};
  CHECK_THROWS_AS(Environment::build(per_service), ValidationError);
  per_service.fixed_partitions = {2, 11};
  CHECK_THROWS_AS(Environment::build(per_service), ValidationError);
}

TEST_CASE("run_slot") {
  ExperimentConfig cfg = fixtures::small_config();
  SUBCASE("empty queues and no traffic cost nothing") {
    cfg.arrival_rate = 0.0;
    const Environment env = Environment::build(cfg);
    SystemState state = env.initial_state();
    Rng ch = make_rng(1, Stream::kChannel);
    Rng ar = make_rng(1, Stream::kArrivals);
    const SlotLog log = run_slot(state, env, ch, ar);
    for (double e : log.local_energy) CHECK(e == 0.0);
    for (double e : log.transmit_energy) CHECK(e == 0.0);
    for (double f : log.allocation.local_hz) CHECK(f == 0.0);
    CHECK(log.total_energy() == 0.0);
  }
  SUBCASE("deterministic and consistent with the energy model") {
    cfg.arrival_rate = 0.8;
    const Environment env = Environment::build(cfg);
    SystemState a = env.initial_state();
    SystemState b = env.initial_state();
    Rng ca = make_rng(2, Stream::kChannel);
    Rng aa = make_rng(2, Stream::kArrivals);
    Rng cb = make_rng(2, Stream::kChannel);
    Rng ab = make_rng(2, Stream::kArrivals);
    for (int t = 0; t < 50; ++t) {
      const SlotLog la = run_slot(a, env, ca, aa);
      const SlotLog lb = run_slot(b, env, cb, ab);
      CHECK(la.allocation.local_hz == lb.allocation.local_hz);
      CHECK(la.gain == lb.gain);
      for (int m = 0; m < env.topology.num_devices(); ++m) {
        const auto mi = static_cast<std::size_t>(m);
        double fl = 0.0;
        for (int j = 0; j < env.topology.services_on(m); ++j) {
          fl += la.allocation.local_hz[static_cast<std::size_t>(env.topology.flat(m, j))];
        }
        CHECK(fixtures::close(la.local_energy[mi], env.allocator.tau * env.allocator.weights.energy_coeff * fl * fl * fl,
                              1e-9));
        CHECK(fixtures::close(la.transmit_energy[mi], env.allocator.tau * la.allocation.power_w[mi], 1e-9));
      }
    }
  }
}

TEST_CASE("periods") {
  ExperimentConfig cfg = fixtures::small_config();
  SUBCASE("a one-slot period") {
    cfg.period_slots = 1;
    const Environment env = Environment::build(cfg);
    SystemState state = env.initial_state();
    EpisodeStreams streams = EpisodeStreams::make(cfg.seed, 0);
    const auto p = run_period(state, env, streams);
    CHECK(p.window.size() == 1);
    CHECK(state.slot == 1);
    CHECK(p.next_state.features.size() == static_cast<std::size_t>(env.policy_spec.observation_size));
    CHECK(p.reward == doctest::Approx(reward(p.window, env.topology, cfg.ppo)));
  }
  SUBCASE("only at a boundary") {
    const Environment env = Environment::build(cfg);
    SystemState state = env.initial_state();
    EpisodeStreams streams = EpisodeStreams::make(cfg.seed, 0);
    run_slot(state, env, streams.channel, streams.arrivals);
    CHECK_THROWS_AS(run_period(state, env, streams), ContractError);
  }
}

TEST_CASE("baseline partitions") {
  ExperimentConfig cfg = fixtures::small_config();
  cfg.periods_per_episode = 40;
  const Environment env = Environment::build(cfg);

  std::set<std::vector<int>> seen;
  EpisodeHooks hooks;
  hooks.on_slot = [&](const SlotLog& s) { seen.insert(s.partition); };
  run_episode(env, nullptr, Mode::kFixed, 0, nullptr, hooks);
  CHECK(seen.size() == 1);
  CHECK(*seen.begin() == env.fixed_partitions);

  std::vector<std::vector<int>> counts(4, std::vector<int>(5, 0));
  std::int64_t last_slot = -1;
  std::vector<int> current;
  int changes_off_boundary = 0;
  hooks.on_slot = [&](const SlotLog& s) {
    if (s.slot % cfg.period_slots == 0) {
      for (std::size_t i = 0; i < 4; ++i) ++counts[i][static_cast<std::size_t>(s.partition[i])];
    } else if (s.partition != current) {
      ++changes_off_boundary;
    }
    current = s.partition;
    last_slot = s.slot;
  };
  run_episode(env, nullptr, Mode::kRandom, 0, nullptr, hooks);
  CHECK(changes_off_boundary == 0);
  CHECK(last_slot == 40 * cfg.period_slots - 1);
  for (const auto& c : counts) {
    int used = 0;
    for (int x : c) used += x > 0;
    CHECK(used >= 4);
  }
}

TEST_CASE("episodes") {
  const ExperimentConfig cfg = fixtures::small_config();
  const Environment env = Environment::build(cfg);
  ActorCritic ac = make_actor_critic(env);

  SUBCASE("identical seeds reproduce the metrics") {
    const auto a = run_episode(env, &ac, Mode::kEval, 3);
    const auto b = run_episode(env, &ac, Mode::kEval, 3);
    CHECK(a.total_energy == b.total_energy);
    CHECK(a.cumulative_reward == b.cumulative_reward);
    CHECK(a.mean_partition_per_service == b.mean_partition_per_service);
  }
  SUBCASE("metric definitions") {
    double sum = 0.0;
    std::int64_t slots = 0;
    EpisodeHooks hooks;
    hooks.on_slot = [&](const SlotLog& s) {
      double el = 0.0;
      double et = 0.0;
      for (double v : s.local_energy) el += v;
      for (double v : s.transmit_energy) et += v;
      sum += el + et;
      ++slots;
    };
    const auto m = run_episode(env, &ac, Mode::kEval, 4, nullptr, hooks);
    CHECK(m.slots == slots);
    CHECK(m.total_energy == sum);
    CHECK(fixtures::close(m.mean_total_energy, sum / static_cast<double>(slots), 1e-12));
    CHECK(fixtures::close(m.mean_total_energy, m.mean_local_energy + m.mean_transmit_energy, 1e-9));
    CHECK(m.tasks_completed <= m.tasks_created);
  }
  SUBCASE("training fills one transition per period") {
    std::vector<Transition> replay;
    run_episode(env, &ac, Mode::kTrain, 0, &replay);
    REQUIRE(replay.size() == static_cast<std::size_t>(cfg.periods_per_episode));
    for (std::size_t t = 0; t + 1 < replay.size(); ++t) {
      CHECK_FALSE(replay[t].episode_end);
      CHECK(replay[t].next_state == replay[t + 1].state);
    }
    CHECK(replay.back().episode_end);
    // The first action is the mid-point.
    CHECK(replay.front().action == std::vector<int>(4, 2));
  }
  SUBCASE("a random-weights policy keeps the invariants") {
    ExperimentConfig heavy = cfg;
    heavy.arrival_rate = 0.6;
    heavy.periods_per_episode = 30;
    const auto r = checks::energy_accounting(heavy, 5);
    CHECK(r.passed);
  }
  CHECK_THROWS_AS(run_episode(env, nullptr, Mode::kEval, 0), ContractError);
  CHECK_THROWS_AS(run_episode(env, &ac, Mode::kTrain, 0), ContractError);
}

TEST_CASE("resumed training equals uninterrupted training") {
  const ExperimentConfig cfg = fixtures::small_config();
  const Environment env = Environment::build(cfg);
  ActorCritic straight = make_actor_critic(env);
  const auto rows = train(env, straight, 0, 4);
  REQUIRE(rows.size() == 4);
  CHECK(rows.back().episode == 3);

  ActorCritic first = make_actor_critic(env);
  train(env, first, 0, 2);
  const auto path = std::filesystem::temp_directory_path() / "mecsim_resume_test.json";
  save_checkpoint(path, first, CheckpointMeta{2, "x"});
  ActorCritic resumed = load_checkpoint(path, env.policy_spec, cfg.ppo.hidden);
  const auto tail = train(env, resumed, 2, 2);
  CHECK(tail.front().episode == 2);
  CHECK(resumed.actor == straight.actor);
  CHECK(resumed.critic == straight.critic);
  CHECK(tail.back().metrics.cumulative_reward == rows.back().metrics.cumulative_reward);
  std::filesystem::remove(path);
}

TEST_CASE("sweeps") {
  ExperimentConfig cfg = fixtures::small_config();
  cfg.episodes = 1;
  cfg.eval_episodes = 1;
  cfg.periods_per_episode = 3;
  const SweepSpec spec{SweepVariable::kLocalCapacity, {1.0, 1.5, 2.0}};
  const auto rows = run_sweep(cfg, spec);
  REQUIRE(rows.size() == 9);
  for (Algorithm algo : spec.algorithms) {
    int n = 0;
    for (const auto& r : rows) n += r.algorithm == algo;
    CHECK(n == 3);
  }
  CHECK(rows[0].value == 1.0);
  CHECK(rows[8].value == 2.0);

  ExperimentConfig other_ppo = cfg;
  other_ppo.ppo.learning_rate = 1e-2;
  other_ppo.ppo.hidden = {4};
  const auto fix_a = run_sweep(cfg, SweepSpec{SweepVariable::kMaxPower, {0.2}, {Algorithm::kFixCov}});
  const auto fix_b = run_sweep(other_ppo, SweepSpec{SweepVariable::kMaxPower, {0.2}, {Algorithm::kFixCov}});
  CHECK(fix_a[0].metrics.mean_total_energy == fix_b[0].metrics.mean_total_energy);

  CHECK_THROWS_AS(run_sweep(cfg, SweepSpec{SweepVariable::kMaxPower, {}}), ContractError);
  CHECK(apply_sweep_value(cfg, SweepVariable::kLocalCapacity, 2.0).local_capacity_hz == 2e9);
  CHECK(apply_sweep_value(cfg, SweepVariable::kEdgeCapacity, 30).edge_capacity_hz == 30e9);
  CHECK(apply_sweep_value(cfg, SweepVariable::kMaxPower, 0.1).p_max_w == 0.1);
  CHECK(apply_sweep_value(cfg, SweepVariable::kServicesPerDevice, 3).services_per_device == 3);
  CHECK_THROWS_AS(apply_sweep_value(cfg, SweepVariable::kServicesPerDevice, 1.5), ValidationError);
  CHECK(parse_sweep_variable("N_m") == SweepVariable::kServicesPerDevice);
  CHECK_THROWS_AS(parse_sweep_variable("bandwidth"), SchemaError);
}

TEST_CASE("configuration") {
  CHECK(config_to_json(parse_config("{}")) == config_to_json(ExperimentConfig{}));
  const auto c = parse_config(R"({"system": {"num_devices": 3}, "run": {"algorithm": "fixcov"}})");
  CHECK(c.num_devices == 3);
  CHECK(c.algorithm == Algorithm::kFixCov);
  try {
    parse_config(R"({"system": {"num_device": 3}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("system.num_device") != std::string::npos);
  }
  try {
    parse_config(R"({"ppo": {"hidden": [128, "x"]}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("ppo.hidden[1]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"extra": {}})"), SchemaError);
  CHECK_THROWS_AS(parse_config("[1, 2"), SchemaError);
  ExperimentConfig bad;
  bad.p_max_w = -1;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = ExperimentConfig{};
  bad.period_slots = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  CHECK(config_hash(ExperimentConfig{}) == config_hash(parse_config("{}")));
  ExperimentConfig seeded;
  seeded.seed = 2;
  CHECK(config_hash(seeded) != config_hash(ExperimentConfig{}));
  CHECK(config_hash(seeded).size() == 16);
}

TEST_CASE("seed streams are independent and stable") {
  CHECK(derive_seed(1, Stream::kChannel) != derive_seed(1, Stream::kArrivals));
  CHECK(derive_seed(1, Stream::kChannel, 0) != derive_seed(1, Stream::kChannel, 1));
  CHECK(derive_seed(1, Stream::kChannel, 5) == derive_seed(1, Stream::kChannel, 5));
  CHECK(poisson_quantile(0.2, 1 - 1e-6) == 5);
  CHECK(poisson_quantile(0.0, 1 - 1e-6) == 0);
}
