#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "doctest.h"
#include "fixtures.hpp"
#include "mecsim/errors.hpp"
#include "mecsim/queueing.hpp"

using namespace mecsim;

namespace {

constexpr double kTau = 0.01;

SystemState one_service(int partition, int period_slots = 10) {
  const std::vector<int> k = {partition};
  return SystemState::make(Topology::uniform(1, 1), {fixtures::tiny_profile()}, 0.12, period_slots, k);
}

Task task(std::uint64_t id, Stage stage, double work, PartitionCosts costs) {
  Task t;
  t.id = id;
  t.stage = stage;
  t.remaining_work = work;
  t.snapshot = costs;
  return t;
}

}  // namespace

TEST_CASE("Poisson arrivals") {
  Rng rng = make_rng(1, Stream::kArrivals);
  for (int i = 0; i < 1000; ++i) CHECK(sample_arrivals(0.0, rng) == 0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_arrivals(0.2, rng);
  CHECK(std::abs(sum / n - 0.2) <= 3.0 * std::sqrt(0.2 / n));
  Rng a = make_rng(9, Stream::kArrivals);
  Rng b = make_rng(9, Stream::kArrivals);
  for (int i = 0; i < 100; ++i) CHECK(sample_arrivals(0.7, a) == sample_arrivals(0.7, b));
}

TEST_CASE("empty state is a fixed point") {
  SystemState s = one_service(1);
  const auto zeros = Allocation::zeros(s.topology);
  const std::vector<int> none = {0};
  const auto flows = step_queues(s, zeros, none, kTau);
  CHECK(s.services[0].local.empty());
  CHECK(s.services[0].transmit.empty());
  CHECK(s.services[0].edge.empty());
  CHECK(flows.services[0].local.departures == 0);
  CHECK(flows.services[0].transmit.departures == 0);
  CHECK(flows.services[0].edge.departures == 0);
  CHECK(s.slot == 1);
}

TEST_CASE("single local task moves on to transmission") {
  SystemState s = one_service(1);
  const PartitionCosts costs{100.0, 40.0, 30.0};
  s.services[0].local.push(task(0, Stage::kLocal, 100.0, costs));
  auto alloc = Allocation::zeros(s.topology);
  alloc.local_hz[0] = 100.0 / kTau;
  const std::vector<int> none = {0};
  const auto flows = step_queues(s, alloc, none, kTau);
  CHECK(flows.services[0].local.departures == 1);
  CHECK(s.services[0].local.backlog() == 0.0);
  CHECK(s.services[0].transmit.backlog() == 40.0);
  CHECK(s.services[0].transmit.tasks().front().stage == Stage::kTransmit);
}

TEST_CASE("FIFO partial service") {
  SystemState s = one_service(1);
  const PartitionCosts costs{100.0, 40.0, 30.0};
  s.services[0].local.push(task(0, Stage::kLocal, 100.0, costs));
  s.services[0].local.push(task(1, Stage::kLocal, 100.0, costs));
  auto alloc = Allocation::zeros(s.topology);
  alloc.local_hz[0] = 150.0 / kTau;
  const std::vector<int> none = {0};
  const auto flows = step_queues(s, alloc, none, kTau);
  CHECK(flows.services[0].local.departures == 1);
  REQUIRE(s.services[0].local.size() == 1);
  CHECK(s.services[0].local.tasks().front().id == 1);
  CHECK(s.services[0].local.tasks().front().remaining_work == doctest::Approx(50.0));
}

TEST_CASE("allocations above the backlog are rejected") {
  SystemState s = one_service(1);
  s.services[0].local.push(task(0, Stage::kLocal, 100.0, {100.0, 40.0, 30.0}));
  auto alloc = Allocation::zeros(s.topology);
  alloc.local_hz[0] = 200.0 / kTau;
  const std::vector<int> none = {0};
  try {
    step_queues(s, alloc, none, kTau);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("local backlog cap") != std::string::npos);
    CHECK(std::string(e.what()).find("(0,0)") != std::string::npos);
  }
  alloc = Allocation::zeros(s.topology);
  alloc.rate_bps[0] = 1.0;
  CHECK_THROWS_AS(step_queues(s, alloc, none, kTau), ContractError);
  alloc = Allocation::zeros(s.topology);
  alloc.edge_hz[0] = 1.0;
  CHECK_THROWS_AS(step_queues(s, alloc, none, kTau), ContractError);
}

TEST_CASE("routing at the extreme partitions") {
  const auto profile = fixtures::tiny_profile();
  const double cycles = profile.total_macs * 0.12;
  const std::vector<int> one = {1};

  SUBCASE("k = 0 admits arrivals straight to transmission with the full input") {
    SystemState s = one_service(0);
    step_queues(s, Allocation::zeros(s.topology), one, kTau);
    CHECK(s.services[0].local.empty());
    CHECK(s.services[0].transmit.backlog() == profile.input_bits);
  }
  SUBCASE("k = K completes tasks locally") {
    SystemState s = one_service(2);
    step_queues(s, Allocation::zeros(s.topology), one, kTau);
    CHECK(fixtures::close(s.services[0].local.backlog(), cycles));
    auto alloc = Allocation::zeros(s.topology);
    alloc.local_hz[0] = s.services[0].local.backlog() / kTau;
    const std::vector<int> none = {0};
    const auto flows = step_queues(s, alloc, none, kTau);
    CHECK(flows.services[0].completed == 1);
    CHECK(s.services[0].transmit.empty());
    CHECK(s.services[0].edge.empty());
    CHECK(s.tasks_completed == 1);
  }
}

TEST_CASE("partition changes") {
  SystemState s = one_service(1, 2);
  const std::vector<int> one = {1};
  const std::vector<int> none = {0};
  step_queues(s, Allocation::zeros(s.topology), one, kTau);
  CHECK_THROWS_AS(apply_partition(s, std::vector<int>{1}, ActionSet::kFull), ContractError);
  step_queues(s, Allocation::zeros(s.topology), none, kTau);
  CHECK(s.at_period_boundary());
  CHECK_THROWS_AS(apply_partition(s, std::vector<int>{3}, ActionSet::kFull), std::out_of_range);
  CHECK_THROWS_AS(apply_partition(s, std::vector<int>{0}, ActionSet::kRestricted), std::out_of_range);

  SUBCASE("same partition leaves the queues alone") {
    const double before = s.services[0].local.backlog();
    apply_partition(s, std::vector<int>{1}, ActionSet::kFull);
    CHECK(s.services[0].local.backlog() == before);
    CHECK(s.services[0].partition == 1);
  }
  SUBCASE("queued work keeps its snapshot after 1 -> K") {
    // Push the task through local so the transmit queue is nonempty.
    auto alloc = Allocation::zeros(s.topology);
    alloc.local_hz[0] = s.services[0].local.backlog() / kTau;
    step_queues(s, alloc, none, kTau);
    step_queues(s, Allocation::zeros(s.topology), none, kTau);
    const double bits = s.services[0].transmit.backlog();
    REQUIRE(bits > 0.0);
    apply_partition(s, std::vector<int>{2}, ActionSet::kFull);
    CHECK(s.services[0].costs.transfer_bits == 0.0);
    alloc = Allocation::zeros(s.topology);
    alloc.rate_bps[0] = 0.5 * bits / kTau;
    step_queues(s, alloc, none, kTau);
    CHECK(s.services[0].transmit.backlog() == doctest::Approx(0.5 * bits));
    step_queues(s, alloc, none, kTau);
    CHECK(s.services[0].transmit.empty());
    CHECK(s.services[0].edge.backlog() == doctest::Approx(0.7 * 1e9 * 0.12));
  }
  SUBCASE("interior -> 0 sends new arrivals to transmission") {
    apply_partition(s, std::vector<int>{0}, ActionSet::kFull);
    const double bits = s.services[0].transmit.backlog();
    step_queues(s, Allocation::zeros(s.topology), one, kTau);
    CHECK(s.services[0].transmit.backlog() == bits + 8e5);
  }
}

TEST_CASE("action sets and the mid-point") {
  CHECK(action_count(10, ActionSet::kFull) == 11);
  CHECK(action_count(10, ActionSet::kRestricted) == 10);
  CHECK(action_to_partition(0, ActionSet::kFull) == 0);
  CHECK(action_to_partition(0, ActionSet::kRestricted) == 1);
  CHECK(partition_to_action(5, ActionSet::kRestricted) == 4);
  CHECK(midpoint_partition(10) == 5);
  CHECK(midpoint_partition(5) == 3);
  CHECK(midpoint_partition(1) == 1);
}

TEST_CASE("random traffic keeps every queue invariant") {
  Rng rng = make_rng(17, Stream::kTraining);
  const Topology topo = Topology::uniform(2, 2);
  std::vector<DnnProfile> profiles;
  for (int i = 0; i < 4; ++i) profiles.push_back(synth_profile(5, static_cast<std::uint64_t>(i)));
  const std::vector<int> start(4, 2);
  SystemState s = SystemState::make(topo, profiles, 0.12, 5, start);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<std::uint64_t, std::int64_t> last_departure;

  for (int t = 0; t < 2000; ++t) {
    if (s.at_period_boundary()) {
      std::vector<int> k;
      for (int i = 0; i < 4; ++i) k.push_back(std::uniform_int_distribution<int>(0, 5)(rng));
      apply_partition(s, k, ActionSet::kFull);
    }
    auto alloc = Allocation::zeros(topo);
    for (std::size_t i = 0; i < 4; ++i) {
      alloc.local_hz[i] = u(rng) * s.services[i].local.backlog() / kTau;
      alloc.rate_bps[i] = u(rng) * s.services[i].transmit.backlog() / kTau;
      alloc.edge_hz[i] = u(rng) * s.services[i].edge.backlog() / kTau;
    }
    std::vector<int> arrivals;
    for (int i = 0; i < 4; ++i) arrivals.push_back(sample_arrivals(0.5, rng));

    const SystemState before = s;
    const auto flows = step_queues(s, alloc, arrivals, kTau);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& f = flows.services[i];
      const std::tuple<const StageQueue*, const StageQueue*, const StageFlow*> stages[] = {
          {&before.services[i].local, &s.services[i].local, &f.local},
          {&before.services[i].transmit, &s.services[i].transmit, &f.transmit},
          {&before.services[i].edge, &s.services[i].edge, &f.edge}};
      for (const auto& [b, a, flow] : stages) {
        CHECK(a->backlog() >= 0.0);
        CHECK(std::abs(a->backlog() - (b->backlog() - flow->drained + flow->admitted_work)) <= 1e-6);
        CHECK(flow->departures >= 0);
        CHECK(flow->departures <= static_cast<int>(b->size()));
        double sum = 0.0;
        std::uint64_t prev_id = 0;
        bool ordered = true;
        for (std::size_t j = 0; j < a->tasks().size(); ++j) {
          sum += a->tasks()[j].remaining_work;
          if (j > 0 && a->tasks()[j].id < prev_id && a == &s.services[i].local) ordered = false;
          prev_id = a->tasks()[j].id;
        }
        CHECK(ordered);
        CHECK(std::abs(sum - a->backlog()) <= 1e-6);
      }
    }
    CHECK(s.tasks_created == s.tasks_completed + s.tasks_resident());
  }
}

TEST_CASE("without service the local backlog never shrinks") {
  SystemState s = one_service(1);
  Rng rng = make_rng(2, Stream::kArrivals);
  double prev = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::vector<int> a = {sample_arrivals(0.3, rng)};
    step_queues(s, Allocation::zeros(s.topology), a, kTau);
    CHECK(s.services[0].local.backlog() >= prev);
    prev = s.services[0].local.backlog();
  }
  CHECK(prev > 0.0);
}
