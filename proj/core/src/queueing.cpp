#include "mecsim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mecsim/errors.hpp"

namespace mecsim {

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::kLocal:
      return "local";
    case Stage::kTransmit:
      return "transmit";
    case Stage::kEdge:
      return "edge";
  }
  return "?";
}

double Task::stage_work(Stage s) const {
  switch (s) {
    case Stage::kLocal:
      return snapshot.local_cycles;
    case Stage::kTransmit:
      return snapshot.transfer_bits;
    case Stage::kEdge:
      return snapshot.edge_cycles;
  }
  return 0.0;
}

void StageQueue::push(Task task) {
  backlog_ += task.remaining_work;
  fifo_.push_back(std::move(task));
}

DrainResult StageQueue::drain(double capacity) {
  DrainResult out;
  while (capacity > 0.0 && !fifo_.empty()) {
    Task& head = fifo_.front();
    const double take = std::min(head.remaining_work, capacity);
    head.remaining_work -= take;
    capacity -= take;
    out.drained += take;
    if (head.remaining_work <= kDepartureTolerance * head.stage_work(head.stage)) {
      out.drained += head.remaining_work;
      head.remaining_work = 0.0;
      out.departed.push_back(std::move(head));
      fifo_.pop_front();
    }
  }
  double sum = 0.0;
  for (const auto& t : fifo_) sum += t.remaining_work;
  backlog_ = sum;
  return out;
}

int action_count(int num_layers, ActionSet set) { return set == ActionSet::kFull ? num_layers + 1 : num_layers; }
int action_to_partition(int action, ActionSet set) { return set == ActionSet::kFull ? action : action + 1; }
int partition_to_action(int partition, ActionSet set) { return set == ActionSet::kFull ? partition : partition - 1; }
int midpoint_partition(int num_layers) { return (num_layers + 1) / 2; }

SystemState SystemState::make(Topology topology, std::vector<DnnProfile> service_profiles, double rho,
                              int period_slots, std::span<const int> initial_partition) {
  const auto n = static_cast<std::size_t>(topology.num_services());
  if (service_profiles.size() != n) throw ContractError("SystemState: need one profile per service");
  if (initial_partition.size() != n) throw ContractError("SystemState: need one partition per service");
  if (period_slots < 1) throw ContractError("SystemState: period length G must be >= 1");
  SystemState s;
  s.topology = std::move(topology);
  s.profiles = std::move(service_profiles);
  s.rho = rho;
  s.period_slots = period_slots;
  s.services.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.services[i].partition = initial_partition[i];
    s.services[i].costs = partition_view(s.profiles[i], initial_partition[i], rho);
  }
  return s;
}

std::uint64_t SystemState::tasks_resident() const {
  std::uint64_t total = 0;
  for (const auto& q : services) total += q.local.size() + q.transmit.size() + q.edge.size();
  return total;
}

int sample_arrivals(double lambda, Rng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("sample_arrivals: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  std::poisson_distribution<int> dist(lambda);
  return dist(rng);
}

namespace {

void check_cap(double alloc, double backlog, double tau, const char* constraint, const SystemState& state,
               std::size_t flat) {
  const double served = alloc * tau;
  if (!(alloc >= 0.0) || served > backlog * (1.0 + 1e-9) + 1e-9) {
    const int i = static_cast<int>(flat);
    const int m = state.topology.device_of(i);
    const int n = i - state.topology.offset(m);
    throw ContractError(std::string(constraint) + " violated at (m,n)=(" + std::to_string(m) + "," +
                        std::to_string(n) + "): allocation serves " + std::to_string(served) + " but backlog is " +
                        std::to_string(backlog));
  }
}

StageFlow& flow_of(ServiceFlow& f, Stage s) {
  switch (s) {
    case Stage::kLocal:
      return f.local;
    case Stage::kTransmit:
      return f.transmit;
    case Stage::kEdge:
      break;
  }
  return f.edge;
}

StageQueue& queue_of(ServiceQueues& q, Stage s) {
  switch (s) {
    case Stage::kLocal:
      return q.local;
    case Stage::kTransmit:
      return q.transmit;
    case Stage::kEdge:
      break;
  }
  return q.edge;
}

// Enters the first stage at or after `from` with nonzero work; false if none (task complete).
bool admit(ServiceQueues& q, ServiceFlow& flow, Task task, Stage from) {
  for (int s = static_cast<int>(from); s <= static_cast<int>(Stage::kEdge); ++s) {
    const auto stage = static_cast<Stage>(s);
    const double work = task.stage_work(stage);
    if (work > 0.0) {
      task.stage = stage;
      task.remaining_work = work;
      StageFlow& sf = flow_of(flow, stage);
      sf.admitted += 1;
      sf.admitted_work += work;
      sf.max_admitted_task_work = std::max(sf.max_admitted_task_work, work);
      queue_of(q, stage).push(std::move(task));
      return true;
    }
  }
  return false;
}

}  // namespace

SlotDepartures step_queues(SystemState& state, const Allocation& alloc, std::span<const int> arrivals, double tau) {
  const auto n = state.services.size();
  if (alloc.local_hz.size() != n || alloc.rate_bps.size() != n || alloc.edge_hz.size() != n) {
    throw ContractError("step_queues: allocation does not match the number of services");
  }
  if (arrivals.size() != n) throw ContractError("step_queues: need one arrival count per service");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = state.services[i];
    check_cap(alloc.local_hz[i], q.local.backlog(), tau, "local backlog cap", state, i);
    check_cap(alloc.rate_bps[i], q.transmit.backlog(), tau, "uplink backlog cap", state, i);
    check_cap(alloc.edge_hz[i], q.edge.backlog(), tau, "edge backlog cap", state, i);
    if (arrivals[i] < 0) throw ContractError("step_queues: negative arrival count");
  }

  SlotDepartures out;
  out.services.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& q = state.services[i];
    auto& flow = out.services[i];

    // Service acts on the pre-step contents only.
    DrainResult local = q.local.drain(alloc.local_hz[i] * tau);
    DrainResult transmit = q.transmit.drain(alloc.rate_bps[i] * tau);
    DrainResult edge = q.edge.drain(alloc.edge_hz[i] * tau);
    flow.local.departures = static_cast<int>(local.departed.size());
    flow.local.drained = local.drained;
    flow.transmit.departures = static_cast<int>(transmit.departed.size());
    flow.transmit.drained = transmit.drained;
    flow.edge.departures = static_cast<int>(edge.departed.size());
    flow.edge.drained = edge.drained;

    int completed = static_cast<int>(edge.departed.size());
    for (auto& t : local.departed) {
      if (!admit(q, flow, std::move(t), Stage::kTransmit)) ++completed;
    }
    for (auto& t : transmit.departed) {
      if (!admit(q, flow, std::move(t), Stage::kEdge)) ++completed;
    }

    flow.arrivals = arrivals[i];
    for (int a = 0; a < arrivals[i]; ++a) {
      Task t;
      t.id = state.next_task_id++;
      t.birth_slot = state.slot;
      t.snapshot = q.costs;
      ++state.tasks_created;
      if (!admit(q, flow, std::move(t), Stage::kLocal)) ++completed;
    }
    flow.completed = completed;
    state.tasks_completed += static_cast<std::uint64_t>(completed);
  }
  ++state.slot;
  return out;
}

void apply_partition(SystemState& state, std::span<const int> new_partition, ActionSet set) {
  if (!state.at_period_boundary()) {
    throw ContractError("apply_partition: slot " + std::to_string(state.slot) + " is not a period boundary (G=" +
                        std::to_string(state.period_slots) + ")");
  }
  if (new_partition.size() != state.services.size()) {
    throw ContractError("apply_partition: need one partition per service");
  }
  for (std::size_t i = 0; i < new_partition.size(); ++i) {
    const int K = state.profiles[i].num_partition_layers();
    const int lo = set == ActionSet::kFull ? 0 : 1;
    if (new_partition[i] < lo || new_partition[i] > K) {
      throw std::out_of_range("partition " + std::to_string(new_partition[i]) + " for service " + std::to_string(i) +
                              " outside [" + std::to_string(lo) + ", " + std::to_string(K) + "]");
    }
  }
  for (std::size_t i = 0; i < new_partition.size(); ++i) {
    auto& q = state.services[i];
    q.partition = new_partition[i];
    q.costs = partition_view(state.profiles[i], new_partition[i], state.rho);
  }
}

}  // namespace mecsim
