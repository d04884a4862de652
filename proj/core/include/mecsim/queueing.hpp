#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "mecsim/allocation.hpp"
#include "mecsim/model_profiles.hpp"
#include "mecsim/rng.hpp"
#include "mecsim/topology.hpp"

namespace mecsim {

enum class Stage { kLocal, kTransmit, kEdge };

const char* to_string(Stage stage);

/// One inference request. `snapshot` holds the stage workloads fixed when the
/// task was admitted; later partition changes do not rewrite it.
struct Task {
  std::uint64_t id = 0;
  double remaining_work = 0.0;
  Stage stage = Stage::kLocal;
  std::int64_t birth_slot = 0;
  PartitionCosts snapshot;

  /// Work the task brings into `stage` (cycles or bits).
  double stage_work(Stage s) const;
};

/// Fraction of a task's stage work below which the residual counts as drained.
inline constexpr double kDepartureTolerance = 1e-9;

struct DrainResult {
  std::vector<Task> departed;  // FIFO order
  double drained = 0.0;
};

/// FIFO of tasks; the backlog is the summed remaining work.
class StageQueue {
 public:
  void push(Task task);
  DrainResult drain(double capacity);

  double backlog() const { return backlog_; }
  std::size_t size() const { return fifo_.size(); }
  bool empty() const { return fifo_.empty(); }
  const std::deque<Task>& tasks() const { return fifo_; }

 private:
  std::deque<Task> fifo_;
  double backlog_ = 0.0;
};

/// Subset of partition points the slow-timescale controller may choose from.
enum class ActionSet {
  kFull,        // {0, ..., K}
  kRestricted,  // {1, ..., K}
};

int action_count(int num_layers, ActionSet set);
int action_to_partition(int action, ActionSet set);
int partition_to_action(int partition, ActionSet set);
/// ceil(K / 2)
int midpoint_partition(int num_layers);

struct ServiceQueues {
  StageQueue local;
  StageQueue transmit;
  StageQueue edge;
  int partition = 0;
  PartitionCosts costs;
};

/// All queues of the system plus the slot clock.
struct SystemState {
  Topology topology;
  std::vector<DnnProfile> profiles;  // one per service
  double rho = 0.12;
  int period_slots = 10;  // G
  std::int64_t slot = 0;
  std::vector<ServiceQueues> services;
  std::uint64_t next_task_id = 0;
  std::uint64_t tasks_created = 0;
  std::uint64_t tasks_completed = 0;

  /// Empty queues with every service at `initial_partition[i]`.
  static SystemState make(Topology topology, std::vector<DnnProfile> service_profiles, double rho,
                          int period_slots, std::span<const int> initial_partition);

  std::int64_t period() const { return slot / period_slots; }
  bool at_period_boundary() const { return slot % period_slots == 0; }
  std::uint64_t tasks_resident() const;
};

struct StageFlow {
  int departures = 0;          // b
  int admitted = 0;            // tasks entering the stage this slot
  double drained = 0.0;        // work removed
  double admitted_work = 0.0;  // work added
  double max_admitted_task_work = 0.0;
};

struct ServiceFlow {
  int arrivals = 0;
  int completed = 0;
  StageFlow local;
  StageFlow transmit;
  StageFlow edge;
};

/// Per-service task flows of one slot (b^l, b^t, b^e are the `departures`).
struct SlotDepartures {
  std::vector<ServiceFlow> services;
};

/// Poisson(lambda) task count.
int sample_arrivals(double lambda, Rng& rng);

/// Serves every stage FIFO with its allocation, routes departures to the next
/// stage with nonzero work, admits `arrivals`, and advances the slot.
/// Throws ContractError when an allocation exceeds its queue.
SlotDepartures step_queues(SystemState& state, const Allocation& alloc, std::span<const int> arrivals, double tau);

/// New partitions for all services; only legal at a period boundary.
/// Queued tasks keep their snapshots.
void apply_partition(SystemState& state, std::span<const int> new_partition, ActionSet set);

}  // namespace mecsim
