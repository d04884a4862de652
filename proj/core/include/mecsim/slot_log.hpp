#pragma once

#include <cstdint>
#include <vector>

#include "mecsim/allocation.hpp"
#include "mecsim/model_profiles.hpp"
#include "mecsim/queueing.hpp"

namespace mecsim {

/// Everything recorded for one slot (the contents of the short-timescale buffer).
struct SlotLog {
  std::int64_t slot = 0;
  // Per service, taken before the slot's service and arrivals.
  std::vector<double> backlog_local;
  std::vector<double> backlog_transmit;
  std::vector<double> backlog_edge;
  std::vector<int> partition;
  std::vector<PartitionCosts> costs;
  std::vector<int> arrivals;
  Allocation allocation;
  // Per device.
  std::vector<double> gain;
  std::vector<double> local_energy;     // E^l = tau delta (sum f^l)^3
  std::vector<double> transmit_energy;  // E^t = tau p
  SlotDepartures flows;

  double total_energy() const;
};

}  // namespace mecsim
