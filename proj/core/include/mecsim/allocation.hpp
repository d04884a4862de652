#pragma once

#include <vector>

#include "mecsim/topology.hpp"

namespace mecsim {

/// Per-slot resource decision.
struct Allocation {
  std::vector<double> local_hz;      // per service, f^l
  std::vector<double> rate_bps;      // per service, r
  std::vector<double> edge_hz;       // per service, f^e
  std::vector<double> power_w;       // per device, p
  std::vector<double> max_rate_bps;  // per device, R_m(p_m) under this slot's gain

  static Allocation zeros(const Topology& topo) {
    const auto services = static_cast<std::size_t>(topo.num_services());
    const auto devices = static_cast<std::size_t>(topo.num_devices());
    return Allocation{std::vector<double>(services, 0.0), std::vector<double>(services, 0.0),
                      std::vector<double>(services, 0.0), std::vector<double>(devices, 0.0),
                      std::vector<double>(devices, 0.0)};
  }
};

}  // namespace mecsim
