#pragma once

#include <cmath>
#include <string>

#include "mecsim/config.hpp"
#include "mecsim/model_profiles.hpp"

namespace fixtures {

inline mecsim::DnnProfile tiny_profile() {
  return mecsim::DnnProfile{"tiny", 1e9, 8e5, {0.0, 0.3, 1.0}, {1.0, 0.5, 0.0}};
}

inline bool close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Small, fast configuration on synthetic profiles.
inline mecsim::ExperimentConfig small_config(std::uint64_t seed = 3) {
  mecsim::ExperimentConfig c;
  c.seed = seed;
  c.num_devices = 2;
  c.services_per_device = 2;
  c.synthetic_layers = 4;
  c.periods_per_episode = 6;
  c.episodes = 2;
  c.eval_episodes = 2;
  c.ppo.hidden = {16, 16};
  c.ppo.epochs = 2;
  c.ppo.minibatch = 4;
  return c;
}

}  // namespace fixtures
