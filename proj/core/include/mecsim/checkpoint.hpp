#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mecsim/ppo.hpp"

namespace mecsim {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::int64_t episodes_completed = 0;
  std::string config_hash;
};

/// JSON dump of all three networks and both optimizer states.
void save_checkpoint(const std::filesystem::path& path, const ActorCritic& ac, const CheckpointMeta& meta);

/// Loads a checkpoint whose networks must match `spec` and `hidden`; throws CheckpointError otherwise.
ActorCritic load_checkpoint(const std::filesystem::path& path, const PolicySpec& spec, const std::vector<int>& hidden,
                            CheckpointMeta* meta = nullptr);

}  // namespace mecsim
