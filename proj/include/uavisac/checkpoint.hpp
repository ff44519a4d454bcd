#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "uavisac/sac.hpp"

namespace uavisac {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  SacAgent agent;
  std::uint64_t config_hash = 0;
  std::string scheme;
};

/// JSON dump of all five networks, the entropy coefficient and the scenario
/// config hash. Optimizer moments are not stored.
void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent, std::uint64_t config_hash,
                     const std::string& scheme);

/// Throws Error on a version mismatch or malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uavisac
