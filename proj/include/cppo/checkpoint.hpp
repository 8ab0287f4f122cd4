#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cppo/nn.hpp"

namespace cppo {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  int stage = 1;  // 1-based
  double epsilon = 0.0;
  std::uint64_t episode = 0;  // episodes completed when the file was written
  std::uint64_t update_index = 0;
  std::uint64_t seed = 0;
  std::uint32_t config_digest = 0;
  std::string config_text;  // serialized RunConfig
  std::string previous_stage_checkpoint;
  double wall_time_s = 0.0;
};

struct Checkpoint {
  CheckpointMeta meta;
  ActorCritic policy;
  Optimizers optimizers;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kFormat, kVersion, kChecksum };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Layout: "CPPOCKPT", u32 version, u32 header length, JSON header, then
/// little-endian float64 arrays (actor params, m, v, critic params, m, v, each
/// w1 b1 w2 b2 row-major), then u32 CRC-32 of everything before it.
/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_bytes(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& bytes);

}  // namespace cppo
