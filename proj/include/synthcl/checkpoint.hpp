#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "synthcl/momentum_queue.hpp"

namespace synthcl {

/// Everything needed to continue a run bit-exactly.
struct RunState {
  std::uint64_t step = 0;
  EncoderPair pair;
  NegativeQueue queue{1, 1};
  Rng rng;

  bool operator==(const RunState&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint layout, little-endian:
///   "S2CK" | u32 version | u64 step | u64 rng blob length | rng blob
///   | encoder (online) | encoder (target)
///   | queue: u64 capacity, u64 dim, u64 fill, u64 head, capacity*dim f64
///   | u32 CRC32 of all preceding bytes
/// encoder: u32 layer count, u8 activation, then per layer u32 out, u32 in,
///   out*in f64 weights (row-major), out f64 bias.
std::vector<std::uint8_t> checkpoint_encode(const RunState& state);
/// The momentum field is not stored; callers set it from their config.
RunState checkpoint_decode(std::span<const std::uint8_t> bytes);

void checkpoint_save(const RunState& state, const std::filesystem::path& path);
RunState checkpoint_load(const std::filesystem::path& path);

/// CRC32 (zlib polynomial) over the parameter bytes; a cheap identity for
/// comparing runs.
std::uint32_t params_checksum(const EncoderParams& params);

}  // namespace synthcl
