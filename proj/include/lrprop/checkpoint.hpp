#pragma once

// Binary checkpoint format, all values little-endian:
//
//   bytes 0-7   magic "LRPROPCK"
//   u32         format version (kCheckpointVersion)
//   u32         flags, bit 0 set when optimizer state follows
//   u64 × 3     input, hidden, output dims
//   f64 × 2     mix weight, positional scale
//   f64 × N     W1 (row-major), b1, W2 (row-major), b2
//   optional:   u64 step, f64 × N first moments, f64 × N second moments

#include "lrprop/encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lrprop::checkpoint {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerState {
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step = 0;

  static OptimizerState zeros(Index size);
};

struct Checkpoint {
  encoder::EncoderParams params;
  std::optional<OptimizerState> optimizer;
};

std::string serialize(const encoder::EncoderParams& params, const OptimizerState* optimizer);
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const encoder::EncoderParams& params,
                     const OptimizerState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lrprop::checkpoint
