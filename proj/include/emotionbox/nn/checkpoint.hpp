#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "emotionbox/nn/adam.hpp"
#include "emotionbox/nn/model.hpp"

namespace ebox::nn {

// FEATURES: conditioning is the 25-wide pitch-histogram/density row.
// LABELS: conditioning is a 4-wide emotion one-hot.
enum class ConditioningMode : std::uint32_t { Features = 0, Labels = 1 };

struct Checkpoint {
    ConditioningMode mode = ConditioningMode::Features;
    std::uint64_t seed = 0;
    std::uint32_t epochs_completed = 0;
    ModelParams<float> params;
    AdamState<float> adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers and floats little-endian):
//   "EBOX1"                         5 bytes
//   u32 version                     currently 1
//   u32 mode                        0 features, 1 labels
//   u32 vocab, conditioning_dim, fc_dim, hidden, layers
//   f32 dropout
//   u64 seed
//   u32 epochs_completed
//   f64 lr, beta1, beta2, epsilon
//   u64 adam step
//   u32 tensor count K
//   3 × K tensors: parameters, then Adam first moments, then second
//   moments, each in ModelParams::tensors() order, each as
//   u32 rows, u32 cols, rows*cols f32 (row-major)
//   u64 FNV-1a hash of every preceding byte
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);

// Throws MalformedFile, VersionMismatch or ChecksumMismatch.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ebox::nn
