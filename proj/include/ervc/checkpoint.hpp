#pragma once

// Checkpoint layout (all integers little-endian):
//   "ERVC1" | u32 version | u32 tensor count |
//   per tensor: u32 name length | UTF-8 name | u8 dtype (1 = f32, 2 = f64) |
//               u32 rank | u64 dims[rank] | raw IEEE-754 little-endian values

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ervc/model.hpp"

namespace ervc {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::variant<std::vector<float>, std::vector<double>> values;

  DType dtype() const { return values.index() == 0 ? DType::F32 : DType::F64; }
  bool operator==(const CheckpointTensor&) const = default;
};

std::vector<std::uint8_t> write_checkpoint(std::span<const CheckpointTensor> tensors);
/// Throws BadCheckpoint.
std::vector<CheckpointTensor> read_checkpoint(std::span<const std::uint8_t> bytes);

/// Snapshot of learnable tensors and running statistics.
template <typename T>
std::vector<CheckpointTensor> model_state(Model<T>& model);

/// Loads by name; every model state tensor must be present with a matching
/// shape. Values of the other precision are converted. Throws BadCheckpoint.
template <typename T>
void load_model_state(Model<T>& model, std::span<const CheckpointTensor> tensors);

}  // namespace ervc
