#pragma once
// Binary checkpoints. Layout, all integers little-endian:
//
//   "VBCK"  u32 version (1)
//   u32 n, model config text (key=value lines)
//   u64 seed  i64 step
//   u32 tensor count, then per tensor:
//     u32 n, name   u32 ndim   u64 dims[ndim]   f32 values[prod(dims)]
//   u8 has_optimizer; when 1: i64 optimizer steps, then per tensor
//     f32 first_moment[numel]  f32 second_moment[numel]

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajrest/model.hpp"
#include "trajrest/tensor.hpp"

namespace trajrest {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  std::vector<std::vector<float>> values;
  bool has_optimizer = false;
  std::int64_t optimizer_steps = 0;
  std::vector<std::vector<float>> first_moments;
  std::vector<std::vector<float>> second_moments;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
Checkpoint make_checkpoint(const ModelParams<T>& params, std::uint64_t seed, std::int64_t step);

template <typename T>
ModelParams<T> params_from_checkpoint(const Checkpoint& ckpt);

}  // namespace trajrest
