#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "etest/types.hpp"

namespace etest {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

/// Dense row-major tensor as stored in an EMT1 file.
///
/// Values are held as doubles; an F32 tensor only ever holds values that are
/// exactly representable as float, so files round-trip byte for byte.
struct Tensor {
  DType dtype = DType::F64;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const noexcept;
  bool operator==(const Tensor&) const = default;

  static Tensor from_vector(const Vector& v, DType dtype = DType::F64);
  static Tensor from_image(const ImageVec& x, DType dtype = DType::F64);
  Vector to_vector() const;
};

// EMT1 layout, little-endian:
//   "EMT1" | dtype u8 | ndim u8 | ndim x u32 dims | row-major payload
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace etest
