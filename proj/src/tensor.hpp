/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgsm {

/// Dense row-major float32 tensor.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> values;

  Tensor() = default;
  Tensor(std::vector<std::uint64_t> s, std::vector<float> v);

  static Tensor zeros(std::vector<std::uint64_t> shape);

  std::size_t numel() const;
  std::size_t ndim() const { return shape.size(); }
  std::uint64_t dim(std::size_t axis) const;

  float* data() { return values.data(); }
  const float* data() const { return values.data(); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// SGTF tensor file format:
//   magic "SGTF", u8 version = 1, u8 dtype = 1 (float32 little-endian),
//   u32 ndim, ndim x u64 dims, then the row-major payload.
// All integer fields are little-endian.
namespace sgtf {

Tensor read(const std::string& path);
void write(const std::string& path, const Tensor& tensor);

}  // namespace sgtf

}  // namespace sgsm
