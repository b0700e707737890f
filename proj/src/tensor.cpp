/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "SGTF I/O assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace sgsm {

Tensor::Tensor(std::vector<std::uint64_t> s, std::vector<float> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (numel() != values.size()) {
    throw InvalidArgument("tensor value count does not match its shape");
  }
}

Tensor Tensor::zeros(std::vector<std::uint64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(t.numel(), 0.0f);
  return t;
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return shape.empty() ? 0 : n;
}

std::uint64_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape.size()) throw InvalidArgument("tensor axis out of range");
  return shape[axis];
}

namespace sgtf {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'T', 'F'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint32_t kMaxNdim = 8;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated SGTF file: " + path);
  return v;
}

}  // namespace

Tensor read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open SGTF file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not an SGTF file: " + path);
  }
  const auto version = get<std::uint8_t>(in, path);
  if (version != kVersion) {
    throw DataError("unsupported SGTF version in " + path);
  }
  const auto dtype = get<std::uint8_t>(in, path);
  if (dtype != kDtypeF32) {
    throw DataError("unsupported SGTF dtype in " + path);
  }
  const auto ndim = get<std::uint32_t>(in, path);
  if (ndim == 0 || ndim > kMaxNdim) {
    throw DataError("SGTF rank out of range in " + path);
  }

  Tensor t;
  t.shape.resize(ndim);
  std::size_t numel = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.shape[i] = get<std::uint64_t>(in, path);
    if (t.shape[i] == 0 || t.shape[i] > (1ull << 40) ||
        numel > (std::size_t{1} << 40) / t.shape[i]) {
      throw DataError("SGTF dimensions out of range in " + path);
    }
    numel *= static_cast<std::size_t>(t.shape[i]);
  }

  t.values.resize(numel);
  in.read(reinterpret_cast<char*>(t.values.data()),
          static_cast<std::streamsize>(numel * sizeof(float)));
  if (!in) throw DataError("truncated SGTF payload: " + path);

  for (float v : t.values) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in SGTF file: " + path);
    }
  }
  return t;
}

void write(const std::string& path, const Tensor& tensor) {
  if (tensor.ndim() == 0 || tensor.ndim() > kMaxNdim) {
    throw InvalidArgument("tensor rank out of range for SGTF: " + path);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot create SGTF file: " + path);

  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, kDtypeF32);
  put(out, static_cast<std::uint32_t>(tensor.ndim()));
  for (auto d : tensor.shape) put(out, d);
  out.write(reinterpret_cast<const char*>(tensor.values.data()),
            static_cast<std::streamsize>(tensor.values.size() * sizeof(float)));
  if (!out) throw DataError("failed writing SGTF file: " + path);
}

}  // namespace sgtf
}  // namespace sgsm
