// Copyright 2026 The TransDeno Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "transdeno/io/binary.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno::io {

// Layout (all integers little-endian):
//   8 bytes  magic "GSTENSR1"
//   u32      ndim
//   u32 x ndim dims
//   u8       dtype (1 = binary32, 2 = binary64)
//   payload  product(dims) values, row-major, last axis fastest
inline constexpr std::string_view kTensorMagic = "GSTENSR1";

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

inline std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

struct TensorData {
  std::vector<std::uint32_t> dims;
  std::variant<std::vector<float>, std::vector<double>> values;

  DType dtype() const noexcept { return values.index() == 0 ? DType::f32 : DType::f64; }
  std::size_t count() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, values);
  }
  friend bool operator==(const TensorData&, const TensorData&) = default;
};

namespace detail {

inline std::size_t checked_count(const std::vector<std::uint32_t>& dims, std::size_t limit, const ByteReader* r) {
  std::size_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > limit / d) {
      if (r) r->fail("dimensions describe more values than the payload holds");
      throw FormatError("dimension product overflows");
    }
    n *= d;
  }
  return n;
}

template <typename T>
void put_values(ByteWriter& w, const std::vector<T>& v) {
  for (T x : v) {
    if constexpr (std::is_same_v<T, float>) w.f32(x);
    else w.f64(x);
  }
}

template <typename T>
std::vector<T> get_values(ByteReader& r, std::size_t n) {
  r.need(n * sizeof(T));
  std::vector<T> v(n);
  for (auto& x : v) {
    if constexpr (std::is_same_v<T, float>) x = r.f32();
    else x = r.f64();
  }
  return v;
}

}  // namespace detail

inline Bytes encode_tensor(const TensorData& t) {
  const std::size_t n = detail::checked_count(t.dims, SIZE_MAX, nullptr);
  if (n != t.count()) {
    throw ShapeError("tensor holds " + std::to_string(t.count()) + " values but dims give " + std::to_string(n));
  }
  ByteWriter w;
  w.raw(kTensorMagic);
  w.u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) w.u32(d);
  w.u8(static_cast<std::uint8_t>(t.dtype()));
  std::visit([&](const auto& v) { detail::put_values(w, v); }, t.values);
  return w.take();
}

inline TensorData decode_tensor(const Bytes& bytes, const std::string& source = "tensor") {
  ByteReader r(bytes, source);
  if (r.raw(kTensorMagic.size()) != kTensorMagic) r.fail("bad magic (not a GSTENSR1 tensor file)");
  TensorData t;
  const std::uint32_t ndim = r.u32();
  r.need(static_cast<std::size_t>(ndim) * 4);
  t.dims.resize(ndim);
  for (auto& d : t.dims) d = r.u32();
  const std::uint8_t code = r.u8();
  if (code != 1 && code != 2) r.fail("unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t n = detail::checked_count(t.dims, r.remaining() / dtype_size(dtype) + 1, &r);
  if (r.remaining() != n * dtype_size(dtype)) {
    r.fail("payload is " + std::to_string(r.remaining()) + " bytes, expected " +
           std::to_string(n * dtype_size(dtype)));
  }
  if (dtype == DType::f32) t.values = detail::get_values<float>(r, n);
  else t.values = detail::get_values<double>(r, n);
  return t;
}

inline void write_tensor_file(const std::filesystem::path& path, const TensorData& t) {
  write_file_atomic(path, encode_tensor(t));
}

inline TensorData read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor(read_file(path), path.string());
}

template <std::floating_point T, typename D>
TensorData to_tensor_data(const Map3<T, D>& m) {
  TensorData t;
  t.dims = {static_cast<std::uint32_t>(m.channels()), static_cast<std::uint32_t>(m.height()),
            static_cast<std::uint32_t>(m.width())};
  t.values = std::vector<T>(m.values().begin(), m.values().end());
  return t;
}

/// Interprets a 3-D tensor as C x H x W (2-D as 1 x H x W), converting the
/// payload to T.
template <std::floating_point T>
FeatureMap<T> to_feature_map(const TensorData& t) {
  Shape3 s;
  if (t.dims.size() == 3) s = {t.dims[0], t.dims[1], t.dims[2]};
  else if (t.dims.size() == 2) s = {1, t.dims[0], t.dims[1]};
  else throw ShapeError("expected a 2-D or 3-D tensor, got " + std::to_string(t.dims.size()) + " dims");
  if (s.size() == 0) throw ShapeError("feature map has a zero dimension");
  std::vector<T> v = std::visit([](const auto& src) { return std::vector<T>(src.begin(), src.end()); }, t.values);
  return FeatureMap<T>(s, std::move(v));
}

}  // namespace transdeno::io
