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

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "transdeno/error.hpp"

namespace transdeno {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const noexcept { return height * width; }
  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  std::ostringstream os;
  os << s.channels << "x" << s.height << "x" << s.width;
  return os.str();
}

struct SpatialDomain {};
struct SpectralDomain {};

/// Dense C x H x W tensor, channel-major with the last axis fastest. The
/// domain tag keeps spatial feature maps and DCT coefficient maps from being
/// mixed up at compile time; the storage is identical.
template <std::floating_point T, typename Domain>
class Map3 {
 public:
  using value_type = T;

  Map3() = default;
  explicit Map3(Shape3 shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {
    if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
      throw ShapeError("map dimensions must be positive, got " + to_string(shape));
    }
  }
  Map3(std::size_t c, std::size_t h, std::size_t w, T fill = T(0)) : Map3(Shape3{c, h, w}, fill) {}
  Map3(Shape3 shape, std::vector<T> data) : Map3(shape) {
    if (data.size() != shape.size()) {
      throw ShapeError("payload of " + std::to_string(data.size()) + " values does not fit " +
                       to_string(shape));
    }
    data_ = std::move(data);
  }

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_.height + h) * shape_.width + w];
  }
  T operator()(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_.height + h) * shape_.width + w];
  }

  std::span<T> channel(std::size_t c) & { return {data_.data() + c * shape_.plane(), shape_.plane()}; }
  std::span<const T> channel(std::size_t c) const& {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }
  std::span<const T> channel(std::size_t c) const&& = delete;

  std::span<T> values() & noexcept { return data_; }
  std::span<const T> values() const& noexcept { return data_; }
  std::span<const T> values() const&& = delete;
  const std::vector<T>& vector() const noexcept { return data_; }

  friend bool operator==(const Map3&, const Map3&) = default;

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

template <std::floating_point T>
using FeatureMap = Map3<T, SpatialDomain>;

template <std::floating_point T>
using SpectralMap = Map3<T, SpectralDomain>;

/// HW x C matrix of DCT coefficients, row-major; row p is the flat
/// frequency index i * W + j and column c the channel.
template <std::floating_point T>
class FlattenedSpectrum {
 public:
  FlattenedSpectrum() = default;
  FlattenedSpectrum(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t p, std::size_t c) { return data_[p * cols_ + c]; }
  T operator()(std::size_t p, std::size_t c) const { return data_[p * cols_ + c]; }

  std::span<T> values() & noexcept { return data_; }
  std::span<const T> values() const& noexcept { return data_; }
  std::span<const T> values() const&& = delete;

  friend bool operator==(const FlattenedSpectrum&, const FlattenedSpectrum&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Throws DomainError naming the first non-finite entry as (c, h, w).
template <std::floating_point T, typename D>
void require_finite(const Map3<T, D>& m, const char* what) {
  const auto v = m.values();
  const auto it = std::find_if(v.begin(), v.end(), [](T x) { return !std::isfinite(x); });
  if (it == v.end()) return;
  const auto idx = static_cast<std::size_t>(it - v.begin());
  const auto plane = m.shape().plane();
  std::ostringstream os;
  os << what << ": non-finite value " << *it << " at index (" << idx / plane << ", "
     << (idx % plane) / m.width() << ", " << idx % m.width() << ")";
  throw DomainError(os.str());
}

template <std::floating_point T>
void require_finite(std::span<const T> v, const char* what) {
  const auto it = std::find_if(v.begin(), v.end(), [](T x) { return !std::isfinite(x); });
  if (it == v.end()) return;
  std::ostringstream os;
  os << what << ": non-finite value " << *it << " at index " << (it - v.begin());
  throw DomainError(os.str());
}

inline void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                     std::to_string(got));
  }
}

template <std::floating_point To, std::floating_point From, typename D>
Map3<To, D> cast(const Map3<From, D>& m) {
  std::vector<To> out(m.values().begin(), m.values().end());
  return Map3<To, D>(m.shape(), std::move(out));
}

}  // namespace transdeno
