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

#include <cmath>
#include <span>
#include <vector>

#include "transdeno/tensor.hpp"

namespace transdeno {

/// Element-wise attention weights, each in [0, 1].
template <std::floating_point T>
class GateMap {
 public:
  GateMap() = default;
  explicit GateMap(std::vector<T> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const T g = values_[i];
      if (!(g >= T(0) && g <= T(1))) {
        throw DomainError("gate value " + std::to_string(g) + " at index " + std::to_string(i) +
                          " is outside [0, 1]");
      }
    }
  }
  std::span<const T> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  T operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<T> values_;
};

/// Element-wise nonnegative thresholds.
template <std::floating_point T>
class ThresholdMap {
 public:
  ThresholdMap() = default;
  explicit ThresholdMap(std::vector<T> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= T(0))) {
        throw DomainError("threshold at index " + std::to_string(i) + " is negative or NaN");
      }
    }
  }
  std::span<const T> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  T operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<T> values_;
};

// sign(0) = 0, so soft(0, 0) = 0.
template <std::floating_point T>
constexpr T sign(T x) noexcept {
  return static_cast<T>((T(0) < x) - (x < T(0)));
}

/// sign(x) * max(0, |x| - theta).
template <std::floating_point T>
T soft(T x, T theta) {
  if (!(theta >= T(0))) throw DomainError("soft: threshold must be nonnegative");
  return sign(x) * std::max(T(0), std::abs(x) - theta);
}

template <std::floating_point T>
std::vector<T> soft_map(std::span<const T> x, const ThresholdMap<T>& theta) {
  require_length(theta.size(), x.size(), "soft_map threshold");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = soft(x[i], theta[i]);
  return out;
}

/// theta = (1 - g) * |x|, the threshold under which soft thresholding
/// reproduces the gated product g * x.
template <std::floating_point T>
ThresholdMap<T> gate_to_threshold(const GateMap<T>& g, std::span<const T> x) {
  require_length(g.size(), x.size(), "gate_to_threshold gate");
  std::vector<T> theta(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) theta[i] = (T(1) - g[i]) * std::abs(x[i]);
  return ThresholdMap<T>(std::move(theta));
}

template <std::floating_point T>
std::vector<T> gate_map(const GateMap<T>& g, std::span<const T> x) {
  require_length(g.size(), x.size(), "gate_map gate");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = g[i] * x[i];
  return out;
}

}  // namespace transdeno
