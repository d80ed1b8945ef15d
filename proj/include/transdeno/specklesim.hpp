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
#include <cstdint>
#include <string>
#include <vector>

#include "transdeno/error.hpp"
#include "transdeno/random.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno {

struct SceneSpec {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 4;
  std::size_t n_targets = 3;
  std::size_t target_size = 2;
  double target_amplitude = 4.0;
  double background_level = 1.0;
  std::size_t looks = 1;
  std::uint64_t seed = 0;

  Shape3 shape() const noexcept { return {channels, height, width}; }

  void validate() const {
    if (height == 0 || width == 0 || channels == 0) throw DomainError("scene dimensions must be positive");
    if (looks == 0) throw DomainError("looks must be at least 1");
    if (!(background_level >= 0.0) || !std::isfinite(background_level)) {
      throw DomainError("background level must be finite and nonnegative");
    }
    if (!std::isfinite(target_amplitude)) throw DomainError("target amplitude must be finite");
    if (n_targets > 0 && (target_size == 0 || target_size > height || target_size > width)) {
      throw DomainError("targets of size " + std::to_string(target_size) + " do not fit a " +
                        std::to_string(height) + "x" + std::to_string(width) + " map");
    }
  }
};

struct TargetBox {
  std::size_t row;
  std::size_t col;
  std::size_t size;

  bool overlaps(const TargetBox& o) const noexcept {
    return row < o.row + o.size && o.row < row + size && col < o.col + o.size && o.col < col + size;
  }
};

/// Seeded uniform placement of non-overlapping square targets; each target
/// gets at most 1000 attempts.
inline std::vector<TargetBox> place_targets(const SceneSpec& spec, CounterRng& rng) {
  std::vector<TargetBox> boxes;
  const std::size_t rows = spec.height - spec.target_size + 1;
  const std::size_t cols = spec.width - spec.target_size + 1;
  for (std::size_t t = 0; t < spec.n_targets; ++t) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const TargetBox b{rng.below(rows), rng.below(cols), spec.target_size};
      placed = std::none_of(boxes.begin(), boxes.end(), [&](const TargetBox& o) { return o.overlaps(b); });
      if (placed) boxes.push_back(b);
    }
    if (!placed) {
      throw DomainError("could not place target " + std::to_string(t + 1) + " of " +
                        std::to_string(spec.n_targets) + " without overlap after 1000 attempts");
    }
  }
  return boxes;
}

/// Constant background plus bright square targets; each channel scales the
/// target amplitude by its own seeded factor in [0.9, 1.1].
template <std::floating_point T = float>
FeatureMap<T> gen_clean(const SceneSpec& spec) {
  spec.validate();
  CounterRng rng(spec.seed, /*stream=*/1);
  const auto boxes = place_targets(spec, rng);
  FeatureMap<T> out(spec.shape(), static_cast<T>(spec.background_level));
  for (std::size_t c = 0; c < spec.channels; ++c) {
    const double amp = spec.target_amplitude * (1.0 + 0.1 * (2.0 * rng.uniform() - 1.0));
    for (const auto& b : boxes) {
      for (std::size_t i = b.row; i < b.row + b.size; ++i) {
        for (std::size_t j = b.col; j < b.col + b.size; ++j) {
          out(c, i, j) = static_cast<T>(spec.background_level + amp);
        }
      }
    }
  }
  return out;
}

/// Multiplicative L-look intensity speckle: clean * n with
/// n ~ Gamma(L, 1/L), i.e. unit mean and variance 1/L.
template <std::floating_point T>
FeatureMap<T> apply_speckle(const FeatureMap<T>& clean, std::size_t looks, std::uint64_t seed) {
  if (looks == 0) throw DomainError("looks must be at least 1");
  const auto v = clean.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= T(0))) {
      throw DomainError("speckle requires nonnegative intensities; entry " + std::to_string(i) + " is " +
                        std::to_string(v[i]));
    }
  }
  CounterRng rng(seed, /*stream=*/2);
  const double L = static_cast<double>(looks);
  FeatureMap<T> out(clean.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double n = rng.gamma(L) / L;
    out.values()[i] = static_cast<T>(static_cast<double>(v[i]) * n);
  }
  return out;
}

/// Equivalent number of looks (mean / std)^2 of a homogeneous sample.
template <std::floating_point T>
double equivalent_looks(std::span<const T> region) {
  double mean = 0.0;
  for (T x : region) mean += x;
  mean /= static_cast<double>(region.size());
  double var = 0.0;
  for (T x : region) var += (x - mean) * (x - mean);
  var /= static_cast<double>(region.size() - 1);
  return mean * mean / var;
}

template <std::floating_point T>
struct ScenePair {
  FeatureMap<T> clean;
  FeatureMap<T> noisy;
};

/// Scene `index` of a dataset: its own derived seed drives both target
/// placement and speckle, so any scene can be regenerated in isolation.
template <std::floating_point T = float>
ScenePair<T> make_scene(const SceneSpec& base, std::uint64_t index) {
  SceneSpec spec = base;
  spec.seed = splitmix64(base.seed ^ splitmix64(index + 1));
  auto clean = gen_clean<T>(spec);
  auto noisy = apply_speckle(clean, spec.looks, spec.seed);
  return {std::move(clean), std::move(noisy)};
}

}  // namespace transdeno
