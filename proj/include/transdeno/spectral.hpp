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
#include <numbers>
#include <vector>

#include "transdeno/tensor.hpp"

namespace transdeno {

/// Orthonormal DCT-II basis of size n, row k holding
/// alpha_k * cos(pi * k * (t + 1/2) / n) with alpha_0 = sqrt(1/n) and
/// alpha_k = sqrt(2/n) otherwise. Rows are orthonormal, so the transpose is
/// the DCT-III inverse. Entries are computed in double and rounded once.
template <std::floating_point T>
std::vector<T> dct_matrix(std::size_t n) {
  std::vector<T> m(n * n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = std::numbers::pi * static_cast<double>(k) * (static_cast<double>(t) + 0.5) / nn;
      m[k * n + t] = static_cast<T>(alpha * std::cos(angle));
    }
  }
  return m;
}

/// Separable per-channel 2D DCT for a fixed plane size. The basis matrices
/// are built once and never mutated, so one plan can be shared across
/// threads.
template <std::floating_point T>
class Dct2 {
 public:
  Dct2(std::size_t height, std::size_t width)
      : height_(height), width_(width), rows_(dct_matrix<T>(height)), cols_(dct_matrix<T>(width)) {
    if (height == 0 || width == 0) throw ShapeError("DCT plane dimensions must be positive");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  SpectralMap<T> forward(const FeatureMap<T>& x) const {
    check(x.shape());
    require_finite(x, "dct2_forward");
    SpectralMap<T> out(x.shape());
    for (std::size_t c = 0; c < x.channels(); ++c) {
      apply(x.channel(c), out.channel(c), /*inverse=*/false);
    }
    return out;
  }

  FeatureMap<T> inverse(const SpectralMap<T>& m) const {
    check(m.shape());
    require_finite(m, "dct2_inverse");
    FeatureMap<T> out(m.shape());
    for (std::size_t c = 0; c < m.channels(); ++c) {
      apply(m.channel(c), out.channel(c), /*inverse=*/true);
    }
    return out;
  }

  /// Single-plane transforms without the finiteness scan; used on hot paths
  /// (backward passes) where inputs are already known to be finite.
  void forward_plane(std::span<const T> in, std::span<T> out) const { apply(in, out, false); }
  void inverse_plane(std::span<const T> in, std::span<T> out) const { apply(in, out, true); }

 private:
  void check(const Shape3& s) const {
    if (s.height != height_ || s.width != width_) {
      throw ShapeError("DCT plan is " + std::to_string(height_) + "x" + std::to_string(width_) +
                       " but map is " + to_string(s));
    }
  }

  // forward: out = R * in * C^T ; inverse: out = R^T * in * C
  void apply(std::span<const T> in, std::span<T> out, bool inverse) const {
    const std::size_t h = height_, w = width_;
    std::vector<T> tmp(h * w, T(0));
    // Row pass along the width axis.
    for (std::size_t r = 0; r < h; ++r) {
      const T* src = in.data() + r * w;
      T* dst = tmp.data() + r * w;
      for (std::size_t j = 0; j < w; ++j) {
        T acc = 0;
        if (!inverse) {
          const T* basis = cols_.data() + j * w;
          for (std::size_t t = 0; t < w; ++t) acc += basis[t] * src[t];
        } else {
          for (std::size_t t = 0; t < w; ++t) acc += cols_[t * w + j] * src[t];
        }
        dst[j] = acc;
      }
    }
    // Column pass along the height axis.
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        T acc = 0;
        if (!inverse) {
          for (std::size_t t = 0; t < h; ++t) acc += rows_[i * h + t] * tmp[t * w + j];
        } else {
          for (std::size_t t = 0; t < h; ++t) acc += rows_[t * h + i] * tmp[t * w + j];
        }
        out[i * w + j] = acc;
      }
    }
  }

  std::size_t height_;
  std::size_t width_;
  std::vector<T> rows_;
  std::vector<T> cols_;
};

template <std::floating_point T>
SpectralMap<T> dct2_forward(const FeatureMap<T>& x) {
  return Dct2<T>(x.height(), x.width()).forward(x);
}

template <std::floating_point T>
FeatureMap<T> dct2_inverse(const SpectralMap<T>& m) {
  return Dct2<T>(m.height(), m.width()).inverse(m);
}

/// Entry (p, c) = m[c, p / W, p % W].
template <std::floating_point T>
FlattenedSpectrum<T> flatten(const SpectralMap<T>& m) {
  const std::size_t hw = m.shape().plane();
  FlattenedSpectrum<T> out(hw, m.channels());
  for (std::size_t c = 0; c < m.channels(); ++c) {
    const auto plane = m.channel(c);
    for (std::size_t p = 0; p < hw; ++p) out(p, c) = plane[p];
  }
  return out;
}

template <std::floating_point T>
SpectralMap<T> unflatten(const FlattenedSpectrum<T>& f, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || f.rows() != height * width) {
    throw ShapeError("unflatten: " + std::to_string(f.rows()) + " rows cannot be reshaped to " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  SpectralMap<T> out(f.cols(), height, width);
  for (std::size_t c = 0; c < f.cols(); ++c) {
    auto plane = out.channel(c);
    for (std::size_t p = 0; p < f.rows(); ++p) plane[p] = f(p, c);
  }
  return out;
}

}  // namespace transdeno
