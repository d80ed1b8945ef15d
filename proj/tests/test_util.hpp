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

// Test-only helpers and independent oracles. Nothing here calls into the
// code paths it is used to check.

#include <cmath>
#include <numbers>
#include <vector>

#include "transdeno/random.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno::testing {

template <std::floating_point T, typename D = SpatialDomain>
Map3<T, D> random_map(Shape3 s, std::uint64_t seed, double scale = 1.0) {
  Map3<T, D> m(s);
  CounterRng rng(seed, 0x7E57);
  for (auto& v : m.values()) v = static_cast<T>(scale * rng.normal());
  return m;
}

template <std::floating_point T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::vector<T> v(n);
  CounterRng rng(seed, 0x7E58);
  for (auto& x : v) x = static_cast<T>(scale * rng.normal());
  return v;
}

template <typename X>
decltype(auto) flat(const X& x) {
  if constexpr (requires { x.vector(); }) {
    return x.vector();
  } else {
    return (x);
  }
}

/// Accepts spans, vectors or whole maps (compared entrywise).
template <typename A0, typename B0>
double max_abs_diff(const A0& a0, const B0& b0) {
  const auto& a = flat(a0);
  const auto& b = flat(b0);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

/// Direct O(H^2 W^2) evaluation of the 2D DCT-II with orthonormal factors,
/// in long double, one plane at a time.
inline std::vector<double> dct2_bruteforce(const std::vector<double>& x, std::size_t H, std::size_t W,
                                           bool inverse) {
  const long double pi = std::numbers::pi_v<long double>;
  auto alpha = [](std::size_t k, std::size_t n) {
    return k == 0 ? std::sqrt(1.0L / n) : std::sqrt(2.0L / n);
  };
  std::vector<double> out(H * W);
  for (std::size_t a = 0; a < H; ++a) {
    for (std::size_t b = 0; b < W; ++b) {
      long double acc = 0;
      for (std::size_t c = 0; c < H; ++c) {
        for (std::size_t d = 0; d < W; ++d) {
          // forward: (a, b) = frequency (i, j), (c, d) = position (h, w).
          const std::size_t i = inverse ? c : a, j = inverse ? d : b;
          const std::size_t h = inverse ? a : c, w = inverse ? b : d;
          acc += x[c * W + d] * alpha(i, H) * alpha(j, W) * std::cos(pi * i / H * (h + 0.5L)) *
                 std::cos(pi * j / W * (w + 0.5L));
        }
      }
      out[a * W + b] = static_cast<double>(acc);
    }
  }
  return out;
}

}  // namespace transdeno::testing
