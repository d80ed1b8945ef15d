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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "transdeno/spectral.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno {

template <std::floating_point T, typename D>
double mse(const Map3<T, D>& a, const Map3<T, D>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// 10 log10(peak^2 / mse); +infinity when mse is zero.
inline double psnr_from_mse(double mse_value, double peak) {
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

template <std::floating_point T>
double psnr(const FeatureMap<T>& a, const FeatureMap<T>& b, double peak) {
  return psnr_from_mse(mse(a, b), peak);
}

/// Squared-coefficient energy summed over channels for each contiguous band
/// of the row-major flat frequency index.
template <std::floating_point T>
std::vector<double> band_energy(const SpectralMap<T>& m, std::size_t n_bands) {
  const std::size_t hw = m.shape().plane();
  if (n_bands == 0 || hw % n_bands != 0) {
    throw ShapeError("band_energy: " + std::to_string(n_bands) + " bands do not divide " + std::to_string(hw) +
                     " coefficients");
  }
  const std::size_t band = hw / n_bands;
  std::vector<double> e(n_bands, 0.0);
  for (std::size_t c = 0; c < m.channels(); ++c) {
    const auto plane = m.channel(c);
    for (std::size_t p = 0; p < hw; ++p) e[p / band] += static_cast<double>(plane[p]) * plane[p];
  }
  return e;
}

struct EvalReport {
  double mse = 0.0;
  double psnr_db = 0.0;
  std::vector<double> band_energy;
  double noise_suppression_gain_db = 0.0;
};

inline nlohmann::json to_json(const EvalReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return {{"mse", r.mse},
          {"psnr_db", num(r.psnr_db)},
          {"band_energy", r.band_energy},
          {"noise_suppression_gain_db", num(r.noise_suppression_gain_db)}};
}

/// Single-line JSON form of the report.
inline std::string to_json_line(const EvalReport& r) { return to_json(r).dump(); }

inline std::size_t default_band_count(std::size_t hw) { return hw % 4 == 0 ? 4 : 1; }

/// Scores `denoised` against `clean`, with `noisy` as the baseline for the
/// gain. Peak defaults to the clean map's maximum entry. Band energies are
/// those of the denoised map's spectrum.
template <std::floating_point T>
EvalReport evaluate(const FeatureMap<T>& clean, const FeatureMap<T>& noisy, const FeatureMap<T>& denoised,
                    std::optional<double> peak = std::nullopt) {
  const double pk =
      peak.value_or(static_cast<double>(*std::max_element(clean.values().begin(), clean.values().end())));
  EvalReport r;
  r.mse = mse(denoised, clean);
  r.psnr_db = psnr_from_mse(r.mse, pk);
  r.noise_suppression_gain_db = r.psnr_db - psnr_from_mse(mse(noisy, clean), pk);
  r.band_energy = band_energy(dct2_forward(denoised), default_band_count(clean.shape().plane()));
  return r;
}

}  // namespace transdeno
