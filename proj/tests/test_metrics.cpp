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
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "transdeno/metrics.hpp"

namespace transdeno {
namespace {

using testing::random_map;

TEST(Mse, IdenticalIsZero) {
  const auto a = random_map<float>({2, 3, 5}, 1);
  EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Mse, UnitOffsetIsOne) {
  const auto a = random_map<double>({2, 3, 5}, 1);
  auto b = a;
  for (double& v : b.values()) v += 1.0;
  EXPECT_NEAR(mse(a, b), 1.0, 1e-12);
}

TEST(Mse, MatchesScalarLoop) {
  const auto a = random_map<double>({3, 4, 6}, 2), b = random_map<double>({3, 4, 6}, 3);
  double acc = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t h = 0; h < 4; ++h) {
      for (std::size_t w = 0; w < 6; ++w) acc += std::pow(a(c, h, w) - b(c, h, w), 2);
    }
  }
  EXPECT_NEAR(mse(a, b), acc / 72.0, 1e-14);
}

TEST(Mse, ShapeMismatch) {
  EXPECT_THROW(mse(FeatureMap<float>(1, 2, 2), FeatureMap<float>(1, 2, 3)), ShapeError);
}

TEST(Psnr, Identities) {
  EXPECT_NEAR(psnr_from_mse(16.0, 4.0), 0.0, 1e-12);
  EXPECT_NEAR(psnr_from_mse(0.5, 3.0) - psnr_from_mse(1.0, 3.0), 3.0103, 1e-4);
  EXPECT_EQ(psnr_from_mse(0.0, 1.0), std::numeric_limits<double>::infinity());
}

TEST(Psnr, HandCalculation) {
  const FeatureMap<double> a(Shape3{1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const FeatureMap<double> b(1, 2, 2, 1.0);
  EXPECT_NEAR(psnr(a, b, 4.0), 6.600519383056492, 1e-12);
}

TEST(Psnr, StrictlyDecreasingInMse) {
  double prev = std::numeric_limits<double>::infinity();
  for (double m = 1e-6; m < 1e6; m *= 1.7) {
    const double p = psnr_from_mse(m, 2.0);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(BandEnergy, DcOnlyLandsInFirstBand) {
  SpectralMap<double> s(2, 4, 4, 0.0);
  s(0, 0, 0) = 3.0;
  s(1, 0, 0) = -2.0;
  const auto e = band_energy(s, 4);
  EXPECT_EQ(e, (std::vector<double>{13.0, 0.0, 0.0, 0.0}));
}

TEST(BandEnergy, ParsevalWithSpatialEnergy) {
  const auto m = random_map<double>({3, 8, 8}, 4);
  double spatial = 0;
  for (double v : m.values()) spatial += v * v;
  double total = 0;
  for (double e : band_energy(dct2_forward(m), 4)) {
    EXPECT_GE(e, 0.0);
    total += e;
  }
  EXPECT_NEAR(total / spatial, 1.0, 1e-5);
}

TEST(BandEnergy, MatchesLoopOracle) {
  const auto s = random_map<double, SpectralDomain>({2, 4, 6}, 5);
  const auto e = band_energy(s, 3);
  std::vector<double> ref(3, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t h = 0; h < 4; ++h) {
      for (std::size_t w = 0; w < 6; ++w) ref[(h * 6 + w) / 8] += s(c, h, w) * s(c, h, w);
    }
  }
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(e[b], ref[b], 1e-12);
}

TEST(BandEnergy, RequiresDivisibility) {
  EXPECT_THROW(band_energy(SpectralMap<float>(1, 3, 3), 4), ShapeError);
  EXPECT_THROW(band_energy(SpectralMap<float>(1, 4, 4), 0), ShapeError);
}

TEST(Evaluate, ReportFieldsAndJson) {
  const auto clean = random_map<double>({2, 4, 4}, 6);
  auto noisy = clean;
  for (double& v : noisy.values()) v += 0.2;
  auto den = clean;
  for (double& v : den.values()) v += 0.1;
  const auto r = evaluate(clean, noisy, den, 1.0);
  EXPECT_NEAR(r.mse, 0.01, 1e-12);
  EXPECT_NEAR(r.psnr_db, 20.0, 1e-9);
  EXPECT_NEAR(r.noise_suppression_gain_db, 20.0 * std::log10(2.0), 1e-9);
  ASSERT_EQ(r.band_energy.size(), 4u);
  const auto line = to_json_line(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  EXPECT_NEAR(j.at("psnr_db").get<double>(), 20.0, 1e-9);
  EXPECT_EQ(j.at("band_energy").size(), 4u);
}

TEST(Evaluate, PerfectDenoiseReportsInfinity) {
  const auto clean = random_map<double>({1, 4, 4}, 7);
  auto noisy = clean;
  noisy(0, 0, 0) += 1.0;
  const auto r = evaluate(clean, noisy, clean);
  EXPECT_TRUE(std::isinf(r.psnr_db));
  EXPECT_EQ(nlohmann::json::parse(to_json_line(r)).at("psnr_db"), "inf");
}

}  // namespace
}  // namespace transdeno
