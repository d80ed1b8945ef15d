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

#include "test_util.hpp"
#include "transdeno/transdeno.hpp"

namespace transdeno {
namespace {

using testing::max_abs_diff;
using testing::random_map;

TransDenoConfig small_config(std::size_t C = 3, std::size_t H = 4, std::size_t W = 8) {
  TransDenoConfig c;
  c.channels = C;
  c.height = H;
  c.width = W;
  c.reduction = 2;
  c.degrofc.group_counts = {2, 4, 8};
  return c;
}

TEST(PooledSpectrum, AverageplusMax) {
  SpectralMap<float> m(2, 1, 2);
  m(0, 0, 0) = 1;
  m(1, 0, 0) = 3;
  m(0, 0, 1) = -2;
  m(1, 0, 1) = -4;
  const auto s = pooled_spectrum(m);
  EXPECT_EQ(s[0], 5.0f);
  EXPECT_EQ(s[1], -5.0f);
}

TEST(PooledSpectrum, SingleChannelDoubles) {
  const auto m = random_map<double, SpectralDomain>({1, 3, 5}, 1);
  const auto s = pooled_spectrum(m);
  for (std::size_t p = 0; p < 15; ++p) EXPECT_EQ(s[p], 2.0 * m.values()[p]);
}

TEST(PooledSpectrum, MatchesScalarLoop) {
  const auto m = random_map<double, SpectralDomain>({5, 4, 6}, 2);
  std::vector<std::size_t> argmax;
  const auto s = pooled_spectrum(m, &argmax);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double sum = 0, mx = -1e300;
      std::size_t first = 0;
      for (std::size_t c = 0; c < 5; ++c) {
        sum += m(c, i, j);
        if (m(c, i, j) > mx) {
          mx = m(c, i, j);
          first = c;
        }
      }
      EXPECT_NEAR(s[i * 6 + j], sum / 5 + mx, 1e-14);
      EXPECT_EQ(argmax[i * 6 + j], first);
    }
  }
}

TEST(PooledSpectrum, TiesRouteToFirstChannel) {
  SpectralMap<float> m(3, 1, 1, 2.0f);
  std::vector<std::size_t> argmax;
  pooled_spectrum(m, &argmax);
  EXPECT_EQ(argmax[0], 0u);
}

TEST(AttentionMap, ZeroParametersGiveOneHalf) {
  const TransDenoParams<float> p(small_config());
  const auto s = testing::random_vector<float>(32, 3);
  const auto a = attention_map<float>(s, p);
  for (float v : a.values()) EXPECT_EQ(v, 0.5f);
}

TEST(AttentionMap, StrictlyInsideUnitInterval) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = TransDenoParams<double>::random(small_config(), seed);
    const auto a = attention_map<double>(testing::random_vector<double>(32, seed, 3.0), p);
    for (double v : a.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

// Parameters follow the closed-form pattern of tests/oracles/attention_tiny.py.
TransDenoParams<double> tiny_params(BlendConvention conv) {
  TransDenoConfig c;
  c.channels = 1;
  c.height = 2;
  c.width = 4;
  c.reduction = 2;
  c.degrofc.group_counts = {2, 4};
  c.degrofc.convention = conv;
  TransDenoParams<double> p(c);
  auto value = [](int stage, int tensor, std::size_t idx, double amp) {
    return amp * std::sin(1.7 * stage + 0.61 * tensor + 0.37 * static_cast<double>(idx) + 0.1);
  };
  int tensor = 0;
  std::string current_stage;
  p.visit([&](const std::string& path, std::span<double> v, const auto&) {
    const std::string stage = path.substr(0, 6);
    if (stage != current_stage) {
      current_stage = stage;
      tensor = 0;
    }
    const int st = stage == "stage1" ? 1 : 2;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (path.ends_with("coeff.bias")) v[i] = 0.5 + value(st, tensor, i, 0.3);
      else if (path.ends_with("coeff.weight")) v[i] = value(st, tensor, i, 0.05);
      else if (path.ends_with(".bias")) v[i] = value(st, tensor, i, 0.2);
      else v[i] = value(st, tensor, i, 0.5);
    }
    ++tensor;
  });
  return p;
}

TEST(AttentionMap, TinyInstanceMatchesIndependentOracle) {
  std::vector<double> s(8);
  for (std::size_t j = 0; j < 8; ++j) s[j] = 2.0 * std::cos(0.9 * j) + 0.3 * j;

  const double direct[8] = {0.4870905732346573, 0.498255855886576,  0.5096588550034052, 0.5197465454493155,
                           0.5298968816616214, 0.600768971768627,  0.6851780321518731, 0.6134498462560228};
  const double standard[8] = {0.47594338174965434, 0.48479589142927354, 0.49571615627119003,
                              0.5072202106865337,  0.5226334519124985,  0.6481238420688041,
                              0.74382119766407,    0.6742024873460195};
  const auto pp = tiny_params(BlendConvention::direct);
  const auto t = attention_trace<double>(s, pp);
  EXPECT_NEAR(t.stage1.coeff[0], 0.5251533862771532, 1e-14);
  EXPECT_NEAR(t.stage1.coeff[1], 0.9980703215813662, 1e-14);
  EXPECT_NEAR(t.stage2.coeff[0], 0.3078612798779091, 1e-14);
  EXPECT_NEAR(t.stage2.coeff[1], 0.3405547526996815, 1e-14);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(t.attention[i], direct[i], 1e-14) << i;

  const auto a = attention_map<double>(s, tiny_params(BlendConvention::standard));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(a[i], standard[i], 1e-14) << i;
}

TEST(AttentionMap, RejectsWrongDescriptorLength) {
  const TransDenoParams<float> p(small_config());
  EXPECT_THROW(attention_map<float>(std::vector<float>(31), p), ShapeError);
}

TEST(TransDeno, OpenGateIsIdentity) {
  auto p = TransDenoParams<float>::random(small_config(), 1);
  p.force_gate_bias(50.0f);
  const auto M = random_map<float>({3, 4, 8}, 4);
  EXPECT_LE(max_abs_diff(transdeno_forward(M, p), M.values()), 1e-4);
  EXPECT_LE(max_abs_diff(transdeno_forward_gated(M, p), M.values()), 1e-4);
}

TEST(TransDeno, ClosedGateAnnihilates) {
  auto p = TransDenoParams<float>::random(small_config(), 1);
  p.force_gate_bias(-50.0f);
  const auto M = random_map<float>({3, 4, 8}, 5);
  const auto thresholded = transdeno_forward(M, p);
  const auto gated = transdeno_forward_gated(M, p);
  for (float v : thresholded.values()) EXPECT_NEAR(v, 0.0f, 1e-6f);
  for (float v : gated.values()) EXPECT_NEAR(v, 0.0f, 1e-6f);
}

double rel_diff(const FeatureMap<double>& a, const FeatureMap<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a.values()[i] - b.values()[i]));
    den = std::max(den, std::abs(b.values()[i]));
  }
  return num / den;
}

TEST(TransDeno, ThresholdPathEqualsGatedPath) {
  for (auto axis : {AttentionAxis::spatial, AttentionAxis::channel}) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      auto cfg = small_config(8, 4, 8);
      cfg.axis = axis;
      cfg.degrofc.group_counts = {2, 4};
      const auto p = TransDenoParams<double>::random(cfg, seed);
      const auto M = random_map<double>(cfg.shape(), 1000 + seed, 2.0);
      EXPECT_LE(rel_diff(transdeno_forward(M, p), transdeno_forward_gated(M, p)), 1e-12);
    }
  }
  const auto p = TransDenoParams<float>::random(small_config(), 3);
  const auto M = random_map<float>({3, 4, 8}, 3);
  EXPECT_LE(max_abs_diff(transdeno_forward(M, p), transdeno_forward_gated(M, p)), 1e-6);
}

TEST(TransDeno, EnergyContracts) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = TransDenoParams<double>::random(small_config(), seed);
    const auto M = random_map<double>({3, 4, 8}, seed);
    const auto out = transdeno_forward(M, p);
    EXPECT_EQ(out.shape(), M.shape());
    double em = 0, eo = 0;
    for (double v : M.values()) em += v * v;
    for (double v : out.values()) eo += v * v;
    EXPECT_LE(eo, em);
  }
}

TEST(TransDeno, DeterministicBitIdentical) {
  const auto p = TransDenoParams<float>::random(small_config(), 7);
  const auto M = random_map<float>({3, 4, 8}, 7);
  EXPECT_EQ(transdeno_forward(M, p), transdeno_forward(M, p));
  EXPECT_EQ(TransDenoParams<float>::random(small_config(), 7), p);
}

TEST(TransDeno, ChannelPermutationEquivariance) {
  const auto p = TransDenoParams<double>::random(small_config(), 8);
  // Distinct channel values avoid max-pool ties.
  const auto M = random_map<double>({3, 4, 8}, 8);
  const std::size_t perm[3] = {2, 0, 1};
  FeatureMap<double> Mp(M.shape());
  for (std::size_t c = 0; c < 3; ++c) std::copy(M.channel(perm[c]).begin(), M.channel(perm[c]).end(), Mp.channel(c).begin());
  const auto out = transdeno_forward(M, p), outp = transdeno_forward(Mp, p);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(max_abs_diff(outp.channel(c), out.channel(perm[c])), 1e-12);
}

TEST(TransDeno, ChannelAxisGatesWholeChannels) {
  auto cfg = small_config(8, 4, 8);
  cfg.axis = AttentionAxis::channel;
  cfg.degrofc.group_counts = {2, 4};
  const auto p = TransDenoParams<double>::random(cfg, 2);
  const auto M = random_map<double>(cfg.shape(), 2);
  const auto t = transdeno_trace(M, p);
  ASSERT_EQ(t.attention.size(), 8u);
  const auto out = transdeno_forward(M, p);
  // Each output channel is its input channel scaled by that channel's gate.
  for (std::size_t c = 0; c < 8; ++c) {
    for (std::size_t q = 0; q < 32; ++q) EXPECT_NEAR(out.channel(c)[q], t.attention[c] * M.channel(c)[q], 1e-12);
  }
}

TEST(TransDeno, RejectsUnboundShape) {
  const auto p = TransDenoParams<float>::random(small_config(), 1);
  EXPECT_THROW(transdeno_forward(FeatureMap<float>(3, 4, 4), p), ShapeError);
  EXPECT_THROW(transdeno_forward(FeatureMap<float>(2, 4, 8), p), ShapeError);
}

TEST(TransDenoConfig, DivisibilityFailsFast) {
  auto c = small_config(1, 3, 3);  // HW = 9
  EXPECT_THROW(TransDenoParams<float>{c}, ShapeError);
  c = small_config(1, 4, 4);
  c.reduction = 4;  // hidden 4 not divisible by 8
  EXPECT_THROW(TransDenoParams<float>{c}, ShapeError);
  c.reduction = 3;
  EXPECT_THROW(TransDenoParams<float>{c}, ShapeError);
  c.reduction = 2;
  EXPECT_NO_THROW(TransDenoParams<float>{c});
}

}  // namespace
}  // namespace transdeno
