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
#include <memory>
#include <string>
#include <vector>

#include "transdeno/groupfc.hpp"
#include "transdeno/random.hpp"
#include "transdeno/shrinkage.hpp"
#include "transdeno/spectral.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno {

/// Axis the attention runs over. `spatial` pools channels and attends over
/// the HW frequency positions; `channel` is the space-channel transposed
/// variant that pools over HW and attends over C.
enum class AttentionAxis { spatial, channel };

inline const char* to_string(AttentionAxis a) { return a == AttentionAxis::spatial ? "spatial" : "channel"; }

inline AttentionAxis parse_axis(const std::string& s) {
  if (s == "spatial") return AttentionAxis::spatial;
  if (s == "channel") return AttentionAxis::channel;
  throw DomainError("unknown attention axis '" + s + "' (expected spatial|channel)");
}

struct TransDenoConfig {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t reduction = 4;
  DeGroFcConfig degrofc{};
  AttentionAxis axis = AttentionAxis::spatial;

  Shape3 shape() const noexcept { return {channels, height, width}; }
  std::size_t descriptor_len() const noexcept {
    return axis == AttentionAxis::spatial ? height * width : channels;
  }
  std::size_t hidden_len() const noexcept { return descriptor_len() / reduction; }

  /// Throws ShapeError unless every divisibility constraint holds.
  void validate() const {
    if (channels == 0 || height == 0 || width == 0) throw ShapeError("map dimensions must be positive");
    if (reduction == 0) throw ShapeError("reduction ratio must be positive");
    const std::size_t n = descriptor_len();
    if (n % reduction != 0) {
      throw ShapeError("descriptor length " + std::to_string(n) + " is not divisible by reduction ratio " +
                       std::to_string(reduction));
    }
    for (auto g : degrofc.group_counts) {
      if (g == 0 || n % g != 0 || (n / reduction) % g != 0) {
        throw ShapeError("descriptor length " + std::to_string(n) + " and hidden length " +
                         std::to_string(n / reduction) + " must both be divisible by group count " +
                         std::to_string(g));
      }
    }
  }

  friend bool operator==(const TransDenoConfig& a, const TransDenoConfig& b) {
    return a.channels == b.channels && a.height == b.height && a.width == b.width &&
           a.reduction == b.reduction && a.degrofc.group_counts == b.degrofc.group_counts &&
           a.degrofc.convention == b.degrofc.convention && a.degrofc.offset_mode == b.degrofc.offset_mode &&
           a.axis == b.axis;
  }
};

/// Parameters of the full operator: two cascaded DeGroFC stages, each
/// deriving its coefficients from its own input.
template <std::floating_point T>
class TransDenoParams {
 public:
  explicit TransDenoParams(TransDenoConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t n = config_.descriptor_len(), h = config_.hidden_len();
    stage1 = DeGroFc<T>(n, h, n, config_.degrofc);
    stage2 = DeGroFc<T>(h, n, h, config_.degrofc);
    dct_ = std::make_shared<const Dct2<T>>(config_.height, config_.width);
  }

  static TransDenoParams random(TransDenoConfig config, std::uint64_t seed) {
    TransDenoParams p(std::move(config));
    CounterRng rng(seed, /*stream=*/0x1417);
    p.stage1.randomize(rng);
    p.stage2.randomize(rng);
    return p;
  }

  const TransDenoConfig& config() const noexcept { return config_; }
  const Dct2<T>& dct() const noexcept { return *dct_; }

  TransDenoParams zeros_like() const { return TransDenoParams(config_); }

  template <typename Fn>
  void visit(Fn&& fn) {
    DeGroFc<T>::visit(stage1, "stage1", fn);
    DeGroFc<T>::visit(stage2, "stage2", fn);
  }
  template <typename Fn>
  void visit(Fn&& fn) const {
    DeGroFc<T>::visit(stage1, "stage1", fn);
    DeGroFc<T>::visit(stage2, "stage2", fn);
  }

  /// Zero weights everywhere and every stage-2 branch bias set to `b`, so
  /// the attention is sigmoid(b) at every position regardless of input.
  void force_gate_bias(T b) {
    visit([&](const std::string& path, std::span<T> v, const auto&) {
      const bool stage2_bias = path.starts_with("stage2.branch") && path.ends_with(".bias");
      std::fill(v.begin(), v.end(), stage2_bias ? b : T(0));
    });
  }

  friend bool operator==(const TransDenoParams& a, const TransDenoParams& b) {
    return a.config_ == b.config_ && a.stage1 == b.stage1 && a.stage2 == b.stage2;
  }

  DeGroFc<T> stage1;
  DeGroFc<T> stage2;

 private:
  TransDenoConfig config_;
  std::shared_ptr<const Dct2<T>> dct_;
};

template <std::floating_point T>
T sigmoid(T x) noexcept {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

/// Mean over channels plus max over channels at every frequency position,
/// row-major over (i, j). `argmax` (optional) receives the first maximal
/// channel per position.
template <std::floating_point T>
std::vector<T> pooled_spectrum(const SpectralMap<T>& m, std::vector<std::size_t>* argmax = nullptr) {
  const std::size_t hw = m.shape().plane(), C = m.channels();
  std::vector<T> s(hw);
  if (argmax) argmax->assign(hw, 0);
  for (std::size_t p = 0; p < hw; ++p) {
    T sum = 0;
    T best = m.channel(0)[p];
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const T v = m.channel(c)[p];
      sum += v;
      if (v > best) {
        best = v;
        best_c = c;
      }
    }
    s[p] = sum / static_cast<T>(C) + best;
    if (argmax) (*argmax)[p] = best_c;
  }
  return s;
}

/// Transposed descriptor: mean plus max over all HW coefficients of each
/// channel.
template <std::floating_point T>
std::vector<T> pooled_channels(const SpectralMap<T>& m, std::vector<std::size_t>* argmax = nullptr) {
  const std::size_t hw = m.shape().plane(), C = m.channels();
  std::vector<T> s(C);
  if (argmax) argmax->assign(C, 0);
  for (std::size_t c = 0; c < C; ++c) {
    const auto plane = m.channel(c);
    T sum = 0;
    T best = plane[0];
    std::size_t best_p = 0;
    for (std::size_t p = 0; p < hw; ++p) {
      sum += plane[p];
      if (plane[p] > best) {
        best = plane[p];
        best_p = p;
      }
    }
    s[c] = sum / static_cast<T>(hw) + best;
    if (argmax) (*argmax)[c] = best_p;
  }
  return s;
}

/// Every intermediate of one forward evaluation.
template <std::floating_point T>
struct TransDenoTrace {
  SpectralMap<T> spectrum;
  std::vector<T> descriptor;
  std::vector<std::size_t> argmax;
  DeGroFcTrace<T> stage1;
  std::vector<T> hidden;  // relu(stage1 output)
  DeGroFcTrace<T> stage2;
  std::vector<T> attention;

  std::vector<long> signature(std::size_t k) const {
    std::vector<long> sig(argmax.begin(), argmax.end());
    stage1.append_signature(sig, k);
    for (T h : stage1.output) sig.push_back(h > T(0));
    stage2.append_signature(sig, k);
    return sig;
  }
};

template <std::floating_point T>
struct AttentionTrace {
  DeGroFcTrace<T> stage1;
  std::vector<T> hidden;
  DeGroFcTrace<T> stage2;
  std::vector<T> attention;
};

template <std::floating_point T>
AttentionTrace<T> attention_trace(std::span<const T> s, const TransDenoParams<T>& p) {
  require_length(s.size(), p.config().descriptor_len(), "attention_map descriptor");
  AttentionTrace<T> t;
  t.stage1 = p.stage1.trace(s, s);
  t.hidden.resize(t.stage1.output.size());
  for (std::size_t i = 0; i < t.hidden.size(); ++i) t.hidden[i] = std::max(T(0), t.stage1.output[i]);
  t.stage2 = p.stage2.trace(t.hidden, t.hidden);
  t.attention.resize(t.stage2.output.size());
  for (std::size_t i = 0; i < t.attention.size(); ++i) t.attention[i] = sigmoid(t.stage2.output[i]);
  return t;
}

/// sigmoid(stage2(relu(stage1(s)))).
template <std::floating_point T>
GateMap<T> attention_map(std::span<const T> s, const TransDenoParams<T>& p) {
  return GateMap<T>(attention_trace(s, p).attention);
}

template <std::floating_point T>
TransDenoTrace<T> transdeno_trace(const FeatureMap<T>& M, const TransDenoParams<T>& p) {
  const auto& cfg = p.config();
  if (M.shape() != cfg.shape()) {
    throw ShapeError("feature map is " + to_string(M.shape()) + " but parameters are bound to " +
                     to_string(cfg.shape()));
  }
  TransDenoTrace<T> t;
  t.spectrum = p.dct().forward(M);
  t.descriptor = cfg.axis == AttentionAxis::spatial ? pooled_spectrum(t.spectrum, &t.argmax)
                                                    : pooled_channels(t.spectrum, &t.argmax);
  auto at = attention_trace<T>(t.descriptor, p);
  t.stage1 = std::move(at.stage1);
  t.hidden = std::move(at.hidden);
  t.stage2 = std::move(at.stage2);
  t.attention = std::move(at.attention);
  return t;
}

namespace detail {

/// Attention broadcast onto the flattened HW x C spectrum.
template <std::floating_point T>
GateMap<T> broadcast_gate(const std::vector<T>& a, const FlattenedSpectrum<T>& f, AttentionAxis axis) {
  std::vector<T> g(f.rows() * f.cols());
  for (std::size_t p = 0; p < f.rows(); ++p) {
    for (std::size_t c = 0; c < f.cols(); ++c) {
      g[p * f.cols() + c] = axis == AttentionAxis::spatial ? a[p] : a[c];
    }
  }
  return GateMap<T>(std::move(g));
}

template <std::floating_point T>
FeatureMap<T> finish(const std::vector<T>& shrunk, FlattenedSpectrum<T> f, const TransDenoParams<T>& p) {
  std::copy(shrunk.begin(), shrunk.end(), f.values().begin());
  return p.dct().inverse(unflatten(f, p.config().height, p.config().width));
}

}  // namespace detail

/// DCT, pooled descriptor, two-stage attention, dynamic soft threshold
/// (1 - a) * |m| on the flattened spectrum, inverse DCT.
template <std::floating_point T>
FeatureMap<T> transdeno_forward(const FeatureMap<T>& M, const TransDenoParams<T>& p) {
  const auto t = transdeno_trace(M, p);
  auto f = flatten(t.spectrum);
  const auto gate = detail::broadcast_gate(t.attention, f, p.config().axis);
  const auto theta = gate_to_threshold<T>(gate, f.values());
  const auto shrunk = soft_map<T>(f.values(), theta);
  return detail::finish(shrunk, std::move(f), p);
}

/// Same operator computed as the gated product a * m with no explicit
/// threshold.
template <std::floating_point T>
FeatureMap<T> transdeno_forward_gated(const FeatureMap<T>& M, const TransDenoParams<T>& p) {
  const auto t = transdeno_trace(M, p);
  auto f = flatten(t.spectrum);
  const auto gate = detail::broadcast_gate(t.attention, f, p.config().axis);
  const auto gated = gate_map<T>(gate, f.values());
  return detail::finish(gated, std::move(f), p);
}

}  // namespace transdeno
