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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "transdeno/error.hpp"
#include "transdeno/random.hpp"
#include "transdeno/tensor.hpp"

namespace transdeno {

/// Fully-connected layer whose weight matrix is block-diagonal over
/// `groups` contiguous chunks of the input. Block j maps
/// x[j*bi, (j+1)*bi) to y[j*bo, (j+1)*bo) where bi = in/groups and
/// bo = out/groups; each block is stored row-major as [bo, bi].
template <std::floating_point T>
class GroupFc {
 public:
  GroupFc() = default;
  GroupFc(std::size_t groups, std::size_t in_len, std::size_t out_len)
      : groups_(groups), in_len_(in_len), out_len_(out_len) {
    if (groups == 0 || in_len == 0 || out_len == 0) {
      throw ShapeError("group FC dimensions must be positive");
    }
    if (in_len % groups != 0 || out_len % groups != 0) {
      throw ShapeError("group FC with " + std::to_string(groups) + " groups cannot split " +
                       std::to_string(in_len) + " -> " + std::to_string(out_len));
    }
    weight_.assign(groups * block_out() * block_in(), T(0));
    bias_.assign(out_len, T(0));
  }

  std::size_t groups() const noexcept { return groups_; }
  std::size_t in_len() const noexcept { return in_len_; }
  std::size_t out_len() const noexcept { return out_len_; }
  std::size_t block_in() const noexcept { return in_len_ / groups_; }
  std::size_t block_out() const noexcept { return out_len_ / groups_; }

  std::span<T> block(std::size_t j) {
    return {weight_.data() + j * block_out() * block_in(), block_out() * block_in()};
  }
  std::span<const T> block(std::size_t j) const {
    return {weight_.data() + j * block_out() * block_in(), block_out() * block_in()};
  }
  std::span<T> bias() noexcept { return bias_; }
  std::span<const T> bias() const noexcept { return bias_; }

  std::vector<T> forward(std::span<const T> x) const {
    require_length(x.size(), in_len_, "group_fc_forward input");
    std::vector<T> y(bias_);
    const std::size_t bi = block_in(), bo = block_out();
    for (std::size_t j = 0; j < groups_; ++j) {
      const T* w = weight_.data() + j * bo * bi;
      const T* xj = x.data() + j * bi;
      T* yj = y.data() + j * bo;
      for (std::size_t o = 0; o < bo; ++o) {
        T acc = 0;
        for (std::size_t i = 0; i < bi; ++i) acc += w[o * bi + i] * xj[i];
        yj[o] += acc;
      }
    }
    return y;
  }

  /// Accumulates dL/dW, dL/db into `grad` and dL/dx into `dx`.
  void backward(std::span<const T> x, std::span<const T> dy, GroupFc& grad, std::span<T> dx) const {
    const std::size_t bi = block_in(), bo = block_out();
    for (std::size_t j = 0; j < groups_; ++j) {
      const T* w = weight_.data() + j * bo * bi;
      T* gw = grad.weight_.data() + j * bo * bi;
      const T* xj = x.data() + j * bi;
      const T* dyj = dy.data() + j * bo;
      T* dxj = dx.data() + j * bi;
      for (std::size_t o = 0; o < bo; ++o) {
        const T g = dyj[o];
        grad.bias_[j * bo + o] += g;
        if (g == T(0)) continue;
        for (std::size_t i = 0; i < bi; ++i) {
          gw[o * bi + i] += g * xj[i];
          dxj[i] += g * w[o * bi + i];
        }
      }
    }
  }

  /// Weights and biases uniform in +-1/sqrt(fan_in), fan_in = block_in().
  void randomize(CounterRng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(block_in()));
    for (auto& w : weight_) w = static_cast<T>(rng.uniform(-bound, bound));
    for (auto& b : bias_) b = static_cast<T>(rng.uniform(-bound, bound));
  }

  std::vector<T>& weight_storage() noexcept { return weight_; }
  const std::vector<T>& weight_storage() const noexcept { return weight_; }

  friend bool operator==(const GroupFc&, const GroupFc&) = default;

 private:
  std::size_t groups_ = 0;
  std::size_t in_len_ = 0;
  std::size_t out_len_ = 0;
  std::vector<T> weight_;
  std::vector<T> bias_;
};

/// Which branch each offset weights. `direct` pairs the floor branch with
/// the offset built from K - floor(K); `standard` is ordinary linear
/// interpolation (floor branch weighted by the ceil(K) - K offset).
enum class BlendConvention { direct, standard };

/// How offsets become blend weights. `softmax` pushes the pair
/// (K - floor K, ceil K - K) through a 2-way softmax (default). `linear` is
/// plain bilinear interpolation between indices floor K and floor K + 1
/// with weights (K - floor K, floor K + 1 - K).
enum class OffsetMode { softmax, linear };

inline const char* to_string(BlendConvention c) { return c == BlendConvention::direct ? "direct" : "standard"; }
inline const char* to_string(OffsetMode m) { return m == OffsetMode::softmax ? "softmax" : "linear"; }

inline BlendConvention parse_convention(const std::string& s) {
  if (s == "direct") return BlendConvention::direct;
  if (s == "standard") return BlendConvention::standard;
  throw DomainError("unknown bilinear convention '" + s + "' (expected direct|standard)");
}

inline OffsetMode parse_offset_mode(const std::string& s) {
  if (s == "softmax") return OffsetMode::softmax;
  if (s == "linear") return OffsetMode::linear;
  throw DomainError("unknown offset mode '" + s + "' (expected softmax|linear)");
}

template <std::floating_point T>
struct OffsetPair {
  T p;  // weight derived from K - floor(K)
  T q;  // weight derived from ceil(K) - K
};

/// Offsets for one coefficient K in [0, k-1]. In softmax mode the raw pair
/// (K - floor K, ceil K - K) is pushed through a 2-way softmax, so the pair
/// always sums to one and an integer K yields (1/2, 1/2).
template <std::floating_point T>
OffsetPair<T> offsets(T K, std::size_t k, OffsetMode mode = OffsetMode::softmax) {
  if (!(K >= T(0) && K <= static_cast<T>(k - 1))) {
    throw DomainError("offsets: coefficient " + std::to_string(K) + " outside [0, " +
                      std::to_string(k - 1) + "]");
  }
  const T p = K - std::floor(K);
  if (mode == OffsetMode::linear) return {p, T(1) - p};
  const T q = std::ceil(K) - K;
  return {T(1) / (T(1) + std::exp(q - p)), T(1) / (T(1) + std::exp(p - q))};
}

struct DeGroFcConfig {
  std::vector<std::size_t> group_counts{2, 4, 8, 16};
  BlendConvention convention = BlendConvention::direct;
  OffsetMode offset_mode = OffsetMode::softmax;
};

/// Forward intermediates of one DeGroFC evaluation, kept for the backward
/// pass and for kink detection.
template <std::floating_point T>
struct DeGroFcTrace {
  std::vector<T> raw;          // affine coefficient outputs, length k
  std::vector<T> coeff;        // clamped K
  std::vector<std::size_t> lo; // floor(K) as a branch index
  std::vector<std::size_t> hi; // ceil(K), or floor(K) + 1 in linear mode
  std::vector<T> w_lo;         // blend weight applied to branch lo
  std::vector<T> w_hi;
  std::vector<std::optional<std::vector<T>>> branch_out;
  std::vector<T> output;

  /// Discrete decisions taken by this evaluation (clamp side, branch pair).
  void append_signature(std::vector<long>& sig, std::size_t k) const {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const T hi_bound = static_cast<T>(k - 1);
      sig.push_back(raw[i] <= T(0) ? -1 : (raw[i] >= hi_bound ? 1 : 0));
      sig.push_back(static_cast<long>(lo[i]));
      sig.push_back(static_cast<long>(hi[i]));
    }
  }
};

/// Deformable group FC: a coefficient FC produces k fractional indices
/// K_i into the ordered list of candidate group counts; each K_i blends the
/// branches at floor(K_i) and ceil(K_i) and the k blends are averaged.
template <std::floating_point T>
class DeGroFc {
 public:
  DeGroFc() = default;
  DeGroFc(std::size_t in_len, std::size_t out_len, std::size_t coeff_in, DeGroFcConfig config)
      : in_len_(in_len), out_len_(out_len), coeff_in_(coeff_in), config_(std::move(config)) {
    const auto& counts = config_.group_counts;
    if (counts.empty()) throw ShapeError("DeGroFC needs at least one candidate group count");
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) throw ShapeError("candidate group counts must be positive");
      if (i > 0 && counts[i] <= counts[i - 1]) {
        throw ShapeError("candidate group counts must be strictly increasing");
      }
      if (in_len % counts[i] != 0 || out_len % counts[i] != 0) {
        throw ShapeError("DeGroFC " + std::to_string(in_len) + " -> " + std::to_string(out_len) +
                         " is not divisible by candidate group count " + std::to_string(counts[i]));
      }
    }
    if (coeff_in == 0) throw ShapeError("coefficient FC input length must be positive");
    coeff_weight_.assign(k() * coeff_in, T(0));
    coeff_bias_.assign(k(), T(0));
    for (auto n : counts) branches_.emplace_back(n, in_len, out_len);
  }

  std::size_t k() const noexcept { return config_.group_counts.size(); }
  std::size_t in_len() const noexcept { return in_len_; }
  std::size_t out_len() const noexcept { return out_len_; }
  std::size_t coeff_in() const noexcept { return coeff_in_; }
  const DeGroFcConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& group_counts() const noexcept { return config_.group_counts; }

  std::span<T> coeff_weight() noexcept { return coeff_weight_; }
  std::span<const T> coeff_weight() const noexcept { return coeff_weight_; }
  std::span<T> coeff_bias() noexcept { return coeff_bias_; }
  std::span<const T> coeff_bias() const noexcept { return coeff_bias_; }
  GroupFc<T>& branch(std::size_t idx) { return branches_.at(idx); }
  const GroupFc<T>& branch(std::size_t idx) const { return branches_.at(idx); }

  /// Affine map of `s` clamped to [0, k-1].
  std::vector<T> coefficients(std::span<const T> s) const { return coefficients_raw(s).second; }

  std::vector<T> forward(std::span<const T> x, std::span<const T> s) const { return trace(x, s).output; }

  DeGroFcTrace<T> trace(std::span<const T> x, std::span<const T> s) const {
    require_length(x.size(), in_len_, "degrofc_forward input");
    DeGroFcTrace<T> t;
    std::tie(t.raw, t.coeff) = coefficients_raw(s);
    const std::size_t kk = k();
    t.lo.resize(kk);
    t.hi.resize(kk);
    t.w_lo.resize(kk);
    t.w_hi.resize(kk);
    t.branch_out.resize(kk);
    t.output.assign(out_len_, T(0));
    const T inv_k = T(1) / static_cast<T>(kk);
    for (std::size_t i = 0; i < kk; ++i) {
      const T K = t.coeff[i];
      t.lo[i] = static_cast<std::size_t>(std::floor(K));
      t.hi[i] = config_.offset_mode == OffsetMode::linear ? std::min(t.lo[i] + 1, kk - 1)
                                                          : static_cast<std::size_t>(std::ceil(K));
      const auto off = offsets(K, kk, config_.offset_mode);
      if (config_.convention == BlendConvention::direct) {
        t.w_lo[i] = off.p;
        t.w_hi[i] = off.q;
      } else {
        t.w_lo[i] = off.q;
        t.w_hi[i] = off.p;
      }
      for (auto [idx, w] : {std::pair{t.lo[i], t.w_lo[i]}, std::pair{t.hi[i], t.w_hi[i]}}) {
        if (!t.branch_out[idx]) t.branch_out[idx] = branches_[idx].forward(x);
        const auto& b = *t.branch_out[idx];
        const T scale = w * inv_k;
        for (std::size_t o = 0; o < out_len_; ++o) t.output[o] += scale * b[o];
      }
    }
    return t;
  }

  /// Accumulates parameter gradients into `grad` (same configuration), the
  /// gradient w.r.t. the branch input into `dx` and w.r.t. the coefficient
  /// input into `ds`. floor/ceil are constants of the backward pass; the
  /// clamp passes gradient only strictly inside (0, k-1).
  void backward(const DeGroFcTrace<T>& t, std::span<const T> x, std::span<const T> s,
                std::span<const T> dy, DeGroFc& grad, std::span<T> dx, std::span<T> ds) const {
    const std::size_t kk = k();
    const T inv_k = T(1) / static_cast<T>(kk);
    std::vector<T> branch_scale(kk, T(0));
    std::vector<T> draw(kk, T(0));
    for (std::size_t i = 0; i < kk; ++i) {
      branch_scale[t.lo[i]] += t.w_lo[i] * inv_k;
      branch_scale[t.hi[i]] += t.w_hi[i] * inv_k;
      const T d_wlo = inv_k * dot(dy, *t.branch_out[t.lo[i]]);
      const T d_whi = inv_k * dot(dy, *t.branch_out[t.hi[i]]);
      // Map the blend-weight gradients back to the offset pair (p, q).
      T dp, dq;
      if (config_.convention == BlendConvention::direct) {
        dp = d_wlo;
        dq = d_whi;
      } else {
        dp = d_whi;
        dq = d_wlo;
      }
      // p = K - floor, q = ceil - K (or floor + 1 - K), so dp/dK = 1, dq/dK = -1.
      T dK;
      if (config_.offset_mode == OffsetMode::linear) {
        dK = dp - dq;
      } else {
        const T sp = config_.convention == BlendConvention::direct ? t.w_lo[i] : t.w_hi[i];
        const T sq = T(1) - sp;
        // softmax pair (sp, sq) = sigma(p - q); d(p - q)/dK = 2.
        dK = (dp - dq) * sp * sq * T(2);
      }
      const T hi_bound = static_cast<T>(kk - 1);
      draw[i] = (t.raw[i] > T(0) && t.raw[i] < hi_bound) ? dK : T(0);
    }
    std::vector<T> dyb(out_len_);
    for (std::size_t idx = 0; idx < kk; ++idx) {
      if (!t.branch_out[idx]) continue;
      for (std::size_t o = 0; o < out_len_; ++o) dyb[o] = branch_scale[idx] * dy[o];
      branches_[idx].backward(x, dyb, grad.branches_[idx], dx);
    }
    for (std::size_t i = 0; i < kk; ++i) {
      grad.coeff_bias_[i] += draw[i];
      if (draw[i] == T(0)) continue;
      for (std::size_t j = 0; j < coeff_in_; ++j) {
        grad.coeff_weight_[i * coeff_in_ + j] += draw[i] * s[j];
        ds[j] += draw[i] * coeff_weight_[i * coeff_in_ + j];
      }
    }
  }

  /// Branch blocks uniform in +-1/sqrt(fan_in); coefficient FC weights in
  /// +-1/sqrt(coeff_in) with bias (k-1)/2 so initial K starts mid-range.
  void randomize(CounterRng& rng) {
    for (auto& b : branches_) b.randomize(rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(coeff_in_));
    for (auto& w : coeff_weight_) w = static_cast<T>(rng.uniform(-bound, bound));
    for (auto& b : coeff_bias_) b = static_cast<T>(static_cast<double>(k() - 1) / 2.0);
  }

  /// Same configuration, every parameter zero.
  DeGroFc zeros_like() const { return DeGroFc(in_len_, out_len_, coeff_in_, config_); }

  /// Visits every parameter array as fn(path, values, dims) with a stable
  /// path relative to `prefix`.
  template <typename Self, typename Fn>
  static void visit(Self& self, const std::string& prefix, Fn&& fn) {
    using Dims = std::vector<std::size_t>;
    fn(prefix + ".coeff.bias", std::span(self.coeff_bias_), Dims{self.k()});
    fn(prefix + ".coeff.weight", std::span(self.coeff_weight_), Dims{self.k(), self.coeff_in_});
    for (std::size_t b = 0; b < self.branches_.size(); ++b) {
      auto& br = self.branches_[b];
      const std::string base = prefix + ".branch[" + std::to_string(self.config_.group_counts[b]) + "]";
      fn(base + ".bias", br.bias(), Dims{br.out_len()});
      for (std::size_t j = 0; j < br.groups(); ++j) {
        fn(base + ".weight[" + std::to_string(j) + "]", br.block(j), Dims{br.block_out(), br.block_in()});
      }
    }
  }

  friend bool operator==(const DeGroFc& a, const DeGroFc& b) {
    return a.in_len_ == b.in_len_ && a.out_len_ == b.out_len_ && a.coeff_in_ == b.coeff_in_ &&
           a.config_.group_counts == b.config_.group_counts &&
           a.config_.convention == b.config_.convention && a.config_.offset_mode == b.config_.offset_mode &&
           a.coeff_weight_ == b.coeff_weight_ && a.coeff_bias_ == b.coeff_bias_ && a.branches_ == b.branches_;
  }

 private:
  static T dot(std::span<const T> a, const std::vector<T>& b) {
    T acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }

  std::pair<std::vector<T>, std::vector<T>> coefficients_raw(std::span<const T> s) const {
    require_length(s.size(), coeff_in_, "coefficients input");
    const std::size_t kk = k();
    std::vector<T> raw(kk), K(kk);
    const T hi_bound = static_cast<T>(kk - 1);
    for (std::size_t i = 0; i < kk; ++i) {
      T acc = coeff_bias_[i];
      for (std::size_t j = 0; j < coeff_in_; ++j) acc += coeff_weight_[i * coeff_in_ + j] * s[j];
      if (!std::isfinite(acc)) throw NumericalError("coefficient FC produced a non-finite value", -1);
      raw[i] = acc;
      K[i] = std::clamp(acc, T(0), hi_bound);
    }
    return {std::move(raw), std::move(K)};
  }

  std::size_t in_len_ = 0;
  std::size_t out_len_ = 0;
  std::size_t coeff_in_ = 0;
  DeGroFcConfig config_;
  std::vector<T> coeff_weight_;
  std::vector<T> coeff_bias_;
  std::vector<GroupFc<T>> branches_;
};

}  // namespace transdeno
