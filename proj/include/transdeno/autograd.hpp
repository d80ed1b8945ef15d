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
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "transdeno/random.hpp"
#include "transdeno/transdeno.hpp"

namespace transdeno {

/// Gradient arrays keyed by parameter path, e.g. "stage1.branch[8].weight[2]".
template <std::floating_point T>
using GradientBundle = std::map<std::string, std::vector<T>>;

template <std::floating_point T>
GradientBundle<T> to_bundle(const TransDenoParams<T>& p) {
  GradientBundle<T> out;
  p.visit([&](const std::string& path, std::span<const T> v, const auto&) { out[path].assign(v.begin(), v.end()); });
  return out;
}

template <std::floating_point T>
std::vector<std::pair<std::string, std::span<T>>> parameter_spans(TransDenoParams<T>& p) {
  std::vector<std::pair<std::string, std::span<T>>> out;
  p.visit([&](const std::string& path, std::span<T> v, const auto&) { out.emplace_back(path, v); });
  return out;
}

template <std::floating_point T>
struct Gradients {
  TransDenoParams<T> params;  // same layout as the forward parameters
  FeatureMap<T> input;

  GradientBundle<T> bundle() const { return to_bundle(params); }
};

/// Accumulates the gradients of the gated-path forward into `grad` and
/// writes dL/dM into `dM` (if non-null). Non-smooth points: ReLU has
/// subgradient 0 at 0, max-pooling routes to the first maximal entry, the
/// coefficient clamp is flat outside (0, k-1) and floor/ceil indices are
/// constants.
template <std::floating_point T>
void backward_into(const TransDenoTrace<T>& t, const TransDenoParams<T>& p, const FeatureMap<T>& dout,
                   TransDenoParams<T>& grad, FeatureMap<T>* dM) {
  const auto& cfg = p.config();
  if (dout.shape() != cfg.shape()) throw ShapeError("upstream gradient shape mismatch");
  require_finite(dout, "backward upstream gradient");
  const std::size_t C = cfg.channels, hw = cfg.height * cfg.width;
  const bool spatial = cfg.axis == AttentionAxis::spatial;
  const auto& dct = p.dct();

  // out = IDCT(a * m)  =>  dL/d(a*m) = DCT(dout).
  SpectralMap<T> dy(cfg.shape());
  for (std::size_t c = 0; c < C; ++c) dct.forward_plane(dout.channel(c), dy.channel(c));

  const auto& a = t.attention;
  std::vector<T> da(a.size(), T(0));
  SpectralMap<T> dm(cfg.shape());
  for (std::size_t c = 0; c < C; ++c) {
    const auto m = t.spectrum.channel(c);
    const auto g = dy.channel(c);
    auto out = dm.channel(c);
    for (std::size_t q = 0; q < hw; ++q) {
      const std::size_t idx = spatial ? q : c;
      da[idx] += g[q] * m[q];
      out[q] = g[q] * a[idx];
    }
  }

  std::vector<T> dh2(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) dh2[i] = da[i] * a[i] * (T(1) - a[i]);

  std::vector<T> dhidden(t.hidden.size(), T(0));
  p.stage2.backward(t.stage2, t.hidden, t.hidden, dh2, grad.stage2, dhidden, dhidden);
  for (std::size_t i = 0; i < dhidden.size(); ++i) {
    if (!(t.stage1.output[i] > T(0))) dhidden[i] = T(0);
  }

  std::vector<T> ds(t.descriptor.size(), T(0));
  p.stage1.backward(t.stage1, t.descriptor, t.descriptor, dhidden, grad.stage1, ds, ds);

  if (spatial) {
    for (std::size_t q = 0; q < hw; ++q) {
      for (std::size_t c = 0; c < C; ++c) dm.channel(c)[q] += ds[q] / static_cast<T>(C);
      dm.channel(t.argmax[q])[q] += ds[q];
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      auto plane = dm.channel(c);
      for (std::size_t q = 0; q < hw; ++q) plane[q] += ds[c] / static_cast<T>(hw);
      plane[t.argmax[c]] += ds[c];
    }
  }

  if (dM) {
    *dM = FeatureMap<T>(cfg.shape());
    for (std::size_t c = 0; c < C; ++c) dct.inverse_plane(dm.channel(c), dM->channel(c));
  }
}

template <std::floating_point T>
Gradients<T> backward(const FeatureMap<T>& M, const TransDenoParams<T>& p, const FeatureMap<T>& dout) {
  const auto t = transdeno_trace(M, p);
  Gradients<T> g{p.zeros_like(), FeatureMap<T>(M.shape())};
  backward_into(t, p, dout, g.params, &g.input);
  return g;
}

/// Forward output from a trace (gated path).
template <std::floating_point T>
FeatureMap<T> output_from_trace(const TransDenoTrace<T>& t, const TransDenoParams<T>& p) {
  const auto& cfg = p.config();
  const bool spatial = cfg.axis == AttentionAxis::spatial;
  SpectralMap<T> y(cfg.shape());
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    const auto m = t.spectrum.channel(c);
    auto out = y.channel(c);
    for (std::size_t q = 0; q < m.size(); ++q) out[q] = t.attention[spatial ? q : c] * m[q];
  }
  FeatureMap<T> x(cfg.shape());
  for (std::size_t c = 0; c < cfg.channels; ++c) p.dct().inverse_plane(y.channel(c), x.channel(c));
  return x;
}

// ---------------------------------------------------------------------------
// Finite-difference verification (64-bit only).

/// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that are zero
/// up to round-off from reporting huge relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Central differences of `loss` w.r.t. every entry of `params`, restoring
/// each entry afterwards.
template <typename Loss>
std::vector<double> central_differences(std::span<double> params, Loss&& loss, double eps) {
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss();
    params[i] = saved - eps;
    const double down = loss();
    params[i] = saved;
    out[i] = (up - down) / (2.0 * eps);
  }
  return out;
}

struct GradCheckEntry {
  std::string path;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // scalars excluded because a perturbation crossed a kink
};

struct GradCheckReport {
  double eps = 0.0;
  double max_rel_err = 0.0;
  std::string worst_param_path;
  std::vector<GradCheckEntry> entries;  // sorted by max_rel_err, descending
};

struct GradCheckOptions {
  double eps = 1e-5;
  double rel_floor = 1e-8;
  /// Applied to the analytic gradients before comparison (fault injection).
  std::function<void(TransDenoParams<double>&)> tamper;
};

/// Loss 0.5 * ||forward(M) - target||^2 differentiated analytically and by
/// central differences over every parameter scalar and every input entry.
/// A scalar whose +-eps perturbation changes any discrete decision of the
/// forward pass (ReLU mask, clamp side, branch pair, max-pool winner) is
/// kink-adjacent and excluded from the verdict.
inline GradCheckReport finite_diff_check(const TransDenoParams<double>& params, const FeatureMap<double>& M,
                                         const FeatureMap<double>& target, const GradCheckOptions& opt = {}) {
  const std::size_t k = params.config().degrofc.group_counts.size();
  auto output_and_sig = [&](const TransDenoParams<double>& p, const FeatureMap<double>& x) {
    const auto t = transdeno_trace(x, p);
    return std::pair{output_from_trace(t, p), t.signature(k)};
  };

  const auto base_trace = transdeno_trace(M, params);
  const auto base_out = output_from_trace(base_trace, params);
  FeatureMap<double> dout(M.shape());
  for (std::size_t i = 0; i < dout.size(); ++i) dout.values()[i] = base_out.values()[i] - target.values()[i];
  Gradients<double> g{params.zeros_like(), FeatureMap<double>(M.shape())};
  backward_into(base_trace, params, dout, g.params, &g.input);
  if (opt.tamper) opt.tamper(g.params);
  const auto base_sig = base_trace.signature(k);

  GradCheckReport report;
  report.eps = opt.eps;
  auto check_scalar = [&](GradCheckEntry& e, double& slot, double analytic, const TransDenoParams<double>& p,
                          const FeatureMap<double>& x) {
    const double saved = slot;
    slot = saved + opt.eps;
    const auto [up, sig_up] = output_and_sig(p, x);
    slot = saved - opt.eps;
    const auto [down, sig_down] = output_and_sig(p, x);
    slot = saved;
    if (sig_up != base_sig || sig_down != base_sig) {
      ++e.kinks;
      return;
    }
    // L(+) - L(-) for L = 0.5 |out - target|^2, factored per element so the
    // difference never cancels against the full loss magnitude.
    double diff = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double u = up.values()[i], d = down.values()[i];
      diff += (u - d) * (0.5 * (u + d) - target.values()[i]);
    }
    const double numeric = diff / (2.0 * opt.eps);
    ++e.checked;
    e.max_abs_err = std::max(e.max_abs_err, std::abs(analytic - numeric));
    e.max_rel_err = std::max(e.max_rel_err, relative_error(analytic, numeric, opt.rel_floor));
  };

  TransDenoParams<double> work = params;
  std::vector<std::span<const double>> analytic;
  g.params.visit([&](const std::string&, std::span<const double> v, const auto&) { analytic.push_back(v); });
  std::size_t tensor = 0;
  work.visit([&](const std::string& path, std::span<double> v, const auto&) {
    GradCheckEntry e{path};
    for (std::size_t i = 0; i < v.size(); ++i) check_scalar(e, v[i], analytic[tensor][i], work, M);
    report.entries.push_back(std::move(e));
    ++tensor;
  });

  FeatureMap<double> x = M;
  GradCheckEntry in{"input"};
  for (std::size_t i = 0; i < x.size(); ++i) check_scalar(in, x.values()[i], g.input.values()[i], params, x);
  report.entries.push_back(std::move(in));

  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const auto& a, const auto& b) { return a.max_rel_err > b.max_rel_err; });
  if (!report.entries.empty()) {
    report.max_rel_err = report.entries.front().max_rel_err;
    report.worst_param_path = report.entries.front().path;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Training.

enum class LossKind { mse };

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t steps = 100;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw DomainError("learning_rate must be a finite nonnegative number");
    }
    if (steps == 0) throw DomainError("steps must be at least 1");
    if (batch == 0) throw DomainError("batch must be at least 1");
  }
};

template <std::floating_point T>
struct TrainingPair {
  FeatureMap<T> noisy;
  FeatureMap<T> clean;
};

template <std::floating_point T>
struct TrainResult {
  TransDenoParams<T> params;
  std::vector<double> loss_history;  // entry s: batch loss before update s; last entry after all updates
};

template <std::floating_point T>
double mse_loss(const FeatureMap<T>& out, const FeatureMap<T>& clean) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(out.values()[i]) - static_cast<double>(clean.values()[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(out.size());
}

/// Sample order: epochs of seeded Fisher-Yates permutations, consumed
/// `batch` at a time. Depends only on (seed, data size).
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed, /*stream=*/0xBA7C) { reshuffle(); }

  std::size_t next() {
    if (pos_ == order_.size()) reshuffle();
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  CounterRng rng_;
  std::size_t pos_ = 0;
};

/// Plain SGD on the mean-squared error between the gated forward of each
/// noisy map and its clean counterpart.
template <std::floating_point T>
TrainResult<T> train_denoiser(const TrainConfig& cfg, std::span<const TrainingPair<T>> data,
                              TransDenoParams<T> params) {
  cfg.validate();
  if (data.empty()) throw DomainError("training data is empty");
  for (const auto& d : data) {
    if (d.noisy.shape() != params.config().shape() || d.clean.shape() != params.config().shape()) {
      throw ShapeError("training pair shape does not match the parameter binding " +
                       to_string(params.config().shape()));
    }
  }
  BatchSchedule schedule(data.size(), cfg.seed);
  std::vector<double> history;
  history.reserve(cfg.steps + 1);
  auto param_spans = parameter_spans(params);

  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    const bool update = step < cfg.steps;
    auto grad = params.zeros_like();
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const auto& pair = data[schedule.next()];
      std::optional<TransDenoTrace<T>> traced;
      try {
        traced.emplace(transdeno_trace(pair.noisy, params));
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at step " + std::to_string(step) + ": " + e.what(),
                             static_cast<long>(step));
      }
      const auto& t = *traced;
      const auto out = output_from_trace(t, params);
      loss += mse_loss(out, pair.clean);
      if (!update) continue;
      FeatureMap<T> dout(out.shape());
      const T scale = T(2) / static_cast<T>(out.size() * cfg.batch);
      for (std::size_t i = 0; i < out.size(); ++i) {
        dout.values()[i] = scale * (out.values()[i] - pair.clean.values()[i]);
      }
      backward_into(t, params, dout, grad, static_cast<FeatureMap<T>*>(nullptr));
    }
    loss /= static_cast<double>(cfg.batch);
    if (!std::isfinite(loss)) {
      throw NumericalError("training diverged at step " + std::to_string(step) + ": loss is " +
                               std::to_string(loss),
                           static_cast<long>(step));
    }
    history.push_back(loss);
    if (!update) break;
    auto grad_spans = parameter_spans(grad);
    const T lr = static_cast<T>(cfg.learning_rate);
    for (std::size_t i = 0; i < param_spans.size(); ++i) {
      auto w = param_spans[i].second;
      const auto gw = grad_spans[i].second;
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * gw[j];
    }
  }
  return {std::move(params), std::move(history)};
}

}  // namespace transdeno
