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

#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

namespace transdeno {

struct BenchStats {
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
  std::size_t calls = 0;
};

/// Times `iters` invocations of `fn` individually.
template <typename Fn>
BenchStats time_calls(Fn&& fn, std::size_t iters) {
  std::vector<double> samples;
  samples.reserve(iters);
  BenchStats s;
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ++s.calls;
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  if (samples.empty()) return s;
  for (double x : samples) s.mean_seconds += x;
  s.mean_seconds /= static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double var = 0.0;
    for (double x : samples) var += (x - s.mean_seconds) * (x - s.mean_seconds);
    s.stddev_seconds = std::sqrt(var / static_cast<double>(samples.size() - 1));
  }
  return s;
}

}  // namespace transdeno
