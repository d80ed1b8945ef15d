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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "transdeno/autograd.hpp"
#include "transdeno/bench.hpp"
#include "transdeno/io/checkpoint.hpp"
#include "transdeno/io/key_value.hpp"
#include "transdeno/io/tensor_file.hpp"
#include "transdeno/metrics.hpp"
#include "transdeno/specklesim.hpp"
#include "transdeno/transdeno.hpp"

// Implementations of the command-line subcommands. Each returns the process
// exit code (0 success, 2 usage/validation, 3 I/O or format, 4 numerical)
// and writes human-readable output to the given streams.
namespace transdeno::app {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

inline constexpr const char* kManifestName = "manifest.txt";

/// Runs `body`, translating library exceptions into exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
}

struct DatasetSpec {
  SceneSpec scene;
  std::size_t count = 1;
};

inline DatasetSpec parse_dataset_spec(const io::KeyValueFile& kv) {
  kv.require_known({"H", "W", "C", "n_targets", "target_size", "amplitude", "background", "looks", "seed", "count"});
  kv.require({"H", "W", "C", "n_targets", "target_size", "amplitude", "background", "looks", "seed", "count"});
  DatasetSpec d;
  d.scene.height = kv.get_positive("H");
  d.scene.width = kv.get_positive("W");
  d.scene.channels = kv.get_positive("C");
  d.scene.n_targets = kv.get_u64("n_targets");
  d.scene.target_size = kv.get_positive("target_size");
  d.scene.target_amplitude = kv.get_double("amplitude");
  d.scene.background_level = kv.get_double("background");
  d.scene.looks = kv.get_positive("looks");
  d.scene.seed = kv.get_u64("seed");
  d.count = kv.get_positive("count");
  if (d.scene.background_level < 0) kv.fail(kv.line_of("background"), "'background' must be nonnegative");
  if (d.scene.n_targets > 0 && (d.scene.target_size > d.scene.height || d.scene.target_size > d.scene.width)) {
    kv.fail(kv.line_of("target_size"), "'target_size' does not fit within H x W");
  }
  return d;
}

inline std::string scene_name(const char* kind, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.tensor", kind, i);
  return buf;
}

/// Writes clean/noisy pairs and a manifest (one header line, then the
/// clean and noisy file of each scene in order).
inline void write_dataset(const DatasetSpec& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  const auto& s = d.scene;
  manifest << "# transdeno dataset count=" << d.count << " shape=" << s.channels << "x" << s.height << "x"
           << s.width << " looks=" << s.looks << " seed=" << s.seed << "\n";
  for (std::size_t i = 0; i < d.count; ++i) {
    const auto pair = make_scene<float>(s, i);
    io::write_tensor_file(dir / scene_name("clean", i), io::to_tensor_data(pair.clean));
    io::write_tensor_file(dir / scene_name("noisy", i), io::to_tensor_data(pair.noisy));
    manifest << scene_name("clean", i) << "\n" << scene_name("noisy", i) << "\n";
  }
  io::write_file_atomic(dir / kManifestName, manifest.str());
}

template <std::floating_point T>
std::vector<TrainingPair<T>> read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw FormatError("cannot open " + (dir / kManifestName).string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty() || lines.size() % 2 != 0) {
    throw FormatError((dir / kManifestName).string() + ": expected clean/noisy file pairs");
  }
  std::vector<TrainingPair<T>> out;
  for (std::size_t i = 0; i < lines.size(); i += 2) {
    auto clean = io::to_feature_map<T>(io::read_tensor_file(dir / lines[i]));
    auto noisy = io::to_feature_map<T>(io::read_tensor_file(dir / lines[i + 1]));
    if (clean.shape() != noisy.shape()) throw FormatError("scene " + lines[i] + " has mismatched pair shapes");
    out.push_back({std::move(noisy), std::move(clean)});
  }
  return out;
}

inline int gen_data(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir,
                    std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto d = parse_dataset_spec(io::KeyValueFile::load(spec_file));
    d.scene.validate();
    write_dataset(d, out_dir);
    out << "wrote " << d.count << " scene pairs to " << out_dir.string() << "\n";
    return int{kOk};
  });
}

struct TrainFileConfig {
  TrainConfig train;
  std::size_t reduction = 4;
  DeGroFcConfig degrofc;
  AttentionAxis axis = AttentionAxis::spatial;
};

inline TrainFileConfig parse_train_config(const io::KeyValueFile& kv) {
  kv.require_known({"learning_rate", "steps", "batch", "seed", "loss", "reduction", "group_counts", "convention",
                    "offset_mode", "axis"});
  TrainFileConfig c;
  c.train.learning_rate = kv.get_double("learning_rate", c.train.learning_rate);
  if (c.train.learning_rate < 0) kv.fail(kv.line_of("learning_rate"), "'learning_rate' must be nonnegative");
  if (kv.has("steps")) c.train.steps = kv.get_positive("steps");
  if (kv.has("batch")) c.train.batch = kv.get_positive("batch");
  c.train.seed = kv.get_u64("seed", 0);
  if (kv.get_string("loss", "mse") != "mse") kv.fail(kv.line_of("loss"), "only loss=mse is supported");
  if (kv.has("reduction")) c.reduction = kv.get_positive("reduction");
  if (kv.has("group_counts")) c.degrofc.group_counts = kv.get_list("group_counts");
  try {
    c.degrofc.convention = parse_convention(kv.get_string("convention", "direct"));
  } catch (const DomainError& e) {
    kv.fail(kv.line_of("convention"), e.what());
  }
  try {
    c.degrofc.offset_mode = parse_offset_mode(kv.get_string("offset_mode", "softmax"));
  } catch (const DomainError& e) {
    kv.fail(kv.line_of("offset_mode"), e.what());
  }
  try {
    c.axis = parse_axis(kv.get_string("axis", "spatial"));
  } catch (const DomainError& e) {
    kv.fail(kv.line_of("axis"), e.what());
  }
  return c;
}

inline std::string loss_csv(const std::vector<double>& history) {
  std::ostringstream os;
  os << "step,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < history.size(); ++i) os << i << "," << history[i] << "\n";
  return os.str();
}

inline int train(const std::filesystem::path& data_dir, const std::filesystem::path& config_file,
                 const std::filesystem::path& out_ckpt, const std::filesystem::path& loss_csv_path,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = parse_train_config(io::KeyValueFile::load(config_file));
    const auto data = read_dataset<float>(data_dir);
    TransDenoConfig tc;
    tc.channels = data.front().noisy.channels();
    tc.height = data.front().noisy.height();
    tc.width = data.front().noisy.width();
    tc.reduction = cfg.reduction;
    tc.degrofc = cfg.degrofc;
    tc.axis = cfg.axis;
    auto params = TransDenoParams<float>::random(tc, cfg.train.seed);
    auto result = train_denoiser<float>(cfg.train, data, std::move(params));
    io::write_checkpoint(out_ckpt, result.params);
    io::write_file_atomic(loss_csv_path, loss_csv(result.loss_history));
    out << "trained " << cfg.train.steps << " steps: loss " << result.loss_history.front() << " -> "
        << result.loss_history.back() << "\n";
    return int{kOk};
  });
}

struct DenoiseOptions {
  std::filesystem::path input;
  std::filesystem::path params;
  std::filesystem::path output;
  bool report = false;
  std::optional<std::filesystem::path> clean;
  std::optional<double> peak;
};

inline int denoise(const DenoiseOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.report && !o.clean) throw DomainError("--report requires --clean <tensor>");
    const auto params = io::read_checkpoint<float>(o.params);
    const auto input = io::to_feature_map<float>(io::read_tensor_file(o.input));
    std::optional<FeatureMap<float>> clean;
    if (o.clean) clean = io::to_feature_map<float>(io::read_tensor_file(*o.clean));
    const auto result = transdeno_forward(input, params);
    io::write_tensor_file(o.output, io::to_tensor_data(result));
    if (o.report) out << to_json_line(evaluate(*clean, input, result, o.peak)) << "\n";
    return int{kOk};
  });
}

/// Seeded C=2, H=W=4, r=2, group counts {2, 4} instance in 64-bit.
inline TransDenoConfig gradcheck_config() {
  TransDenoConfig c;
  c.channels = 2;
  c.height = 4;
  c.width = 4;
  c.reduction = 2;
  c.degrofc.group_counts = {2, 4};
  return c;
}

inline GradCheckReport run_gradcheck(double eps, std::uint64_t seed, const TransDenoConfig& cfg = gradcheck_config()) {
  const auto params = TransDenoParams<double>::random(cfg, seed);
  CounterRng rng(seed, /*stream=*/0x6C);
  FeatureMap<double> M(cfg.shape()), target(cfg.shape());
  for (auto& v : M.values()) v = rng.normal();
  for (auto& v : target.values()) v = rng.normal();
  GradCheckOptions opt;
  opt.eps = eps;
  return finite_diff_check(params, M, target, opt);
}

inline constexpr double kGradCheckTolerance = 1e-4;

inline int gradcheck(double eps, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(eps > 0.0)) throw DomainError("--eps must be positive");
    const auto report = run_gradcheck(eps, seed);
    out << std::setprecision(3) << std::scientific;
    out << "gradcheck eps=" << eps << " seed=" << seed << "\n";
    std::size_t kinks = 0;
    for (const auto& e : report.entries) {
      out << "  " << std::left << std::setw(32) << e.path << " rel=" << e.max_rel_err << " abs=" << e.max_abs_err
          << " checked=" << e.checked << " kinks=" << e.kinks << "\n";
      kinks += e.kinks;
    }
    const bool pass = report.max_rel_err <= kGradCheckTolerance;
    out << "max_rel_err=" << report.max_rel_err << " worst=" << report.worst_param_path
        << " excluded_kinks=" << kinks << " " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? int{kOk} : int{kNumerical};
  });
}

inline Shape3 parse_size(const std::string& s) {
  Shape3 shape;
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  if (!(in >> shape.channels >> x1 >> shape.height >> x2 >> shape.width) || x1 != 'x' || x2 != 'x' ||
      in.peek() != std::char_traits<char>::eof() || shape.size() == 0) {
    throw DomainError("--size must look like CxHxW with positive dimensions, got '" + s + "'");
  }
  return shape;
}

struct BenchResult {
  BenchStats stats;
  std::size_t forward_calls = 0;
};

inline BenchResult run_bench(Shape3 shape, std::size_t iters, std::size_t reduction = 4,
                             std::vector<std::size_t> group_counts = {2, 4, 8, 16}) {
  TransDenoConfig cfg;
  cfg.channels = shape.channels;
  cfg.height = shape.height;
  cfg.width = shape.width;
  cfg.reduction = reduction;
  cfg.degrofc.group_counts = std::move(group_counts);
  const auto params = TransDenoParams<float>::random(cfg, 1);
  FeatureMap<float> M(shape);
  CounterRng rng(2);
  for (auto& v : M.values()) v = static_cast<float>(rng.normal());
  BenchResult r;
  volatile float sink = 0;
  r.stats = time_calls(
      [&] {
        ++r.forward_calls;
        sink = sink + transdeno_forward(M, params).vector()[0];
      },
      iters);
  return r;
}

inline int bench(const std::string& size, std::size_t iters, std::size_t reduction,
                 const std::vector<std::size_t>& group_counts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (iters == 0) throw DomainError("--iters must be positive");
    const auto r = run_bench(parse_size(size), iters, reduction, group_counts);
    out << "size=" << size << " iters=" << r.forward_calls << " mean_us=" << r.stats.mean_seconds * 1e6
        << " stddev_us=" << r.stats.stddev_seconds * 1e6 << "\n";
    return int{kOk};
  });
}

}  // namespace transdeno::app
