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

// transdeno: command-line front end for the TransDeno library.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "transdeno/app.hpp"

int main(int argc, char** argv) {
  using namespace transdeno;
  CLI::App cli{"Transform-domain dynamic soft-threshold denoising of feature maps"};
  cli.require_subcommand(1);

  std::string spec_file, out_dir;
  auto* gen = cli.add_subcommand("gen-data", "Generate synthetic clean/speckled scene pairs");
  gen->add_option("--spec", spec_file, "key=value scene spec")->required();
  gen->add_option("--out-dir", out_dir, "output directory")->required();

  app::DenoiseOptions dn;
  std::string clean_path;
  double peak = 0.0;
  auto* den = cli.add_subcommand("denoise", "Run the module on a feature-map tensor");
  den->add_option("--in", dn.input, "input tensor")->required();
  den->add_option("--params", dn.params, "parameter checkpoint")->required();
  den->add_option("--out", dn.output, "output tensor")->required();
  den->add_flag("--report", dn.report, "print an evaluation report as JSON (needs --clean)");
  auto* clean_opt = den->add_option("--clean", clean_path, "clean reference tensor");
  auto* peak_opt = den->add_option("--peak", peak, "PSNR peak (default: max of the clean map)");

  std::string data_dir, config_file, ckpt_out, loss_csv;
  auto* tr = cli.add_subcommand("train", "Train the module with SGD on a generated dataset");
  tr->add_option("--data-dir", data_dir, "directory written by gen-data")->required();
  tr->add_option("--config", config_file, "key=value training config")->required();
  tr->add_option("--out", ckpt_out, "output checkpoint")->required();
  tr->add_option("--loss-csv", loss_csv, "output loss history CSV")->required();

  double eps = 1e-5;
  std::uint64_t seed = 0;
  auto* gc = cli.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gc->add_option("--eps", eps, "finite-difference step");
  gc->add_option("--seed", seed, "instance seed");

  std::string size;
  std::size_t iters = 10, reduction = 4;
  std::vector<std::size_t> groups{2, 4, 8, 16};
  auto* be = cli.add_subcommand("bench", "Time forward passes");
  be->add_option("--size", size, "CxHxW")->required();
  be->add_option("--iters", iters, "number of timed forward calls")->required();
  be->add_option("--reduction", reduction, "reduction ratio");
  be->add_option("--groups", groups, "candidate group counts")->delimiter(',');

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kUsage;
  }

  if (*gen) return app::gen_data(spec_file, out_dir, std::cout, std::cerr);
  if (*den) {
    if (*clean_opt) dn.clean = clean_path;
    if (*peak_opt) dn.peak = peak;
    return app::denoise(dn, std::cout, std::cerr);
  }
  if (*tr) return app::train(data_dir, config_file, ckpt_out, loss_csv, std::cout, std::cerr);
  if (*gc) return app::gradcheck(eps, seed, std::cout, std::cerr);
  if (*be) return app::bench(size, iters, reduction, groups, std::cout, std::cerr);
  return app::kUsage;
}
