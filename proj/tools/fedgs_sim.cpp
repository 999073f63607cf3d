// Copyright 2026 The fedgs-sim Authors. All Rights Reserved.
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

// fedgs_sim: command-line front end.
//
//   fedgs_sim run --config <path> [--out <dir>] [--threads <n>]
//   fedgs_sim curve --l <real> --tau <real> --out <path> [--min a] [--max b] [--per-decade n] [--point a]...
//   fedgs_sim gen-data --config <path> --out <dir> [--seed s]
//   fedgs_sim print-defaults
//
// Exit codes: 0 success, 1 configuration/validation error, 2 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedgs/fedgs.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int cmd_run(const std::string& config_path, const std::string& out_override, std::size_t threads) {
  const fedgs::ExperimentConfig cfg = fedgs::parse_config(config_path);
  const std::string out_dir = out_override.empty() ? cfg.output_dir : out_override;
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = fedgs::run_experiment_full(cfg, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& run : runs)
    for (const auto& w : run.warnings) std::cerr << "warning (seed " << run.seed << "): " << w << '\n';
  std::cout << fedgs::write_experiment_outputs(cfg, runs, out_dir);
  std::cout << "wrote " << out_dir << "/results.csv (" << runs.size() << " runs, " << secs << " s)\n";
  return 0;
}

int cmd_curve(double l, double tau, const std::string& out_path, double lo, double hi, std::size_t per_decade,
              std::vector<double> extra) {
  std::vector<double> grid = fedgs::geometric_grid(lo, hi, per_decade);
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const auto pts = fedgs::emit_difficulty_curve(l, tau, grid);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw fedgs::IoError("cannot write " + out_path);
  fedgs::write_curve_csv(out, pts);
  std::cout << "wrote " << pts.size() << " points to " << out_path << '\n';
  return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const fedgs::ExperimentConfig cfg = fedgs::parse_config(config_path);
  const std::uint64_t s = seed.value_or(cfg.seeds.front());
  const fedgs::Federation fed = fedgs::build_federation(cfg.clients, s);
  for (const auto& w : fed.warnings) std::cerr << "warning: " << w << '\n';
  fedgs::dump_federation(fed, cfg.clients, out_dir);
  std::cout << "wrote " << fed.clients.size() << " training clients and a test centre to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated gradient-scaling simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t threads = 1;
  auto* run = app.add_subcommand("run", "Run a FedGS / FedAvg experiment");
  run->add_option("--config", config_path, "Experiment configuration file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--threads", threads, "Worker threads for (seed, strategy) runs")->check(CLI::PositiveNumber);

  double l = 100.0;
  double tau = 150.0;
  std::string curve_out;
  double lo = 1.0;
  double hi = 1e6;
  std::size_t per_decade = 20;
  std::vector<double> extra;
  auto* curve = app.add_subcommand("curve", "Emit the difficulty curve as CSV");
  curve->add_option("--l", l, "Logarithm base")->required();
  curve->add_option("--tau", tau, "Small-lesion threshold")->required();
  curve->add_option("--out", curve_out, "Output CSV path")->required();
  curve->add_option("--min", lo, "Smallest inverse area on the grid");
  curve->add_option("--max", hi, "Largest inverse area on the grid");
  curve->add_option("--per-decade", per_decade, "Grid points per decade");
  curve->add_option("--point", extra, "Extra inverse-area points");

  std::string gen_config;
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen-data", "Dump the synthetic federation as PGM files");
  gen->add_option("--config", gen_config, "Experiment configuration file")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Experiment seed (default: first configured seed)");

  auto* defaults = app.add_subcommand("print-defaults", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, threads);
    if (*curve) return cmd_curve(l, tau, curve_out, lo, hi, per_decade, extra);
    if (*gen) return cmd_gen_data(gen_config, gen_out, gen_seed);
    if (*defaults) {
      std::cout << fedgs::to_config_text(fedgs::ExperimentConfig{});
      return 0;
    }
  } catch (const fedgs::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fedgs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
