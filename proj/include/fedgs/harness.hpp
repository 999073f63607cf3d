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

/**
 * @file
 * @brief Multi-seed FedGS / FedAvg experiments, CSV output and difficulty curves.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fedgs/config.hpp"
#include "fedgs/difficulty.hpp"
#include "fedgs/fl.hpp"
#include "fedgs/metrics.hpp"
#include "fedgs/parallel.hpp"
#include "fedgs/segnet.hpp"
#include "fedgs/synth.hpp"

namespace fedgs {

inline constexpr const char* kCsvVersionLine = "# fedgs-sim v1";

struct ResultRow {
  std::uint64_t seed = 0;
  StrategyKind strategy = StrategyKind::FedGS;
  std::size_t round = 0;  ///< 1-based
  double dice = 0.0;
  std::optional<double> dice_s;
  std::optional<double> dice_l;
  double mean_eta = 1.0;
  double max_eta = 1.0;
  std::size_t steps_total = 0;
  double wall_ms = 0.0;
};

struct RunOutput {
  std::uint64_t seed = 0;
  StrategyKind strategy = StrategyKind::FedGS;
  std::vector<ResultRow> rows;
  ParamVector final_params;
  std::vector<std::string> warnings;
};

/// Key used to seed model initialization; shared by all strategies of a seed.
inline std::uint64_t model_seed(std::uint64_t experiment_seed) { return splitmix64_mix(experiment_seed ^ 0x1D17); }

/// Trains one (seed, strategy) pair for cfg.rounds rounds, evaluating on the test centre after each.
inline RunOutput run_single(const ExperimentConfig& cfg, std::uint64_t seed, StrategyKind strategy,
                            std::size_t client_threads = 1) {
  RunOutput out{seed, strategy, {}, {}, {}};
  const Federation fed = build_federation(cfg.clients, seed);
  out.warnings = fed.warnings;

  TrainingConfig training = cfg.training;
  training.strategy.kind = strategy;
  std::vector<std::vector<double>> deltas;
  for (const auto& c : fed.clients) deltas.push_back(sample_deltas(c, training.strategy));

  ParamVector global = init_params(training.arch, model_seed(seed));
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    RoundOutcome round = run_round(global, fed.clients, training, seed, r, client_threads, {}, &deltas);
    global = std::move(round.global);
    const EvalReport ev = evaluate(training.arch, global, fed.test, training.strategy.difficulty);
    out.rows.push_back({seed, strategy, r + 1, ev.dice, ev.dice_s, ev.dice_l, round.stats.mean_eta, round.stats.max_eta,
                        round.stats.steps_total, round.stats.wall_ms});
  }
  out.final_params = std::move(global);
  return out;
}

inline bool row_order(const ResultRow& a, const ResultRow& b) {
  return std::make_tuple(a.seed, std::string_view(to_string(a.strategy)), a.round) <
         std::make_tuple(b.seed, std::string_view(to_string(b.strategy)), b.round);
}

/// All (seed, strategy) runs on up to `threads` workers; outputs sorted by (seed, strategy name).
inline std::vector<RunOutput> run_experiment_full(const ExperimentConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  std::vector<std::pair<std::uint64_t, StrategyKind>> jobs;
  for (const auto seed : cfg.seeds)
    for (const auto s : cfg.strategies) jobs.emplace_back(seed, s);
  std::vector<RunOutput> runs(jobs.size());
  detail::parallel_for(jobs.size(), threads, [&](std::size_t i) { runs[i] = run_single(cfg, jobs[i].first, jobs[i].second); });
  std::sort(runs.begin(), runs.end(), [](const RunOutput& a, const RunOutput& b) {
    return std::make_tuple(a.seed, std::string_view(to_string(a.strategy))) <
           std::make_tuple(b.seed, std::string_view(to_string(b.strategy)));
  });
  return runs;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1) {
  std::vector<ResultRow> rows;
  for (auto& run : run_experiment_full(cfg, threads)) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
  std::stable_sort(rows.begin(), rows.end(), row_order);
  return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool include_wall_time) {
  using detail::format_real;
  out << kCsvVersionLine << "\nseed,strategy,round,dice,dice_s,dice_l,mean_eta,max_eta,steps_total,wall_ms\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << to_string(r.strategy) << ',' << r.round << ',' << format_real(r.dice) << ','
        << (r.dice_s ? format_real(*r.dice_s) : "") << ',' << (r.dice_l ? format_real(*r.dice_l) : "") << ','
        << format_real(r.mean_eta) << ',' << format_real(r.max_eta) << ',' << r.steps_total << ','
        << format_real(include_wall_time ? r.wall_ms : 0.0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = v.size();
  if (v.empty()) return m;
  m.mean = pairwise_sum(v) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (const double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

/// Final-round metrics of one strategy across seeds.
struct StrategySummary {
  StrategyKind strategy = StrategyKind::FedGS;
  MeanStd dice;
  MeanStd dice_s;
  MeanStd dice_l;
  double mean_round_ms = 0.0;
};

inline StrategySummary summarize_final_round(const std::vector<ResultRow>& rows, StrategyKind strategy) {
  std::map<std::uint64_t, const ResultRow*> last;
  double wall = 0.0;
  std::size_t n_rounds = 0;
  for (const auto& r : rows) {
    if (r.strategy != strategy) continue;
    wall += r.wall_ms;
    ++n_rounds;
    auto& slot = last[r.seed];
    if (!slot || slot->round < r.round) slot = &r;
  }
  std::vector<double> d, ds, dl;
  for (const auto& [seed, r] : last) {
    d.push_back(r->dice);
    if (r->dice_s) ds.push_back(*r->dice_s);
    if (r->dice_l) dl.push_back(*r->dice_l);
  }
  return {strategy, mean_std(d), mean_std(ds), mean_std(dl), n_rounds ? wall / static_cast<double>(n_rounds) : 0.0};
}

/// Human-readable table: per-seed final-round metrics and the strategy means.
inline std::string format_summary(const std::vector<ResultRow>& rows, const std::vector<StrategyKind>& strategies) {
  std::ostringstream o;
  char buf[256];
  std::map<std::uint64_t, std::map<std::string, const ResultRow*>> last;
  for (const auto& r : rows) {
    auto& slot = last[r.seed][to_string(r.strategy)];
    if (!slot || slot->round < r.round) slot = &r;
  }
  o << "final-round metrics per seed\n";
  std::snprintf(buf, sizeof buf, "%-8s %-8s %8s %8s %8s %9s\n", "seed", "strategy", "dice", "dice_s", "dice_l", "mean_eta");
  o << buf;
  for (const auto& [seed, by_strategy] : last)
    for (const auto& [name, r] : by_strategy) {
      std::snprintf(buf, sizeof buf, "%-8llu %-8s %8.4f %8s %8s %9.4f\n", static_cast<unsigned long long>(seed), name.c_str(),
                    r->dice, r->dice_s ? std::to_string(*r->dice_s).substr(0, 6).c_str() : "-",
                    r->dice_l ? std::to_string(*r->dice_l).substr(0, 6).c_str() : "-", r->mean_eta);
      o << buf;
    }
  o << "\nmean over seeds (final round)\n";
  std::vector<StrategySummary> sums;
  for (const auto s : strategies) {
    sums.push_back(summarize_final_round(rows, s));
    const auto& m = sums.back();
    std::snprintf(buf, sizeof buf, "%-8s dice %.4f±%.4f  dice_s %.4f±%.4f  dice_l %.4f±%.4f  round %.1f ms\n", to_string(s),
                  m.dice.mean, m.dice.stddev, m.dice_s.mean, m.dice_s.stddev, m.dice_l.mean, m.dice_l.stddev,
                  m.mean_round_ms);
    o << buf;
  }
  if (sums.size() == 2) {
    const auto& gs = sums[0].strategy == StrategyKind::FedGS ? sums[0] : sums[1];
    const auto& avg = sums[0].strategy == StrategyKind::FedGS ? sums[1] : sums[0];
    if (avg.mean_round_ms > 0.0) {
      std::snprintf(buf, sizeof buf, "fedgs wall-time overhead vs fedavg: %+.1f%% per round\n",
                    100.0 * (gs.mean_round_ms / avg.mean_round_ms - 1.0));
      o << buf;
    }
  }
  return o.str();
}

/// Writes results.csv, summary.txt and final checkpoints under cfg.output_dir (or `out_dir`).
inline std::string write_experiment_outputs(const ExperimentConfig& cfg, const std::vector<RunOutput>& runs,
                                            const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<ResultRow> rows;
  for (const auto& run : runs) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
  std::stable_sort(rows.begin(), rows.end(), row_order);

  {
    std::ofstream csv(out_dir / "results.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write results.csv");
    write_results_csv(csv, rows, cfg.record_wall_time);
  }
  for (const auto& run : runs) {
    std::ofstream ck(out_dir / ("params_seed" + std::to_string(run.seed) + "_" + to_string(run.strategy) + ".bin"),
                     std::ios::binary);
    if (!ck) throw IoError("cannot write checkpoint");
    write_params(ck, run.final_params);
  }
  const std::string summary = format_summary(rows, cfg.strategies);
  std::ofstream(out_dir / "summary.txt") << summary;
  return summary;
}

// ---------------------------------------------------------------------------
// Difficulty curve
// ---------------------------------------------------------------------------

struct CurvePoint {
  double inverse_area = 1.0;
  double raw = 0.0;    ///< tanh((log_l a)^2), no threshold
  double delta = 0.0;  ///< gated by a >= tau
};

inline constexpr double kCurveMax = 1e7;

inline std::vector<CurvePoint> emit_difficulty_curve(double log_base, double threshold, std::span<const double> grid) {
  DifficultyConfig cfg{log_base, threshold, Regime::WholeMask, 0, StructuringElement::Square3, Connectivity::Eight};
  cfg.validate();
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (const double a : grid) {
    if (!(a >= 1.0 && a <= kCurveMax)) throw ValidationError("curve: grid point outside [1, 1e7]");
    out.push_back({a, difficulty_curve(a, log_base), difficulty_from_inverse_area(a, cfg).delta});
  }
  return out;
}

/// lo * 10^(k / per_decade) for k = 0, 1, ... while <= hi (with relative slack for rounding).
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t per_decade) {
  if (!(lo >= 1.0 && hi <= kCurveMax && lo <= hi) || per_decade == 0) throw ValidationError("curve: bad grid");
  std::vector<double> g;
  for (std::size_t k = 0;; ++k) {
    const double v = lo * std::pow(10.0, static_cast<double>(k) / static_cast<double>(per_decade));
    if (v > hi * (1.0 + 1e-12)) break;
    g.push_back(std::min(v, hi));
  }
  return g;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& pts) {
  using detail::format_real;
  out << kCsvVersionLine << "\ninverse_area,raw,delta\n";
  for (const auto& p : pts) out << format_real(p.inverse_area) << ',' << format_real(p.raw) << ',' << format_real(p.delta) << '\n';
}

}  // namespace fedgs
