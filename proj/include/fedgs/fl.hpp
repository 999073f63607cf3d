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
 * @brief Federated rounds: gradient-scaled cumulative aggregation (FedGS) and
 * the FedAvg baseline.
 *
 * Client side. Every local step updates the parameters with the unmodified
 * optimizer, then adds eta_t times the parameter decrement
 * (w_{t-1} - w_t) to the cumulative gradient G. eta_t is derived from the
 * ground-truth masks of the batch and never touches the local trajectory.
 *
 * Server side. G^A = sum_k (steps_k / steps_total) G^k, then w <- w - G^A.
 * With eta = 1, G^k telescopes to w_global - w_k, so the update reduces to a
 * step-weighted average of client models.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedgs/difficulty.hpp"
#include "fedgs/errors.hpp"
#include "fedgs/optimizer.hpp"
#include "fedgs/parallel.hpp"
#include "fedgs/rng.hpp"
#include "fedgs/segnet.hpp"
#include "fedgs/synth.hpp"

namespace fedgs {

enum class StrategyKind { FedGS, FedAvg };

inline const char* to_string(StrategyKind k) { return k == StrategyKind::FedGS ? "fedgs" : "fedavg"; }

struct StrategyConfig {
  StrategyKind kind = StrategyKind::FedGS;
  DifficultyConfig difficulty;  ///< consulted by FedGS only
  std::size_t batch_size = 4;
  std::size_t local_epochs = 2;

  void validate() const {
    if (batch_size < 1) throw ValidationError("strategy: batch_size must be >= 1");
    if (local_epochs < 1) throw ValidationError("strategy: local_epochs must be >= 1");
    difficulty.validate();
  }
};

/// Everything a client needs to train locally.
struct TrainingConfig {
  ArchDescriptor arch;
  OptimizerHyper optimizer;
  StrategyConfig strategy;

  void validate() const {
    arch.validate();
    optimizer.validate();
    strategy.validate();
  }
};

struct ClientState {
  std::size_t client_id = 0;
  ParamVector params;
  ParamVector cumulative_gradient;
  std::size_t steps_this_round = 0;
  OptimizerState optimizer;
  double eta_sum = 0.0;
  double eta_max = 0.0;

  /// Round start: local copy of the global model, G = 0, fresh optimizer moments.
  static ClientState begin_round(std::size_t id, const ParamVector& global, const OptimizerHyper& hyper) {
    return {id, global, ParamVector(global.size()), 0, OptimizerState::fresh(hyper, global.size()), 0.0, 0.0};
  }
};

struct ClientRoundReport {
  std::size_t client_id = 0;
  ParamVector cumulative_gradient;
  std::size_t steps = 0;
};

/// G += eta * (before - after): the scaled parameter decrement of one local step.
inline void accumulate_scaled_decrement(ParamVector& cumulative, const ParamVector& before, const ParamVector& after,
                                        double eta) {
  require_same_length(cumulative, before, "accumulate_scaled_decrement");
  require_same_length(before, after, "accumulate_scaled_decrement");
  for (std::size_t i = 0; i < cumulative.size(); ++i) cumulative[i] += eta * (before[i] - after[i]);
}

/// Per-client difficulty factors, one per sample (all zero for FedAvg).
inline std::vector<double> sample_deltas(const Dataset& data, const StrategyConfig& strategy) {
  std::vector<double> deltas(data.size(), 0.0);
  if (strategy.kind == StrategyKind::FedGS)
    for (std::size_t i = 0; i < data.size(); ++i) deltas[i] = difficulty_factor(data[i].mask, strategy.difficulty).delta;
  return deltas;
}

/**
 * @brief One local step on `batch`. Returns the eta applied to this step.
 *
 * `deltas` holds the difficulty factor of each batch element; FedAvg ignores
 * it and accumulates with eta = 1. A short batch uses its own size as N.
 */
inline double local_iteration(ClientState& state, std::span<const Sample* const> batch, std::span<const double> deltas,
                              const TrainingConfig& cfg) {
  if (batch.empty()) throw BadBatch("local_iteration: empty batch");
  if (batch.size() > cfg.strategy.batch_size) throw BadBatch("local_iteration: batch larger than batch_size");

  ParamVector grad(state.params.size());
  for (const Sample* s : batch) {
    const ParamVector g = backward(cfg.arch, state.params, s->image, s->mask);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv_n;

  const ParamVector before = state.params;
  optimizer_step(state.optimizer, state.params, grad);

  const double eta = cfg.strategy.kind == StrategyKind::FedGS ? batch_scaling_factor(deltas, batch.size()) : 1.0;
  accumulate_scaled_decrement(state.cumulative_gradient, before, state.params, eta);
  ++state.steps_this_round;
  state.eta_sum += eta;
  state.eta_max = std::max(state.eta_max, eta);
  return eta;
}

/// Convenience overload computing the deltas from the batch masks.
inline double local_iteration(ClientState& state, std::span<const Sample* const> batch, const TrainingConfig& cfg) {
  std::vector<double> deltas(batch.size(), 0.0);
  if (cfg.strategy.kind == StrategyKind::FedGS)
    for (std::size_t i = 0; i < batch.size(); ++i) deltas[i] = difficulty_factor(batch[i]->mask, cfg.strategy.difficulty).delta;
  return local_iteration(state, batch, deltas, cfg);
}

/// Called after every local step with (client id, step index, parameters).
using TrajectoryObserver = std::function<void(std::size_t, std::size_t, const ParamVector&)>;

struct ClientRoundResult {
  ClientRoundReport report;
  ParamVector final_params;
  std::size_t n_samples = 0;
  double eta_sum = 0.0;
  double eta_max = 0.0;
};

/**
 * @brief Trains one client for `local_epochs` passes and reports G^k and steps_k.
 *
 * The sample order is reshuffled at every epoch from `rng`.
 */
inline ClientRoundResult run_client_round(const ParamVector& global, const Dataset& data, const TrainingConfig& cfg,
                                          Stream rng, std::size_t client_id = 0,
                                          const TrajectoryObserver& observer = {},
                                          const std::vector<double>* precomputed_deltas = nullptr) {
  if (data.empty()) throw ValidationError("run_client_round: empty dataset");
  std::vector<double> own_deltas;
  if (!precomputed_deltas) own_deltas = sample_deltas(data, cfg.strategy);
  const std::vector<double>& deltas = precomputed_deltas ? *precomputed_deltas : own_deltas;

  ClientState state = ClientState::begin_round(client_id, global, cfg.optimizer);
  std::vector<std::size_t> order(data.size());
  std::vector<const Sample*> batch;
  std::vector<double> batch_deltas;
  const std::size_t n_batch = cfg.strategy.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.strategy.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += n_batch) {
      const std::size_t stop = std::min(order.size(), start + n_batch);
      batch.clear();
      batch_deltas.clear();
      for (std::size_t j = start; j < stop; ++j) {
        batch.push_back(&data[order[j]]);
        batch_deltas.push_back(deltas[order[j]]);
      }
      local_iteration(state, batch, batch_deltas, cfg);
      if (observer) observer(client_id, state.steps_this_round - 1, state.params);
    }
  }
  return {{client_id, std::move(state.cumulative_gradient), state.steps_this_round},
          std::move(state.params),
          data.size(),
          state.eta_sum,
          state.eta_max};
}

/// G^A = sum_k (steps_k / steps_total) G^k.
inline ParamVector aggregate_fedgs(std::span<const ClientRoundReport> reports) {
  if (reports.empty()) throw EmptyFederation("aggregate_fedgs: no reports");
  std::size_t total = 0;
  for (const auto& r : reports) {
    if (r.steps < 1) throw ValidationError("aggregate_fedgs: client reported zero steps");
    require_same_length(reports.front().cumulative_gradient, r.cumulative_gradient, "aggregate_fedgs");
    total += r.steps;
  }
  ParamVector out(reports.front().cumulative_gradient.size());
  for (const auto& r : reports) {
    const double w = static_cast<double>(r.steps) / static_cast<double>(total);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * r.cumulative_gradient[i];
  }
  return out;
}

inline ParamVector apply_global_update(const ParamVector& global, const ParamVector& aggregated) {
  require_same_length(global, aggregated, "apply_global_update");
  ParamVector out = global;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= aggregated[i];
  return out;
}

struct WeightedParams {
  const ParamVector* params = nullptr;
  double weight = 0.0;
};

/// Weighted mean of client parameter vectors.
inline ParamVector aggregate_fedavg(std::span<const WeightedParams> clients) {
  if (clients.empty()) throw EmptyFederation("aggregate_fedavg: no clients");
  double total = 0.0;
  for (const auto& c : clients) {
    if (!(c.weight >= 0.0)) throw ValidationError("aggregate_fedavg: negative weight");
    require_same_length(*clients.front().params, *c.params, "aggregate_fedavg");
    total += c.weight;
  }
  if (!(total > 0.0)) throw ValidationError("aggregate_fedavg: weights sum to zero");
  ParamVector out(clients.front().params->size());
  for (const auto& c : clients) {
    const double w = c.weight / total;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*c.params)[i];
  }
  return out;
}

struct RoundStats {
  std::vector<std::size_t> steps;  ///< per client
  std::size_t steps_total = 0;
  double mean_eta = 1.0;
  double max_eta = 1.0;
  double wall_ms = 0.0;
};

struct RoundOutcome {
  ParamVector global;
  RoundStats stats;
  std::vector<ClientRoundResult> clients;
};

inline constexpr std::uint64_t kTrainDomain = 0x7A1;

/// Shuffling stream of client `k` in round `round` of an experiment.
inline Stream client_stream(std::uint64_t experiment_seed, std::size_t client, std::size_t round) {
  return Stream::root(experiment_seed).substream({kTrainDomain, client, round});
}

/**
 * @brief One federated round from a shared global snapshot.
 *
 * Client rounds are independent and run on up to `threads` workers; the
 * aggregation waits for all of them. With threads > 1 the observer may be
 * called concurrently from different clients.
 */
inline RoundOutcome run_round(const ParamVector& global, std::span<const Dataset> clients, const TrainingConfig& cfg,
                              std::uint64_t experiment_seed, std::size_t round, std::size_t threads = 1,
                              const TrajectoryObserver& observer = {},
                              const std::vector<std::vector<double>>* deltas = nullptr) {
  if (clients.empty()) throw EmptyFederation("run_round: no clients");
  const auto t0 = std::chrono::steady_clock::now();

  RoundOutcome out;
  out.clients.resize(clients.size());
  detail::parallel_for(clients.size(), threads, [&](std::size_t k) {
    out.clients[k] = run_client_round(global, clients[k], cfg, client_stream(experiment_seed, k, round), k, observer,
                                      deltas ? &(*deltas)[k] : nullptr);
  });

  if (cfg.strategy.kind == StrategyKind::FedGS) {
    std::vector<ClientRoundReport> reports;
    reports.reserve(out.clients.size());
    for (const auto& c : out.clients) reports.push_back(c.report);
    out.global = apply_global_update(global, aggregate_fedgs(reports));
  } else {
    std::vector<WeightedParams> weighted;
    weighted.reserve(out.clients.size());
    for (const auto& c : out.clients) weighted.push_back({&c.final_params, static_cast<double>(c.n_samples)});
    out.global = aggregate_fedavg(weighted);
  }

  double eta_sum = 0.0;
  double eta_max = 1.0;
  for (const auto& c : out.clients) {
    out.stats.steps.push_back(c.report.steps);
    out.stats.steps_total += c.report.steps;
    eta_sum += c.eta_sum;
    eta_max = std::max(eta_max, c.eta_max);
  }
  out.stats.mean_eta = eta_sum / static_cast<double>(out.stats.steps_total);
  out.stats.max_eta = eta_max;
  out.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace fedgs
