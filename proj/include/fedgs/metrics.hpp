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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedgs/difficulty.hpp"
#include "fedgs/errors.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/segnet.hpp"
#include "fedgs/synth.hpp"

namespace fedgs {

/// 2|P & G| / (|P| + |G|); 1.0 when both masks are empty.
inline double dice_score(const Mask& pred, const Mask& gt) {
  if (!pred.same_shape(gt)) throw ShapeMismatch("dice_score: shapes differ");
  std::size_t inter = 0;
  std::size_t np = 0;
  std::size_t ng = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    np += pred[i];
    ng += gt[i];
    inter += pred[i] && gt[i];
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

/// Pairwise summation over a fixed traversal order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline std::optional<double> mean_of(std::span<const double> v) {
  if (v.empty()) return std::nullopt;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

enum class SizeGroup { Small, Large, Empty };

inline SizeGroup classify_group(const Mask& gt, const DifficultyConfig& cfg) {
  if (gt.empty()) return SizeGroup::Empty;
  return is_small_lesion(gt, cfg) ? SizeGroup::Small : SizeGroup::Large;
}

struct EvalReport {
  double dice = 0.0;
  std::optional<double> dice_s;
  std::optional<double> dice_l;
  std::size_t n_total = 0;
  std::size_t n_small = 0;
  std::size_t n_large = 0;
  std::size_t n_empty = 0;
};

/**
 * @brief Mean Dice overall and per ground-truth size group.
 *
 * `dice` averages every sample; `dice_s` / `dice_l` average only samples whose
 * ground truth classifies small / large. Empty ground truths count towards
 * `dice` but neither group.
 */
inline EvalReport summarize_scores(std::span<const double> scores, std::span<const SizeGroup> groups) {
  if (scores.size() != groups.size()) throw LengthMismatch("summarize_scores: size mismatch");
  if (scores.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<double> small;
  std::vector<double> large;
  EvalReport rep;
  rep.n_total = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    switch (groups[i]) {
      case SizeGroup::Small:
        small.push_back(scores[i]);
        break;
      case SizeGroup::Large:
        large.push_back(scores[i]);
        break;
      case SizeGroup::Empty:
        ++rep.n_empty;
        break;
    }
  }
  rep.n_small = small.size();
  rep.n_large = large.size();
  rep.dice = *mean_of(scores);
  rep.dice_s = mean_of(small);
  rep.dice_l = mean_of(large);
  return rep;
}

inline EvalReport evaluate(const ArchDescriptor& arch, const ParamVector& params, const Dataset& test_set,
                           const DifficultyConfig& difficulty, double threshold = 0.5) {
  std::vector<double> scores;
  std::vector<SizeGroup> groups;
  scores.reserve(test_set.size());
  groups.reserve(test_set.size());
  for (const auto& s : test_set) {
    scores.push_back(dice_score(binarize(forward(arch, params, s.image), threshold), s.mask));
    groups.push_back(classify_group(s.mask, difficulty));
  }
  return summarize_scores(scores, groups);
}

}  // namespace fedgs
