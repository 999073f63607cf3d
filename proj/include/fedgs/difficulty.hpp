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
 * @brief Small-lesion classification and the per-image difficulty factor.
 *
 * The inverse relative area a = (H * W) / |foreground| measures how small the
 * target is. A mask is "small" when a >= tau; its difficulty is then
 * tanh((log_l a)^2), and 0 otherwise. A batch of N difficulties is folded into
 * a gradient scaling factor eta = 1 + (2 / N) * sum(delta), which lies in [1, 3).
 */

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "fedgs/errors.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/morphology.hpp"

namespace fedgs {

enum class Regime {
  WholeMask,  ///< a computed from the whole foreground
  BlobSplit,  ///< a computed from the smallest lesion after erosion-based separation
};

struct DifficultyConfig {
  double log_base = 100.0;
  double threshold = 150.0;
  Regime regime = Regime::BlobSplit;
  std::size_t erosion_iterations = 1;
  StructuringElement element = StructuringElement::Square3;
  Connectivity connectivity = Connectivity::Eight;

  void validate() const {
    if (!(log_base > 1.0) || !std::isfinite(log_base)) throw ValidationError("difficulty: log_base must be > 1");
    if (!(threshold >= 1.0) || !std::isfinite(threshold)) throw ValidationError("difficulty: threshold must be >= 1");
  }

  /// Polyp-style setting: blob separation, tau = 150, l = 100.
  static DifficultyConfig blob_split(double log_base = 100.0, double threshold = 150.0) {
    return {log_base, threshold, Regime::BlobSplit, 1, StructuringElement::Square3, Connectivity::Eight};
  }

  /// Tumor-style setting: whole mask, tau = 1000, l = 1000.
  static DifficultyConfig whole_mask(double log_base = 1000.0, double threshold = 1000.0) {
    return {log_base, threshold, Regime::WholeMask, 1, StructuringElement::Square3, Connectivity::Eight};
  }
};

struct DifficultyResult {
  std::optional<double> inverse_area;  ///< nullopt for an empty mask
  bool is_small = false;
  double delta = 0.0;
};

/// Largest representable difficulty; tanh saturates to exactly 1.0 in double.
inline constexpr double kMaxDelta = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

/// (H * W) / |foreground|, or nullopt for an empty mask.
inline std::optional<double> inverse_relative_area(const Mask& mask) {
  const std::size_t fg = mask.count();
  if (fg == 0) return std::nullopt;
  return static_cast<double>(mask.size()) / static_cast<double>(fg);
}

/**
 * @brief Estimated pixel area of the smallest distinct lesion.
 *
 * Erodes the mask to break thin bridges between touching lesions, labels the
 * eroded components, and grows the smallest one back by dilating it once per
 * erosion step (intersected with the original mask). When erosion wipes out
 * the whole mask, the smallest un-eroded component is used instead.
 */
inline std::optional<std::size_t> smallest_lesion_area(const Mask& mask, const DifficultyConfig& cfg) {
  if (mask.empty()) return std::nullopt;

  auto smallest = [](const ComponentLabeling& lab) {
    const auto it = std::min_element(lab.areas.begin(), lab.areas.end());
    return static_cast<std::size_t>(it - lab.areas.begin()) + 1;
  };

  const Mask eroded = erode(mask, cfg.element, cfg.erosion_iterations);
  if (eroded.empty()) {
    const auto lab = label_components(mask, cfg.connectivity);
    return lab.areas[smallest(lab) - 1];
  }

  const auto lab = label_components(eroded, cfg.connectivity);
  const Mask seed = lab.component_mask(smallest(lab));
  const Mask grown = dilate(seed, cfg.element, cfg.erosion_iterations);
  std::size_t area = 0;
  for (std::size_t i = 0; i < grown.size(); ++i)
    if (grown[i] && mask[i]) ++area;
  return area;
}

inline std::optional<double> smallest_lesion_inverse_area(const Mask& mask, const DifficultyConfig& cfg) {
  const auto area = smallest_lesion_area(mask, cfg);
  if (!area) return std::nullopt;
  return static_cast<double>(mask.size()) / static_cast<double>(*area);
}

/// tanh((log_l a)^2) without the threshold gate; capped below 1.
inline double difficulty_curve(double inverse_area, double log_base) {
  assert(inverse_area >= 1.0);
  const double lg = std::log(inverse_area) / std::log(log_base);
  return std::min(std::tanh(lg * lg), kMaxDelta);
}

/// Gated difficulty for a known inverse area.
inline DifficultyResult difficulty_from_inverse_area(std::optional<double> inverse_area, const DifficultyConfig& cfg) {
  DifficultyResult res;
  res.inverse_area = inverse_area;
  if (!inverse_area) return res;
  res.is_small = *inverse_area >= cfg.threshold;
  res.delta = res.is_small ? difficulty_curve(*inverse_area, cfg.log_base) : 0.0;
  return res;
}

inline DifficultyResult difficulty_factor(const Mask& mask, const DifficultyConfig& cfg) {
  const auto a = cfg.regime == Regime::WholeMask ? inverse_relative_area(mask) : smallest_lesion_inverse_area(mask, cfg);
  return difficulty_from_inverse_area(a, cfg);
}

inline bool is_small_lesion(const Mask& mask, const DifficultyConfig& cfg) { return difficulty_factor(mask, cfg).is_small; }

/**
 * @brief eta = 1 + (2 / N) * sum(deltas), in [1, 3).
 *
 * Throws BadBatch when `deltas.size() != batch_size`, the batch is empty, or a
 * delta falls outside [0, 1).
 */
inline double batch_scaling_factor(std::span<const double> deltas, std::size_t batch_size) {
  if (batch_size == 0) throw BadBatch("batch size must be >= 1");
  if (deltas.size() != batch_size)
    throw BadBatch("expected " + std::to_string(batch_size) + " deltas, got " + std::to_string(deltas.size()));
  double sum = 0.0;
  for (const double d : deltas) {
    if (!(d >= 0.0 && d < 1.0)) throw BadBatch("delta out of [0, 1): " + std::to_string(d));
    sum += d;
  }
  const double eta = 1.0 + 2.0 / static_cast<double>(batch_size) * sum;
  return std::min(eta, std::nextafter(3.0, 0.0));
}

inline double batch_scaling_factor(std::span<const double> deltas) { return batch_scaling_factor(deltas, deltas.size()); }

}  // namespace fedgs
