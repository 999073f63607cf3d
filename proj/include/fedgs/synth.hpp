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
 * @brief Synthetic lesion datasets with per-client lesion-size mixes.
 *
 * Each sample is either "small" (all lesions drawn from the small radius range)
 * or "large" (all from the large range), chosen with probability
 * small_fraction. Lesions are rasterized disks with integer centres placed so
 * the whole disk lies inside the frame; the image is Gaussian noise plus
 * lesion_intensity on the mask.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedgs/errors.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/rng.hpp"

namespace fedgs {

struct ClientDataSpec {
  std::size_t n_samples = 60;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t lesions_min = 1;
  std::size_t lesions_max = 2;
  double small_fraction = 0.05;
  double small_radius_min = 1.0;
  double small_radius_max = 2.0;
  double large_radius_min = 4.0;
  double large_radius_max = 7.0;
  double noise_std = 0.3;
  double lesion_intensity = 1.0;
  std::uint64_t seed_offset = 0;

  /// Throws ValidationError for malformed fields, InfeasibleSpec when a disk cannot fit.
  void validate() const {
    if (n_samples < 1) throw ValidationError("client spec: n_samples must be >= 1");
    if (height < 3 || width < 3) throw ValidationError("client spec: image must be at least 3x3");
    if (lesions_min < 1 || lesions_max < lesions_min) throw ValidationError("client spec: need 1 <= lesions_min <= lesions_max");
    if (!(small_fraction >= 0.0 && small_fraction <= 1.0)) throw ValidationError("client spec: small_fraction must be in [0, 1]");
    if (!(small_radius_min > 0.0) || small_radius_max < small_radius_min)
      throw ValidationError("client spec: need 0 < small_radius_min <= small_radius_max");
    if (large_radius_max < large_radius_min) throw ValidationError("client spec: need large_radius_min <= large_radius_max");
    if (!(small_radius_max < large_radius_min))
      throw ValidationError("client spec: small and large radius ranges must be disjoint (small_radius_max < large_radius_min)");
    if (!(noise_std >= 0.0)) throw ValidationError("client spec: noise_std must be >= 0");
    const auto fits = [&](double r) {
      const double span = 2.0 * std::ceil(r);
      return span <= static_cast<double>(height - 1) && span <= static_cast<double>(width - 1);
    };
    if (!fits(small_radius_max) || !fits(large_radius_max))
      throw InfeasibleSpec("client spec: lesion radius range does not fit a " + std::to_string(height) + "x" +
                           std::to_string(width) + " image");
  }
};

struct Provenance {
  std::size_t client = 0;
  std::size_t index = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Sample {
  Grid image;
  Mask mask;
  Provenance provenance;
  bool small_by_construction = false;

  friend bool operator==(const Sample&, const Sample&) = default;
};

using Dataset = std::vector<Sample>;

/// Number of pixels painted by paint_disk for an integer centre.
inline std::size_t disk_pixel_count(double radius) {
  const auto r = static_cast<long>(std::floor(radius));
  const double r2 = radius * radius;
  std::size_t n = 0;
  for (long dy = -r; dy <= r; ++dy)
    for (long dx = -r; dx <= r; ++dx)
      if (static_cast<double>(dy * dy + dx * dx) <= r2) ++n;
  return n;
}

/**
 * @brief A whole-mask threshold tau separating small from large samples of `spec`.
 *
 * Small samples have inverse area >= H*W / (lesions_max * |disk(r_max)|), large
 * ones <= H*W / |disk(R_min)|. Returns the geometric mean of those bounds, or
 * nullopt when they overlap.
 */
inline std::optional<double> separating_threshold(const ClientDataSpec& spec) {
  const double hw = static_cast<double>(spec.height * spec.width);
  const double small_lo = hw / static_cast<double>(spec.lesions_max * disk_pixel_count(spec.small_radius_max));
  const double large_hi = hw / static_cast<double>(disk_pixel_count(spec.large_radius_min));
  if (!(small_lo > large_hi)) return std::nullopt;
  return std::sqrt(small_lo * large_hi);
}

inline constexpr std::uint64_t kDataDomain = 0xDA7A;

inline Sample generate_sample(const ClientDataSpec& spec, std::uint64_t experiment_seed, std::size_t client, std::size_t index) {
  Stream rng = Stream::root(experiment_seed).substream({kDataDomain, spec.seed_offset, index});
  Sample s{Grid(spec.height, spec.width), Mask(spec.height, spec.width), {client, index}, false};
  s.small_by_construction = rng.bernoulli(spec.small_fraction);
  const auto n_lesions = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(spec.lesions_min), static_cast<std::int64_t>(spec.lesions_max)));
  const double r_lo = s.small_by_construction ? spec.small_radius_min : spec.large_radius_min;
  const double r_hi = s.small_by_construction ? spec.small_radius_max : spec.large_radius_max;
  for (std::size_t k = 0; k < n_lesions; ++k) {
    const double r = rng.uniform(r_lo, r_hi);
    const auto margin = static_cast<std::int64_t>(std::ceil(r));
    const auto cy = rng.uniform_int(margin, static_cast<std::int64_t>(spec.height) - 1 - margin);
    const auto cx = rng.uniform_int(margin, static_cast<std::int64_t>(spec.width) - 1 - margin);
    paint_disk(s.mask, static_cast<double>(cy), static_cast<double>(cx), r);
  }
  for (std::size_t i = 0; i < s.image.size(); ++i)
    s.image.values[i] = spec.noise_std * rng.normal() + (s.mask[i] ? spec.lesion_intensity : 0.0);
  return s;
}

/// Deterministic in (spec, experiment_seed); `client` only tags provenance.
inline Dataset generate_client_dataset(const ClientDataSpec& spec, std::uint64_t experiment_seed, std::size_t client = 0) {
  spec.validate();
  Dataset out;
  out.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) out.push_back(generate_sample(spec, experiment_seed, client, i));
  return out;
}

/// Fraction of foreground pixels darker than lesion_intensity - 5 sigma.
inline double consistency_violation_rate(const Dataset& data, const ClientDataSpec& spec) {
  std::size_t fg = 0;
  std::size_t bad = 0;
  const double floor_value = spec.lesion_intensity - 5.0 * spec.noise_std;
  for (const auto& s : data)
    for (std::size_t i = 0; i < s.mask.size(); ++i)
      if (s.mask[i]) {
        ++fg;
        if (s.image.values[i] < floor_value) ++bad;
      }
  return fg == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(fg);
}

inline constexpr double kConsistencyFlagRate = 1e-3;

struct Federation {
  std::vector<Dataset> clients;  ///< training clients, in spec order
  Dataset test;                  ///< held-out centre, never trains
  std::vector<std::string> warnings;
};

/**
 * @brief Training clients from all but the last spec; the last one is the test centre.
 *
 * Each client's data is keyed by ClientDataSpec::seed_offset, so reordering entries
 * does not change what any client holds.
 */
inline Federation build_federation(const std::vector<ClientDataSpec>& specs, std::uint64_t experiment_seed) {
  if (specs.size() < 2) throw ValidationError("federation needs at least one training client and a test centre");
  Federation fed;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Dataset d = generate_client_dataset(specs[k], experiment_seed, k);
    const double rate = consistency_violation_rate(d, specs[k]);
    if (rate > kConsistencyFlagRate)
      fed.warnings.push_back("client " + std::to_string(k) + ": " + std::to_string(rate * 100.0) +
                             "% of lesion pixels fall below intensity - 5 sigma");
    if (k + 1 == specs.size())
      fed.test = std::move(d);
    else
      fed.clients.push_back(std::move(d));
  }
  return fed;
}

/// Three large-lesion-dominated clients, one small-rich client, small-rich test centre.
inline std::vector<ClientDataSpec> default_federation_specs() {
  std::vector<ClientDataSpec> specs(5);
  const double fractions[5] = {0.05, 0.05, 0.05, 0.4, 0.3};
  for (std::size_t k = 0; k < specs.size(); ++k) {
    specs[k].small_fraction = fractions[k];
    specs[k].seed_offset = k;
  }
  specs.back().n_samples = 120;
  return specs;
}

// ---------------------------------------------------------------------------
// Dataset dump
// ---------------------------------------------------------------------------

/**
 * @brief Writes img_####.pgm / msk_####.pgm pairs into `dir`.
 *
 * Images are mapped linearly from [-4 sigma, intensity + 4 sigma] to [0, 255].
 * Returns the manifest lines "<index> <client tag> <is_small>" for the caller
 * to collect.
 */
inline std::vector<std::string> dump_dataset(const Dataset& data, const ClientDataSpec& spec,
                                             const std::filesystem::path& dir, const std::string& client_tag) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const double lo = -4.0 * spec.noise_std;
  const double hi = spec.lesion_intensity + 4.0 * spec.noise_std;
  std::vector<std::string> lines;
  char name[32];
  for (const auto& s : data) {
    std::snprintf(name, sizeof name, "%04zu", s.provenance.index);
    save_gray_pgm((dir / ("img_" + std::string(name) + ".pgm")).string(), grid_to_gray(s.image, lo, hi));
    save_mask_pgm((dir / ("msk_" + std::string(name) + ".pgm")).string(), s.mask);
    lines.push_back(std::string(name) + ' ' + client_tag + ' ' + (s.small_by_construction ? '1' : '0'));
  }
  return lines;
}

inline void dump_federation(const Federation& fed, const std::vector<ClientDataSpec>& specs, const std::filesystem::path& root) {
  std::vector<std::string> manifest;
  for (std::size_t k = 0; k < fed.clients.size(); ++k) {
    const std::string tag = "client_" + std::to_string(k);
    auto lines = dump_dataset(fed.clients[k], specs[k], root / tag, tag);
    manifest.insert(manifest.end(), lines.begin(), lines.end());
  }
  auto lines = dump_dataset(fed.test, specs.back(), root / "test", "test");
  manifest.insert(manifest.end(), lines.begin(), lines.end());

  std::ofstream out(root / "manifest.txt");
  if (!out) throw IoError("cannot write " + (root / "manifest.txt").string());
  out << "# sample_id client is_small\n";
  for (const auto& l : manifest) out << l << '\n';
}

}  // namespace fedgs
