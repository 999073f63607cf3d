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
 * @brief Counter-based random streams.
 *
 * Draw i of a stream with key k is splitmix64_mix(k + (i + 1) * golden), i.e.
 * SplitMix64 evaluated at an explicit counter. Substreams are derived by
 * hashing (parent key, id), so a stream's output depends only on the path of
 * ids that named it. Distributions are implemented here rather than taken from
 * <random>, whose distribution algorithms are implementation-defined.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <utility>

namespace fedgs {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  /// Root stream for an experiment seed.
  static constexpr Stream root(std::uint64_t seed) noexcept { return Stream(splitmix64_mix(seed ^ 0x6A09E667F3BCC909ULL)); }

  /// Independent child stream keyed by `id`.
  constexpr Stream substream(std::uint64_t id) const noexcept {
    return Stream(splitmix64_mix(key_ ^ splitmix64_mix(id + kGolden)));
  }

  constexpr Stream substream(std::initializer_list<std::uint64_t> path) const noexcept {
    Stream s = *this;
    for (const auto id : path) s = s.substream(id);
    return s;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept { return splitmix64_mix(key_ + (++counter_) * kGolden); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), via 128-bit multiply-shift.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto range = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo)) + 1;
    const auto v = static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * range) >> 64);
    return lo + static_cast<std::int64_t>(v);
  }

  /// Standard normal via Box-Muller (one value per two draws).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fedgs
