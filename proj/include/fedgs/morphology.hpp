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
 * @brief Binary erosion/dilation with 3x3 elements and connected-component labeling.
 */

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fedgs/mask.hpp"

namespace fedgs {

enum class StructuringElement { Square3, Cross3 };
enum class Connectivity { Four, Eight };

namespace detail {

struct Offset {
  int dr;
  int dc;
};

inline constexpr std::array<Offset, 9> kSquare3{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
inline constexpr std::array<Offset, 5> kCross3{{{-1, 0}, {0, -1}, {0, 0}, {0, 1}, {1, 0}}};

inline std::span<const Offset> offsets(StructuringElement e) {
  if (e == StructuringElement::Square3) return kSquare3;
  return kCross3;
}

}  // namespace detail

/**
 * @brief Binary erosion, applied `iterations` times.
 *
 * A pixel survives when every element offset lands on foreground; offsets
 * outside the frame count as background.
 */
inline Mask erode(const Mask& mask, StructuringElement element, std::size_t iterations) {
  Mask cur = mask;
  const auto offs = detail::offsets(element);
  const auto h = static_cast<long>(mask.height());
  const auto w = static_cast<long>(mask.width());
  for (std::size_t it = 0; it < iterations; ++it) {
    Mask next(mask.height(), mask.width());
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) {
        if (!cur.get(r, c)) continue;
        bool keep = true;
        for (const auto& o : offs) {
          const long rr = r + o.dr;
          const long cc = c + o.dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w || !cur.get(rr, cc)) {
            keep = false;
            break;
          }
        }
        if (keep) next.set(r, c);
      }
    cur = std::move(next);
  }
  return cur;
}

/// Binary dilation with the same (symmetric) elements.
inline Mask dilate(const Mask& mask, StructuringElement element, std::size_t iterations) {
  Mask cur = mask;
  const auto offs = detail::offsets(element);
  const auto h = static_cast<long>(mask.height());
  const auto w = static_cast<long>(mask.width());
  for (std::size_t it = 0; it < iterations; ++it) {
    Mask next(mask.height(), mask.width());
    for (long r = 0; r < h; ++r)
      for (long c = 0; c < w; ++c) {
        if (!cur.get(r, c)) continue;
        for (const auto& o : offs) {
          const long rr = r + o.dr;
          const long cc = c + o.dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w) next.set(rr, cc);
        }
      }
    cur = std::move(next);
  }
  return cur;
}

/**
 * @brief Result of connected-component labeling.
 *
 * `labels` is row-major with 0 for background and 1..n for components, numbered
 * in raster order of each component's first pixel. `areas[i]` is the pixel
 * count of label i + 1.
 */
struct ComponentLabeling {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> areas;

  std::size_t count() const noexcept { return areas.size(); }
  std::size_t label_at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }

  /// Foreground mask of a single component.
  Mask component_mask(std::size_t label) const {
    Mask m(height, width);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) m.set_flat(i, true);
    return m;
  }
};

inline ComponentLabeling label_components(const Mask& mask, Connectivity conn) {
  static constexpr std::array<detail::Offset, 8> kEight{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
  static constexpr std::array<detail::Offset, 4> kFour{{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
  const std::span<const detail::Offset> nbrs =
      conn == Connectivity::Eight ? std::span<const detail::Offset>(kEight) : std::span<const detail::Offset>(kFour);

  ComponentLabeling out;
  out.height = mask.height();
  out.width = mask.width();
  out.labels.assign(mask.size(), 0);
  const auto h = static_cast<long>(mask.height());
  const auto w = static_cast<long>(mask.width());

  std::vector<std::pair<long, long>> stack;
  for (long r0 = 0; r0 < h; ++r0)
    for (long c0 = 0; c0 < w; ++c0) {
      if (!mask.get(r0, c0) || out.labels[r0 * w + c0] != 0) continue;
      const std::size_t label = out.areas.size() + 1;
      std::size_t area = 0;
      stack.clear();
      stack.emplace_back(r0, c0);
      out.labels[r0 * w + c0] = label;
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        ++area;
        for (const auto& o : nbrs) {
          const long rr = r + o.dr;
          const long cc = c + o.dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          auto& l = out.labels[rr * w + cc];
          if (l == 0 && mask.get(rr, cc)) {
            l = label;
            stack.emplace_back(rr, cc);
          }
        }
      }
      out.areas.push_back(area);
    }
  return out;
}

}  // namespace fedgs
