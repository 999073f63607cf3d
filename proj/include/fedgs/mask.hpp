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
 * @brief Binary masks, real-valued image grids and their PGM (P5) encoding.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fedgs/errors.hpp"

namespace fedgs {

/**
 * @brief Row-major H x W grid of real values (images, probability maps).
 */
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * width + c]; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/**
 * @brief H x W binary segmentation mask. Every cell is 0 or 1.
 *
 * Construction enforces height, width >= 1; mutation goes through set(), which
 * normalizes any truthy value to 1.
 */
class Mask {
 public:
  Mask(std::size_t height, std::size_t width) : height_(height), width_(width), bits_(height * width, 0) {
    if (height == 0 || width == 0) throw ShapeMismatch("mask must be at least 1x1");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool get(std::size_t r, std::size_t c) const { return bits_[r * width_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits_[r * width_ + c] = v ? 1 : 0; }

  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set_flat(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool empty() const noexcept { return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) == bits_.end(); }

  bool same_shape(const Mask& o) const noexcept { return height_ == o.height_ && width_ == o.width_; }

  /// True when every foreground pixel of this mask is also set in `o`.
  bool subset_of(const Mask& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] && !o.bits_[i]) return false;
    return true;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> bits_;
};

/// Pixels whose centre lies within `radius` of (cy, cx) become foreground.
inline void paint_disk(Mask& m, double cy, double cx, double radius) {
  const double r2 = radius * radius;
  const auto lo_r = static_cast<long>(std::max(0.0, std::floor(cy - radius)));
  const auto hi_r = static_cast<long>(std::min<double>(m.height() - 1, std::ceil(cy + radius)));
  const auto lo_c = static_cast<long>(std::max(0.0, std::floor(cx - radius)));
  const auto hi_c = static_cast<long>(std::min<double>(m.width() - 1, std::ceil(cx + radius)));
  for (long r = lo_r; r <= hi_r; ++r)
    for (long c = lo_c; c <= hi_c; ++c) {
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      if (dy * dy + dx * dx <= r2) m.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
}

/// Union of two equally shaped masks.
inline Mask mask_union(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("mask_union: shapes differ");
  Mask out = a;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) out.set_flat(i, true);
  return out;
}

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit)
// ---------------------------------------------------------------------------

namespace detail {

inline void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pgm_uint(std::istream& in) {
  skip_pgm_space(in);
  std::size_t v = 0;
  if (!(in >> v)) throw IoError("pgm: malformed header");
  return v;
}

}  // namespace detail

/// Raw 8-bit gray image as stored in a P5 file.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

inline GrayImage read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError("pgm: expected P5 magic");
  GrayImage img;
  img.width = detail::read_pgm_uint(in);
  img.height = detail::read_pgm_uint(in);
  const std::size_t maxval = detail::read_pgm_uint(in);
  if (img.width == 0 || img.height == 0) throw IoError("pgm: zero dimension");
  if (maxval == 0 || maxval > 255) throw IoError("pgm: only 8-bit maxval is supported");
  in.get();  // single whitespace before raster
  img.pixels.resize(img.height * img.width);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw IoError("pgm: truncated raster");
  return img;
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("pgm: write failed");
}

/// Foreground is any stored value >= 128.
inline Mask mask_from_gray(const GrayImage& img) {
  Mask m(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.set_flat(i, img.pixels[i] >= 128);
  return m;
}

/// Emits exactly {0, 255}.
inline GrayImage mask_to_gray(const Mask& m) {
  GrayImage img{m.height(), m.width(), std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = m[i] ? 255 : 0;
  return img;
}

/// Affine map [lo, hi] -> [0, 255] with clamping and round-half-away.
inline GrayImage grid_to_gray(const Grid& g, double lo, double hi) {
  GrayImage img{g.height, g.width, std::vector<std::uint8_t>(g.size())};
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::round((g.values[i] - lo) * scale);
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return img;
}

inline Mask load_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return mask_from_gray(read_pgm(in));
}

inline void save_mask_pgm(const std::string& path, const Mask& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_pgm(out, mask_to_gray(m));
}

inline void save_gray_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_pgm(out, img);
}

}  // namespace fedgs
