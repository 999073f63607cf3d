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
 * @brief Two-layer 3x3 convolutional per-pixel segmenter with a hand-written
 * backward pass and soft Dice loss.
 *
 * Architecture:
 *   image (1 x H x W) -> conv3x3 (hidden channels, zero "same" padding) -> ReLU
 *                     -> conv3x3 (1 channel, same padding) -> sigmoid
 *
 * Flat parameter layout, in order:
 *   conv1 kernel [hidden][in][3][3], conv1 bias [hidden],
 *   conv2 kernel [hidden][3][3],     conv2 bias [1].
 */

#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fedgs/errors.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/rng.hpp"

namespace fedgs {

struct ArchDescriptor {
  std::size_t in_channels = 1;
  std::size_t hidden_channels = 4;

  void validate() const {
    if (in_channels != 1) throw ValidationError("model: only single-channel input is supported");
    if (hidden_channels < 1) throw ValidationError("model: hidden_channels must be >= 1");
  }

  std::size_t conv1_kernel_size() const noexcept { return hidden_channels * in_channels * 9; }
  std::size_t conv1_bias_offset() const noexcept { return conv1_kernel_size(); }
  std::size_t conv2_kernel_offset() const noexcept { return conv1_bias_offset() + hidden_channels; }
  std::size_t conv2_bias_offset() const noexcept { return conv2_kernel_offset() + hidden_channels * 9; }
  std::size_t param_count() const noexcept { return conv2_bias_offset() + 1; }
};

/**
 * @brief Flat vector of model parameters (or of anything shaped like them:
 * gradients, optimizer moments, cumulative gradients).
 */
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit ParamVector(std::vector<double> v) : values_(std::move(v)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept {
    for (const double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

inline void require_same_length(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.size() != b.size())
    throw LengthMismatch(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
}

// ---------------------------------------------------------------------------
// Checkpoint format: u64 little-endian element count, then IEEE-754 binary64
// little-endian values.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_le64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_le64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw IoError("params: truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_params(std::ostream& out, const ParamVector& p) {
  detail::put_le64(out, p.size());
  for (const double v : p) detail::put_le64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("params: write failed");
}

inline ParamVector read_params(std::istream& in) {
  const std::uint64_t n = detail::get_le64(in);
  std::vector<double> v(n);
  for (auto& x : v) x = std::bit_cast<double>(detail::get_le64(in));
  return ParamVector(std::move(v));
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Kernels ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
inline ParamVector init_params(const ArchDescriptor& arch, std::uint64_t seed) {
  arch.validate();
  ParamVector p(arch.param_count());
  Stream rng = Stream::root(seed).substream(0x5E6E7);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(arch.in_channels * 9));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden_channels * 9));
  for (std::size_t i = 0; i < arch.conv1_kernel_size(); ++i) p[i] = rng.uniform(-b1, b1);
  for (std::size_t i = 0; i < arch.hidden_channels * 9; ++i) p[arch.conv2_kernel_offset() + i] = rng.uniform(-b2, b2);
  return p;
}

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> hidden_pre;  // [hidden][H*W]
  std::vector<double> logits;      // [H*W]
  Grid prob;
};

namespace detail {

// out[y][x] += sum_k w[k] * in[y + dy - 1][x + dx - 1], zero padded.
inline void conv3x3_accumulate(std::span<const double> in, std::size_t h, std::size_t w, std::span<const double, 9> k,
                               std::span<double> out) {
  for (std::size_t dy = 0; dy < 3; ++dy)
    for (std::size_t dx = 0; dx < 3; ++dx) {
      const double wk = k[dy * 3 + dx];
      if (wk == 0.0) continue;
      const std::size_t y0 = dy == 0 ? 1 : 0;
      const std::size_t y1 = dy == 2 ? h - 1 : h;
      const std::size_t x0 = dx == 0 ? 1 : 0;
      const std::size_t x1 = dx == 2 ? w - 1 : w;
      for (std::size_t y = y0; y < y1; ++y) {
        const double* src = in.data() + (y + dy - 1) * w + (x0 + dx - 1);
        double* dst = out.data() + y * w + x0;
        for (std::size_t x = x0; x < x1; ++x) *dst++ += wk * *src++;
      }
    }
}

// grad_k[k] += sum_{y,x} g[y][x] * in[y + dy - 1][x + dx - 1]
inline void conv3x3_kernel_grad(std::span<const double> in, std::size_t h, std::size_t w, std::span<const double> g,
                                std::span<double, 9> grad_k) {
  for (std::size_t dy = 0; dy < 3; ++dy)
    for (std::size_t dx = 0; dx < 3; ++dx) {
      const std::size_t y0 = dy == 0 ? 1 : 0;
      const std::size_t y1 = dy == 2 ? h - 1 : h;
      const std::size_t x0 = dx == 0 ? 1 : 0;
      const std::size_t x1 = dx == 2 ? w - 1 : w;
      double acc = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        const double* src = in.data() + (y + dy - 1) * w + (x0 + dx - 1);
        const double* gg = g.data() + y * w + x0;
        for (std::size_t x = x0; x < x1; ++x) acc += *gg++ * *src++;
      }
      grad_k[dy * 3 + dx] += acc;
    }
}

// Transposed convolution: in_grad[y + dy - 1][x + dx - 1] += w[k] * g[y][x].
inline void conv3x3_input_grad(std::span<const double> g, std::size_t h, std::size_t w, std::span<const double, 9> k,
                               std::span<double> in_grad) {
  for (std::size_t dy = 0; dy < 3; ++dy)
    for (std::size_t dx = 0; dx < 3; ++dx) {
      const double wk = k[dy * 3 + dx];
      if (wk == 0.0) continue;
      const std::size_t y0 = dy == 0 ? 1 : 0;
      const std::size_t y1 = dy == 2 ? h - 1 : h;
      const std::size_t x0 = dx == 0 ? 1 : 0;
      const std::size_t x1 = dx == 2 ? w - 1 : w;
      for (std::size_t y = y0; y < y1; ++y) {
        double* dst = in_grad.data() + (y + dy - 1) * w + (x0 + dx - 1);
        const double* gg = g.data() + y * w + x0;
        for (std::size_t x = x0; x < x1; ++x) *dst++ += wk * *gg++;
      }
    }
}

inline void check_forward_inputs(const ArchDescriptor& arch, const ParamVector& params, const Grid& image) {
  if (params.size() != arch.param_count())
    throw LengthMismatch("model: expected " + std::to_string(arch.param_count()) + " params, got " +
                         std::to_string(params.size()));
  if (image.height < 3 || image.width < 3) throw ShapeMismatch("model: image must be at least 3x3");
  if (image.values.size() != image.height * image.width) throw ShapeMismatch("model: malformed image grid");
}

}  // namespace detail

inline ForwardCache forward_cached(const ArchDescriptor& arch, const ParamVector& params, const Grid& image) {
  detail::check_forward_inputs(arch, params, image);
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  const std::size_t n = h * w;
  const std::size_t hid = arch.hidden_channels;
  const auto p = params.span();

  ForwardCache fc;
  fc.hidden_pre.assign(hid * n, 0.0);
  fc.logits.assign(n, p[arch.conv2_bias_offset()]);
  std::vector<double> act(n);
  for (std::size_t c = 0; c < hid; ++c) {
    std::span<double> pre(fc.hidden_pre.data() + c * n, n);
    std::fill(pre.begin(), pre.end(), p[arch.conv1_bias_offset() + c]);
    detail::conv3x3_accumulate(image.values, h, w, p.subspan(c * 9).first<9>(), pre);
    for (std::size_t i = 0; i < n; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    detail::conv3x3_accumulate(act, h, w, p.subspan(arch.conv2_kernel_offset() + c * 9).first<9>(), fc.logits);
  }
  fc.prob = Grid(h, w);
  for (std::size_t i = 0; i < n; ++i) fc.prob.values[i] = sigmoid(fc.logits[i]);
  return fc;
}

/// Per-pixel foreground probabilities, same shape as `image`.
inline Grid forward(const ArchDescriptor& arch, const ParamVector& params, const Grid& image) {
  return forward_cached(arch, params, image).prob;
}

inline Mask binarize(const Grid& prob, double threshold = 0.5) {
  Mask m(prob.height, prob.width);
  for (std::size_t i = 0; i < prob.size(); ++i) m.set_flat(i, prob.values[i] >= threshold);
  return m;
}

// ---------------------------------------------------------------------------
// Dice loss
// ---------------------------------------------------------------------------

inline constexpr double kDiceSmoothing = 1.0;

/// 1 - (2 * sum(p * m) + s) / (sum(p) + sum(m) + s).
inline double dice_loss(const Grid& pred, const Mask& mask, double smoothing = kDiceSmoothing) {
  if (pred.height != mask.height() || pred.width != mask.width()) throw ShapeMismatch("dice_loss: shapes differ");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double m = mask[i] ? 1.0 : 0.0;
    inter += pred.values[i] * m;
    sum_p += pred.values[i];
    sum_m += m;
  }
  return 1.0 - (2.0 * inter + smoothing) / (sum_p + sum_m + smoothing);
}

struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// Dice loss of the model on (image, mask) together with its exact gradient.
inline LossAndGradient loss_and_gradient(const ArchDescriptor& arch, const ParamVector& params, const Grid& image,
                                         const Mask& mask) {
  if (image.height != mask.height() || image.width != mask.width()) throw ShapeMismatch("backward: shapes differ");
  const ForwardCache fc = forward_cached(arch, params, image);
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  const std::size_t n = h * w;
  const std::size_t hid = arch.hidden_channels;
  const auto p = params.span();

  double inter = 0.0;
  double sum_p = 0.0;
  double sum_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mask[i] ? 1.0 : 0.0;
    inter += fc.prob.values[i] * m;
    sum_p += fc.prob.values[i];
    sum_m += m;
  }
  const double num = 2.0 * inter + kDiceSmoothing;
  const double den = sum_p + sum_m + kDiceSmoothing;

  LossAndGradient out;
  out.loss = 1.0 - num / den;
  out.gradient = ParamVector(arch.param_count());
  auto g = out.gradient.span();

  // dL/dp_i = (num - 2 m_i den) / den^2, then through the sigmoid.
  std::vector<double> dlogit(n);
  const double inv_den2 = 1.0 / (den * den);
  double gb2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mask[i] ? 1.0 : 0.0;
    const double pr = fc.prob.values[i];
    dlogit[i] = (num - 2.0 * m * den) * inv_den2 * pr * (1.0 - pr);
    gb2 += dlogit[i];
  }
  g[arch.conv2_bias_offset()] = gb2;

  std::vector<double> act(n);
  std::vector<double> dact(n);
  for (std::size_t c = 0; c < hid; ++c) {
    const std::span<const double> pre(fc.hidden_pre.data() + c * n, n);
    for (std::size_t i = 0; i < n; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    detail::conv3x3_kernel_grad(act, h, w, dlogit, g.subspan(arch.conv2_kernel_offset() + c * 9).first<9>());

    std::fill(dact.begin(), dact.end(), 0.0);
    detail::conv3x3_input_grad(dlogit, h, w, p.subspan(arch.conv2_kernel_offset() + c * 9).first<9>(), dact);
    double gb1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dact[i] = pre[i] > 0.0 ? dact[i] : 0.0;
      gb1 += dact[i];
    }
    g[arch.conv1_bias_offset() + c] = gb1;
    detail::conv3x3_kernel_grad(image.values, h, w, dact, g.subspan(c * 9).first<9>());
  }
  return out;
}

inline ParamVector backward(const ArchDescriptor& arch, const ParamVector& params, const Grid& image, const Mask& mask) {
  return loss_and_gradient(arch, params, image, mask).gradient;
}

}  // namespace fedgs
