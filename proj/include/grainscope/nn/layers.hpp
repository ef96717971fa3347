#pragma once

// Forward and backward kernels for the layer kinds the classifier uses.
// Layouts: conv kernels [filters][in_channels][k][k]; dense kernels
// [units][in_features]. Convolution is cross-correlation (no kernel flip).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "grainscope/common/rng.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/nn/tensor.hpp"

namespace grainscope::nn {

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

struct ConvGeometry {
  int in_c, in_h, in_w;
  int k, stride;
  int out_h, out_w;
  int pad_top, pad_left;

  static ConvGeometry make(Shape3 in, int k, int stride, Padding p) {
    ConvGeometry g{};
    g.in_c = in.channels;
    g.in_h = in.height;
    g.in_w = in.width;
    g.k = k;
    g.stride = stride;
    g.out_h = conv_out_dim(in.height, k, stride, p);
    g.out_w = conv_out_dim(in.width, k, stride, p);
    g.pad_top = p == Padding::same ? same_pad_before(in.height, k, stride) : 0;
    g.pad_left = p == Padding::same ? same_pad_before(in.width, k, stride) : 0;
    if (g.out_h <= 0 || g.out_w <= 0) throw ConfigError("convolution output collapses to 0");
    return g;
  }
  int rows() const noexcept { return in_c * k * k; }
  int cols() const noexcept { return out_h * out_w; }
};

namespace detail {

template <class Real>
void im2col(std::span<const Real> img, const ConvGeometry& g, std::vector<Real>& cols) {
  cols.assign(static_cast<std::size_t>(g.rows()) * g.cols(), Real(0));
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        Real* row = cols.data() + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.pad_top;
          if (iy < 0 || iy >= g.in_h) continue;
          const Real* src = img.data() + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          Real* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + kx - g.pad_left;
            if (ix >= 0 && ix < g.in_w) dst[ox] = src[ix];
          }
        }
      }
}

template <class Real>
void col2im_add(const std::vector<Real>& cols, const ConvGeometry& g, std::span<Real> img) {
  for (int c = 0; c < g.in_c; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const Real* row =
            cols.data() + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.pad_top;
          if (iy < 0 || iy >= g.in_h) continue;
          Real* dst = img.data() + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          const Real* src = row + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + kx - g.pad_left;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace detail

template <class Real>
Tensor4<Real> conv2d_forward(const Tensor4<Real>& input, std::span<const Real> kernel,
                             std::span<const Real> bias, int filters, int k, int stride,
                             Padding padding) {
  const auto g = ConvGeometry::make(input.sample_shape(), k, stride, padding);
  if (kernel.size() != static_cast<std::size_t>(filters) * g.rows())
    throw ConfigError("conv2d kernel does not match input channels (" +
                      std::to_string(kernel.size()) + " weights for " +
                      std::to_string(input.channels()) + " channels)");
  if (bias.size() != static_cast<std::size_t>(filters))
    throw ConfigError("conv2d bias length does not match filter count");
  Tensor4<Real> out(input.batch(), filters, g.out_h, g.out_w);
  std::vector<Real> cols;
  const int R = g.rows(), P = g.cols();
  for (int n = 0; n < input.batch(); ++n) {
    detail::im2col(input.sample(n), g, cols);
    auto o = out.sample(n);
    for (int f = 0; f < filters; ++f) {
      Real* orow = o.data() + static_cast<std::size_t>(f) * P;
      std::fill(orow, orow + P, bias[f]);
      const Real* w = kernel.data() + static_cast<std::size_t>(f) * R;
      for (int r = 0; r < R; ++r) {
        const Real wr = w[r];
        const Real* crow = cols.data() + static_cast<std::size_t>(r) * P;
        for (int p = 0; p < P; ++p) orow[p] += wr * crow[p];
      }
    }
  }
  return out;
}

/// Accumulates kernel/bias gradients and returns the input gradient.
template <class Real>
Tensor4<Real> conv2d_backward(const Tensor4<Real>& input, std::span<const Real> kernel,
                              const Tensor4<Real>& grad_out, int filters, int k, int stride,
                              Padding padding, std::span<Real> grad_kernel,
                              std::span<Real> grad_bias, bool need_input_grad = true) {
  const auto g = ConvGeometry::make(input.sample_shape(), k, stride, padding);
  const int R = g.rows(), P = g.cols();
  Tensor4<Real> grad_in(input.batch(), input.sample_shape());
  std::vector<Real> cols, dcols;
  for (int n = 0; n < input.batch(); ++n) {
    detail::im2col(input.sample(n), g, cols);
    auto go = grad_out.sample(n);
    for (int f = 0; f < filters; ++f) {
      const Real* grow = go.data() + static_cast<std::size_t>(f) * P;
      Real bsum = 0;
      for (int p = 0; p < P; ++p) bsum += grow[p];
      grad_bias[f] += bsum;
      Real* gw = grad_kernel.data() + static_cast<std::size_t>(f) * R;
      for (int r = 0; r < R; ++r) {
        const Real* crow = cols.data() + static_cast<std::size_t>(r) * P;
        Real acc = 0;
        for (int p = 0; p < P; ++p) acc += grow[p] * crow[p];
        gw[r] += acc;
      }
    }
    if (!need_input_grad) continue;
    dcols.assign(static_cast<std::size_t>(R) * P, Real(0));
    for (int f = 0; f < filters; ++f) {
      const Real* grow = go.data() + static_cast<std::size_t>(f) * P;
      const Real* w = kernel.data() + static_cast<std::size_t>(f) * R;
      for (int r = 0; r < R; ++r) {
        const Real wr = w[r];
        Real* drow = dcols.data() + static_cast<std::size_t>(r) * P;
        for (int p = 0; p < P; ++p) drow[p] += wr * grow[p];
      }
    }
    detail::col2im_add(dcols, g, grad_in.sample(n));
  }
  return grad_in;
}

/// 2x2 window, stride 2, floor output. `argmax` receives, per output
/// element, the flat index of the winning input element within its sample.
template <class Real>
Tensor4<Real> maxpool2_forward(const Tensor4<Real>& input, std::vector<std::int32_t>* argmax) {
  if (input.height() < 2 || input.width() < 2)
    throw ConfigError("max-pooling needs spatial size >= 2, got " + input.sample_shape().str());
  const int oh = input.height() / 2, ow = input.width() / 2;
  Tensor4<Real> out(input.batch(), input.channels(), oh, ow);
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < input.batch(); ++n)
    for (int c = 0; c < input.channels(); ++c)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x, ++o) {
          Real best = -std::numeric_limits<Real>::infinity();
          std::int32_t best_idx = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int iy = 2 * y + dy, ix = 2 * x + dx;
              const Real v = input.at(n, c, iy, ix);
              if (v > best) {
                best = v;
                best_idx = static_cast<std::int32_t>(
                    (static_cast<std::size_t>(c) * input.height() + iy) * input.width() + ix);
              }
            }
          out.data()[o] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
  return out;
}

template <class Real>
Tensor4<Real> maxpool2_backward(const Tensor4<Real>& grad_out,
                                const std::vector<std::int32_t>& argmax, Shape3 in_shape) {
  Tensor4<Real> grad_in(grad_out.batch(), in_shape);
  const std::size_t per = grad_out.sample_size();
  for (int n = 0; n < grad_out.batch(); ++n) {
    auto gi = grad_in.sample(n);
    auto go = grad_out.sample(n);
    for (std::size_t j = 0; j < per; ++j) gi[argmax[n * per + j]] += go[j];
  }
  return grad_in;
}

template <class Real>
Real activate(Activation kind, Real x) {
  switch (kind) {
    case Activation::linear: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > Real(0) ? x : Real(0);
    case Activation::selu:
      return x > Real(0) ? Real(kSeluLambda) * x
                         : Real(kSeluLambda * kSeluAlpha) * std::expm1(x);
    case Activation::sigmoid:
      return x >= Real(0) ? Real(1) / (Real(1) + std::exp(-x))
                          : std::exp(x) / (Real(1) + std::exp(x));
  }
  return x;
}

/// Derivative expressed through the activation output y.
template <class Real>
Real activation_derivative_from_output(Activation kind, Real y) {
  switch (kind) {
    case Activation::linear: return Real(1);
    case Activation::tanh: return Real(1) - y * y;
    case Activation::relu: return y > Real(0) ? Real(1) : Real(0);
    case Activation::selu:
      return y > Real(0) ? Real(kSeluLambda) : y + Real(kSeluLambda * kSeluAlpha);
    case Activation::sigmoid: return y * (Real(1) - y);
  }
  return Real(1);
}

template <class Real>
void activation_apply_inplace(Activation kind, Tensor4<Real>& x) {
  if (kind == Activation::linear) return;
  for (auto& v : x.data()) v = activate(kind, v);
}

template <class Real>
Tensor4<Real> activation_apply(Activation kind, Tensor4<Real> x) {
  activation_apply_inplace(kind, x);
  return x;
}

template <class Real>
void activation_backward_inplace(Activation kind, const Tensor4<Real>& output,
                                 Tensor4<Real>& grad) {
  if (kind == Activation::linear) return;
  auto& g = grad.data();
  const auto& y = output.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activation_derivative_from_output(kind, y[i]);
}

/// Input viewed as (batch, features); returns (batch, units, 1, 1).
template <class Real>
Tensor4<Real> dense_forward(const Tensor4<Real>& input, std::span<const Real> kernel,
                            std::span<const Real> bias, int units) {
  const std::size_t in = input.sample_size();
  if (kernel.size() != in * units) throw ConfigError("dense kernel does not match input width");
  Tensor4<Real> out(input.batch(), units, 1, 1);
  for (int n = 0; n < input.batch(); ++n) {
    auto x = input.sample(n);
    auto o = out.sample(n);
    for (int u = 0; u < units; ++u) {
      const Real* w = kernel.data() + static_cast<std::size_t>(u) * in;
      Real acc = bias[u];
      for (std::size_t j = 0; j < in; ++j) acc += w[j] * x[j];
      o[u] = acc;
    }
  }
  return out;
}

template <class Real>
Tensor4<Real> dense_backward(const Tensor4<Real>& input, std::span<const Real> kernel,
                             const Tensor4<Real>& grad_out, int units,
                             std::span<Real> grad_kernel, std::span<Real> grad_bias,
                             bool need_input_grad = true) {
  const std::size_t in = input.sample_size();
  Tensor4<Real> grad_in(input.batch(), input.sample_shape());
  for (int n = 0; n < input.batch(); ++n) {
    auto x = input.sample(n);
    auto go = grad_out.sample(n);
    auto gi = grad_in.sample(n);
    for (int u = 0; u < units; ++u) {
      const Real gu = go[u];
      grad_bias[u] += gu;
      Real* gw = grad_kernel.data() + static_cast<std::size_t>(u) * in;
      for (std::size_t j = 0; j < in; ++j) gw[j] += gu * x[j];
      if (need_input_grad) {
        const Real* w = kernel.data() + static_cast<std::size_t>(u) * in;
        for (std::size_t j = 0; j < in; ++j) gi[j] += gu * w[j];
      }
    }
  }
  return grad_in;
}

/// Inverted-dropout mask: kept units carry 1/(1-rate), dropped units 0.
template <class Real>
std::vector<Real> dropout_mask(std::size_t count, double rate, Rng& rng) {
  std::vector<Real> mask(count, Real(1));
  if (rate <= 0.0) return mask;
  if (rate >= 1.0) {
    std::fill(mask.begin(), mask.end(), Real(0));
    return mask;
  }
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  for (auto& m : mask) m = rng.uniform() < rate ? Real(0) : keep_scale;
  return mask;
}

inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross-entropy with predictions clipped to [eps, 1-eps].
template <class Real>
Real bce_loss(std::span<const Real> predicted, std::span<const Real> labels) {
  if (predicted.size() != labels.size())
    throw ConfigError("bce_loss: prediction/label length mismatch");
  if (predicted.empty()) return Real(0);
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = std::clamp<double>(predicted[i], kBceEpsilon, 1.0 - kBceEpsilon);
    const double y = labels[i];
    total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return static_cast<Real>(total / static_cast<double>(predicted.size()));
}

/// d(mean BCE)/dp; zero where the clip is active. `count` is the full batch size.
template <class Real>
Real bce_grad(Real p, Real y, std::size_t count) {
  const Real eps = static_cast<Real>(kBceEpsilon);
  if (p < eps || p > Real(1) - eps) return Real(0);
  return (-(y / p) + (Real(1) - y) / (Real(1) - p)) / static_cast<Real>(count);
}

/// Rescales each row (a dense unit's incoming weights) whose L2 norm exceeds c.
template <class Real>
void max_norm_apply(std::span<Real> kernel, std::size_t row_length, double c) {
  if (row_length == 0) return;
  const double tol = 64.0 * std::numeric_limits<Real>::epsilon();
  for (std::size_t start = 0; start + row_length <= kernel.size(); start += row_length) {
    double ss = 0.0;
    for (std::size_t j = 0; j < row_length; ++j) ss += double(kernel[start + j]) * kernel[start + j];
    const double norm = std::sqrt(ss);
    if (norm > c * (1.0 + tol)) {
      const double scale = c / norm;
      for (std::size_t j = 0; j < row_length; ++j)
        kernel[start + j] = static_cast<Real>(kernel[start + j] * scale);
    }
  }
}

}  // namespace grainscope::nn
