#pragma once

// Executes a ModelSpec: batched forward passes with cached activations and
// exact reverse-mode gradients of mean BCE plus kernel L1/L2 penalties.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/common/parallel.hpp"
#include "grainscope/common/rng.hpp"
#include "grainscope/nn/layers.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/nn/tensor.hpp"
#include "grainscope/nn/weights.hpp"

namespace grainscope::nn {

enum class Mode { inference, training };

/// Per-layer dropout masks for one batch (empty vectors for other layers).
template <class Real>
struct DropoutMasks {
  std::vector<std::vector<Real>> per_layer;
};

template <class Real>
struct ForwardTrace {
  Tensor4<Real> input;
  std::vector<Tensor4<Real>> outputs;
  std::vector<std::vector<std::int32_t>> argmax;
  DropoutMasks<Real> masks;
};

template <class Real>
struct BatchGradients {
  Weights<Real> grads;
  double data_loss = 0.0;  // mean BCE over the batch
  double penalty = 0.0;
  std::size_t correct = 0;  // threshold 0.5, ties count as good (label 1)
};

template <class Real>
class Network {
 public:
  explicit Network(ModelSpec spec) : spec_(std::move(spec)), shapes_(spec_.shapes()) {}

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<Shape3>& shapes() const noexcept { return shapes_; }
  Shape3 input_shape(std::size_t i) const { return i == 0 ? spec_.input : shapes_[i - 1]; }

  /// Draws a fresh set of masks for a batch of `batch` samples.
  DropoutMasks<Real> draw_masks(int batch, Rng& rng) const {
    DropoutMasks<Real> m;
    m.per_layer.resize(spec_.layers.size());
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const auto& l = spec_.layers[i];
      if (l.kind == LayerKind::dropout && l.drop_rate > 0.0)
        m.per_layer[i] =
            dropout_mask<Real>(static_cast<std::size_t>(batch) * shapes_[i].size(), l.drop_rate, rng);
    }
    return m;
  }

  /// In training mode dropout uses `masks`; layers without a mask pass through.
  Tensor4<Real> forward(const Weights<Real>& w, const Tensor4<Real>& x, Mode mode,
                        const DropoutMasks<Real>* masks = nullptr,
                        ForwardTrace<Real>* trace = nullptr) const {
    if (x.sample_shape() != spec_.input)
      throw ConfigError("input shape " + x.sample_shape().str() + " does not match model input " +
                        spec_.input.str());
    if (!w.matches(spec_)) throw ConfigError("weights do not match model spec");
    if (trace) {
      trace->input = x;
      trace->outputs.assign(spec_.layers.size(), {});
      trace->argmax.assign(spec_.layers.size(), {});
      trace->masks.per_layer.assign(spec_.layers.size(), {});
    }
    Tensor4<Real> cur = x;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const auto& l = spec_.layers[i];
      const auto& p = w.layers[i];
      switch (l.kind) {
        case LayerKind::conv2d:
          cur = conv2d_forward<Real>(cur, p.kernel, p.bias, l.filters, l.kernel, l.stride,
                                     l.padding);
          activation_apply_inplace(l.activation, cur);
          break;
        case LayerKind::maxpool2:
          cur = maxpool2_forward(cur, trace ? &trace->argmax[i] : nullptr);
          break;
        case LayerKind::dropout:
          if (mode == Mode::training && masks && i < masks->per_layer.size() &&
              !masks->per_layer[i].empty()) {
            const auto& m = masks->per_layer[i];
            if (m.size() != cur.size()) throw ConfigError("dropout mask size mismatch");
            for (std::size_t j = 0; j < m.size(); ++j) cur.data()[j] *= m[j];
            if (trace) trace->masks.per_layer[i] = m;
          }
          break;
        case LayerKind::flatten:
          cur.reshape(shapes_[i]);
          break;
        case LayerKind::dense:
          cur = dense_forward<Real>(cur, p.kernel, p.bias, l.units);
          activation_apply_inplace(l.activation, cur);
          break;
        case LayerKind::activation:
          activation_apply_inplace(l.activation, cur);
          break;
      }
      if (trace) trace->outputs[i] = cur;
    }
    return cur;
  }

  std::vector<Real> predict(const Weights<Real>& w, const Tensor4<Real>& x) const {
    return forward(w, x, Mode::inference).data();
  }

  /// Gradients of the data term given dL/d(output). Layers below
  /// `lowest_trainable` are not visited.
  Weights<Real> backward(const Weights<Real>& w, const ForwardTrace<Real>& trace,
                         Tensor4<Real> grad, std::size_t lowest_trainable = 0) const {
    Weights<Real> g = Weights<Real>::zeros_like(w);
    for (std::size_t ii = spec_.layers.size(); ii-- > lowest_trainable;) {
      const auto& l = spec_.layers[ii];
      const Tensor4<Real>& in = ii == 0 ? trace.input : trace.outputs[ii - 1];
      const bool need_input = ii > lowest_trainable;
      switch (l.kind) {
        case LayerKind::conv2d:
          activation_backward_inplace(l.activation, trace.outputs[ii], grad);
          grad = conv2d_backward<Real>(in, w.layers[ii].kernel, grad, l.filters, l.kernel,
                                       l.stride, l.padding, g.layers[ii].kernel,
                                       g.layers[ii].bias, need_input);
          break;
        case LayerKind::maxpool2:
          grad = maxpool2_backward(grad, trace.argmax[ii], in.sample_shape());
          break;
        case LayerKind::dropout: {
          const auto& m = trace.masks.per_layer[ii];
          if (!m.empty())
            for (std::size_t j = 0; j < m.size(); ++j) grad.data()[j] *= m[j];
          break;
        }
        case LayerKind::flatten:
          grad.reshape(in.sample_shape());
          break;
        case LayerKind::dense:
          activation_backward_inplace(l.activation, trace.outputs[ii], grad);
          grad = dense_backward<Real>(in, w.layers[ii].kernel, grad, l.units, g.layers[ii].kernel,
                                      g.layers[ii].bias, need_input);
          break;
        case LayerKind::activation:
          activation_backward_inplace(l.activation, trace.outputs[ii], grad);
          break;
      }
    }
    return g;
  }

  double penalty(const Weights<Real>& w) const {
    double total = 0.0;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const auto& l = spec_.layers[i];
      if (!l.has_params() || (l.l1 == 0.0 && l.l2 == 0.0)) continue;
      double a = 0.0, s = 0.0;
      for (Real v : w.layers[i].kernel) {
        a += std::abs(double(v));
        s += double(v) * v;
      }
      total += l.l1 * a + l.l2 * s;
    }
    return total;
  }

  /// Adds d(penalty)/dw: l1*sign(w) (0 at 0) + 2*l2*w.
  void add_penalty_gradient(const Weights<Real>& w, Weights<Real>& g) const {
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const auto& l = spec_.layers[i];
      if (!l.has_params() || (l.l1 == 0.0 && l.l2 == 0.0)) continue;
      const auto& k = w.layers[i].kernel;
      auto& gk = g.layers[i].kernel;
      for (std::size_t j = 0; j < k.size(); ++j) {
        const Real v = k[j];
        const Real sign = v > Real(0) ? Real(1) : (v < Real(0) ? Real(-1) : Real(0));
        gk[j] += static_cast<Real>(l.l1) * sign + static_cast<Real>(2.0 * l.l2) * v;
      }
    }
  }

  /// Throws TrainingFault naming the first layer with a non-finite gradient.
  void check_finite(const Weights<Real>& g) const {
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      for (Real v : g.layers[i].kernel)
        if (!std::isfinite(v))
          throw TrainingFault("non-finite gradient in layer " + std::to_string(i) + " (" +
                                  spec_.label(i) + ")",
                              static_cast<int>(i));
      for (Real v : g.layers[i].bias)
        if (!std::isfinite(v))
          throw TrainingFault("non-finite gradient in layer " + std::to_string(i) + " (" +
                                  spec_.label(i) + ")",
                              static_cast<int>(i));
    }
  }

  /// Loss and gradients of mean BCE + penalty for one (sub)batch with the
  /// given masks. `count` is the size of the whole batch the mean runs over.
  BatchGradients<Real> loss_and_gradients(const Weights<Real>& w, const Tensor4<Real>& x,
                                          std::span<const Real> labels,
                                          const DropoutMasks<Real>* masks, std::size_t count,
                                          std::size_t lowest_trainable = 0) const {
    ForwardTrace<Real> trace;
    const Tensor4<Real> out = forward(w, x, Mode::training, masks, &trace);
    if (out.sample_size() != 1) throw ConfigError("model output must be a single unit");
    if (labels.size() != static_cast<std::size_t>(x.batch()))
      throw ConfigError("label count does not match batch");
    BatchGradients<Real> r;
    Tensor4<Real> grad(out.batch(), out.sample_shape());
    double loss_sum = 0.0;
    for (int n = 0; n < out.batch(); ++n) {
      const Real p = out.data()[n];
      const Real y = labels[n];
      const double pc = std::clamp<double>(p, kBceEpsilon, 1.0 - kBceEpsilon);
      loss_sum += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
      grad.data()[n] = bce_grad(p, y, count);
      const bool predicted_good = p >= Real(0.5);
      if (predicted_good == (y >= Real(0.5))) ++r.correct;
    }
    r.data_loss = loss_sum / static_cast<double>(count);
    r.grads = backward(w, trace, std::move(grad), lowest_trainable);
    return r;
  }

 private:
  ModelSpec spec_;
  std::vector<Shape3> shapes_;
};

/// Copies samples [begin, end) of `x` into a new tensor.
template <class Real>
Tensor4<Real> slice_batch(const Tensor4<Real>& x, int begin, int end) {
  Tensor4<Real> out(end - begin, x.sample_shape());
  for (int n = begin; n < end; ++n) {
    auto s = x.sample(n);
    std::copy(s.begin(), s.end(), out.sample(n - begin).begin());
  }
  return out;
}

inline constexpr int kGradientChunk = 16;

/// One training step's gradients, computed over fixed-size chunks whose
/// masks derive from (step_seed, chunk index) and whose partial sums are
/// reduced in chunk order, so the result does not depend on `threads`.
template <class Real>
BatchGradients<Real> batch_gradients(const Network<Real>& net, const Weights<Real>& w,
                                     const Tensor4<Real>& x, std::type_identity_t<std::span<const Real>> labels,
                                     std::uint64_t step_seed, unsigned threads = 1,
                                     std::size_t lowest_trainable = 0) {
  const int n = x.batch();
  const int chunks = (n + kGradientChunk - 1) / kGradientChunk;
  std::vector<BatchGradients<Real>> parts(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    const int b = static_cast<int>(c) * kGradientChunk;
    const int e = std::min(n, b + kGradientChunk);
    Tensor4<Real> xc = slice_batch(x, b, e);
    Rng rng(derive_seed({step_seed, c}));
    auto masks = net.draw_masks(e - b, rng);
    parts[c] = net.loss_and_gradients(w, xc, labels.subspan(b, e - b), &masks,
                                      static_cast<std::size_t>(n), lowest_trainable);
  });
  BatchGradients<Real> total;
  total.grads = Weights<Real>::zeros_like(w);
  for (auto& p : parts) {
    total.grads.add(p.grads);
    total.data_loss += p.data_loss;
    total.correct += p.correct;
  }
  total.penalty = net.penalty(w);
  net.add_penalty_gradient(w, total.grads);
  net.check_finite(total.grads);
  return total;
}

/// Probabilities for a dataset in inference mode, evaluated in chunks.
template <class Real>
std::vector<Real> predict_batched(const Network<Real>& net, const Weights<Real>& w,
                                  const Tensor4<Real>& x, unsigned threads = 1) {
  const int n = x.batch();
  std::vector<Real> out(static_cast<std::size_t>(n));
  const int chunk = 32;
  const int chunks = (n + chunk - 1) / chunk;
  parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    const int b = static_cast<int>(c) * chunk;
    const int e = std::min(n, b + chunk);
    const auto p = net.predict(w, slice_batch(x, b, e));
    std::copy(p.begin(), p.end(), out.begin() + b);
  });
  return out;
}

}  // namespace grainscope::nn
