#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "grainscope/common/rng.hpp"
#include "grainscope/nn/model_spec.hpp"

namespace grainscope::nn {

template <class Real>
struct LayerParams {
  std::vector<Real> kernel;
  std::vector<Real> bias;
  std::size_t size() const noexcept { return kernel.size() + bias.size(); }
};

/// Trainable arrays keyed by layer index; parameterless layers hold empty arrays.
template <class Real>
struct Weights {
  std::vector<LayerParams<Real>> layers;

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
  }

  /// Zero-filled arrays shaped like `spec`.
  static Weights zeros(const ModelSpec& spec) {
    Weights w;
    const auto shapes = spec.shapes();
    w.layers.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      w.layers[i].kernel.assign(spec.kernel_size(i, shapes), Real(0));
      w.layers[i].bias.assign(spec.bias_size(i), Real(0));
    }
    return w;
  }

  static Weights zeros_like(const Weights& other) {
    Weights w;
    w.layers.resize(other.layers.size());
    for (std::size_t i = 0; i < other.layers.size(); ++i) {
      w.layers[i].kernel.assign(other.layers[i].kernel.size(), Real(0));
      w.layers[i].bias.assign(other.layers[i].bias.size(), Real(0));
    }
    return w;
  }

  bool matches(const ModelSpec& spec) const {
    if (layers.size() != spec.layers.size()) return false;
    const auto shapes = spec.shapes();
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].kernel.size() != spec.kernel_size(i, shapes) ||
          layers[i].bias.size() != spec.bias_size(i))
        return false;
    return true;
  }

  void add(const Weights& other) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t j = 0; j < layers[i].kernel.size(); ++j)
        layers[i].kernel[j] += other.layers[i].kernel[j];
      for (std::size_t j = 0; j < layers[i].bias.size(); ++j)
        layers[i].bias[j] += other.layers[i].bias[j];
    }
  }

  template <class Other>
  Weights<Other> cast() const {
    Weights<Other> w;
    w.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      w.layers[i].kernel.assign(layers[i].kernel.begin(), layers[i].kernel.end());
      w.layers[i].bias.assign(layers[i].bias.begin(), layers[i].bias.end());
    }
    return w;
  }

  friend bool operator==(const Weights& a, const Weights& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
      if (a.layers[i].kernel != b.layers[i].kernel || a.layers[i].bias != b.layers[i].bias)
        return false;
    return true;
  }
};

/// Glorot-uniform kernels, zero biases.
template <class Real>
Weights<Real> init_weights(const ModelSpec& spec, std::uint64_t seed) {
  Weights<Real> w = Weights<Real>::zeros(spec);
  const auto shapes = spec.shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.has_params()) continue;
    const Shape3 in = i == 0 ? spec.input : shapes[i - 1];
    double fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::conv2d) {
      fan_in = static_cast<double>(in.channels) * l.kernel * l.kernel;
      fan_out = static_cast<double>(l.filters) * l.kernel * l.kernel;
    } else {
      fan_in = static_cast<double>(in.size());
      fan_out = l.units;
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(derive_seed({seed, i}));
    for (auto& v : w.layers[i].kernel) v = static_cast<Real>(rng.uniform(-limit, limit));
  }
  return w;
}

}  // namespace grainscope::nn
