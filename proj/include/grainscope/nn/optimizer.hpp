#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/nn/layers.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/nn/weights.hpp"

namespace grainscope::nn {

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Moment estimates; `u` holds the second moment (Adam, Nadam) or the
/// exponentially weighted infinity norm (Adamax).
template <class Real>
struct OptimizerState {
  Weights<Real> m;
  Weights<Real> u;
  long step = 0;

  static OptimizerState for_weights(const Weights<Real>& w) {
    return {Weights<Real>::zeros_like(w), Weights<Real>::zeros_like(w), 0};
  }
};

namespace detail {

template <class Real>
void update_array(const OptimizerConfig& c, long t, std::vector<Real>& p,
                  const std::vector<Real>& g, std::vector<Real>& m, std::vector<Real>& u) {
  const double b1 = c.beta1, b2 = c.beta2;
  const double b1t = std::pow(b1, double(t));
  const double b2t = std::pow(b2, double(t));
  switch (c.kind) {
    case OptimizerKind::adam: {
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = Real(b1 * m[j] + (1.0 - b1) * g[j]);
        u[j] = Real(b2 * u[j] + (1.0 - b2) * double(g[j]) * g[j]);
        const double m_hat = m[j] / (1.0 - b1t);
        const double v_hat = u[j] / (1.0 - b2t);
        p[j] = Real(p[j] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
      }
      break;
    }
    case OptimizerKind::adamax: {
      const double lr_t = c.learning_rate / (1.0 - b1t);
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = Real(b1 * m[j] + (1.0 - b1) * g[j]);
        u[j] = Real(std::max(b2 * u[j], std::abs(double(g[j]))));
        p[j] = Real(p[j] - lr_t * m[j] / (u[j] + c.epsilon));
      }
      break;
    }
    case OptimizerKind::nadam: {
      const double b1t1 = b1t * b1;
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = Real(b1 * m[j] + (1.0 - b1) * g[j]);
        u[j] = Real(b2 * u[j] + (1.0 - b2) * double(g[j]) * g[j]);
        const double m_hat = b1 * m[j] / (1.0 - b1t1) + (1.0 - b1) * g[j] / (1.0 - b1t);
        const double v_hat = u[j] / (1.0 - b2t);
        p[j] = Real(p[j] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
      }
      break;
    }
  }
}

}  // namespace detail

/// Applies max-norm constraints declared in the spec.
template <class Real>
void apply_constraints(const ModelSpec& spec, Weights<Real>& w) {
  const auto shapes = spec.shapes();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.max_norm || l.kind != LayerKind::dense) continue;
    const Shape3 in = i == 0 ? spec.input : shapes[i - 1];
    max_norm_apply<Real>(w.layers[i].kernel, in.size(), *l.max_norm);
  }
}

/// One optimizer step over layers whose `trainable` flag is set (all when
/// empty), followed by the spec's constraints.
template <class Real>
void optimizer_step(const OptimizerConfig& c, const ModelSpec& spec, Weights<Real>& w,
                    const Weights<Real>& g, OptimizerState<Real>& s,
                    const std::vector<bool>& trainable = {}) {
  if (!trainable.empty() && trainable.size() != w.layers.size())
    throw ConfigError("trainable mask length does not match layer count");
  if (s.m.layers.size() != w.layers.size()) s = OptimizerState<Real>::for_weights(w);
  ++s.step;
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    if (!trainable.empty() && !trainable[i]) continue;
    detail::update_array(c, s.step, w.layers[i].kernel, g.layers[i].kernel, s.m.layers[i].kernel,
                         s.u.layers[i].kernel);
    detail::update_array(c, s.step, w.layers[i].bias, g.layers[i].bias, s.m.layers[i].bias,
                         s.u.layers[i].bias);
  }
  apply_constraints(spec, w);
}

}  // namespace grainscope::nn
