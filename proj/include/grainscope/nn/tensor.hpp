#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"

namespace grainscope::nn {

/// Per-sample feature shape (channels, height, width).
struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * height * width;
  }
  friend bool operator==(const Shape3&, const Shape3&) = default;
  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
};

/// Dense NCHW batch tensor. Dense layers use height = width = 1.
template <class Real>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int batch, Shape3 s, Real fill = Real(0))
      : batch_(batch), shape_(s), data_(static_cast<std::size_t>(batch) * s.size(), fill) {
    if (batch < 0 || s.channels < 0 || s.height < 0 || s.width < 0)
      throw ConfigError("negative tensor dimension");
  }
  Tensor4(int batch, int c, int h, int w, Real fill = Real(0))
      : Tensor4(batch, Shape3{c, h, w}, fill) {}

  int batch() const noexcept { return batch_; }
  int channels() const noexcept { return shape_.channels; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  const Shape3& sample_shape() const noexcept { return shape_; }
  std::size_t sample_size() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  Real& at(int n, int c, int y, int x) noexcept { return data_[index(n, c, y, x)]; }
  Real at(int n, int c, int y, int x) const noexcept { return data_[index(n, c, y, x)]; }

  std::span<Real> sample(int n) noexcept {
    return {data_.data() + static_cast<std::size_t>(n) * sample_size(), sample_size()};
  }
  std::span<const Real> sample(int n) const noexcept {
    return {data_.data() + static_cast<std::size_t>(n) * sample_size(), sample_size()};
  }

  std::vector<Real>& data() noexcept { return data_; }
  const std::vector<Real>& data() const noexcept { return data_; }

  /// Same data viewed as (batch, size, 1, 1).
  Tensor4 flattened() const {
    Tensor4 t = *this;
    t.shape_ = Shape3{static_cast<int>(sample_size()), 1, 1};
    return t;
  }
  void reshape(Shape3 s) {
    if (s.size() != shape_.size()) throw ConfigError("reshape changes element count");
    shape_ = s;
  }

  bool all_finite() const noexcept {
    for (Real v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t index(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.channels + c) * shape_.height + y) *
               shape_.width +
           x;
  }

  int batch_ = 0;
  Shape3 shape_{};
  std::vector<Real> data_;
};

}  // namespace grainscope::nn
