#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "grainscope/imgprep/ops.hpp"

namespace grainscope::ensemble {

/// Tint strength for a tile; `gamma` 1 is linear in 1 - p_good.
inline double tint_strength(double p_good, double gamma = 1.0) {
  if (!(p_good >= 0 && p_good <= 1)) throw ConfigError("p_good must be in [0, 1]");
  if (!(gamma > 0)) throw ConfigError("tint gamma must be positive");
  return gamma == 1.0 ? 1.0 - p_good : std::pow(1.0 - p_good, gamma);
}

/// Most saturated in-gamut red with the same luma as (r, g, b). Its red
/// channel is the largest any color of that luma can have.
inline std::array<double, 3> red_at_luma(double r, double g, double b) {
  const double L = img::luma(r, g, b);
  const double k = std::min(L / img::kLumaR, (255.0 - L) / (1.0 - img::kLumaR));
  return {L + k * (1.0 - img::kLumaR), L - k * img::kLumaR, L - k * img::kLumaR};
}

/// Unrounded tinted pixel: chroma blended toward red by s, luma kept.
inline std::array<double, 3> tint_pixel(double r, double g, double b, double s) {
  const auto t = red_at_luma(r, g, b);
  return {r + s * (t[0] - r), g + s * (t[1] - g), b + s * (t[2] - b)};
}

/// Tints an RGB (or gray, replicated) tile by strength s = 1 - p_good.
inline img::Raster tint_tile(const img::Raster& tile, double p_good, double gamma = 1.0) {
  const double s = tint_strength(p_good, gamma);
  img::Raster rgb = img::to_rgb(tile);
  if (s == 0) return rgb;
  for (std::size_t i = 0; i < rgb.pixels(); ++i) {
    auto* px = &rgb.data[3 * i];
    const auto t = tint_pixel(px[0], px[1], px[2], s);
    for (int c = 0; c < 3; ++c) px[c] = img::clamp_u8(t[c]);
  }
  return rgb;
}

}  // namespace grainscope::ensemble
