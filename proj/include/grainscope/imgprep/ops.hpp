#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "grainscope/imgprep/raster.hpp"

namespace grainscope::img {

inline constexpr double kLumaR = 0.2125;
inline constexpr double kLumaG = 0.7154;
inline constexpr double kLumaB = 0.0721;

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline double luma(double r, double g, double b) { return kLumaR * r + kLumaG * g + kLumaB * b; }

/// Tiles are cut from the centered crop so the remainder is split between
/// opposite edges; the odd pixel goes to the right/bottom margin.
struct GridDims {
  int rows, cols, offset_x, offset_y;
};

inline GridDims grid_dims(int width, int height, int tile_w, int tile_h) {
  if (tile_w < 1 || tile_h < 1) throw DataError("tile dimensions must be positive");
  if (tile_w > width || tile_h > height)
    throw DataError("tile " + std::to_string(tile_w) + "x" + std::to_string(tile_h) + " larger than raster " +
                    std::to_string(width) + "x" + std::to_string(height));
  const int cols = width / tile_w, rows = height / tile_h;
  return {rows, cols, (width - cols * tile_w) / 2, (height - rows * tile_h) / 2};
}

inline TileGrid slice_raster(const Raster& r, int tile_w, int tile_h, std::string source = {}) {
  const auto dims = grid_dims(r.width, r.height, tile_w, tile_h);
  TileGrid g;
  g.source = std::move(source);
  g.cols = dims.cols;
  g.rows = dims.rows;
  g.tile_w = tile_w;
  g.tile_h = tile_h;
  g.offset_x = dims.offset_x;
  g.offset_y = dims.offset_y;
  g.tiles.reserve(static_cast<std::size_t>(g.rows) * g.cols);
  for (int row = 0; row < g.rows; ++row)
    for (int col = 0; col < g.cols; ++col)
      g.tiles.push_back(crop(r, g.offset_x + col * tile_w, g.offset_y + row * tile_h, tile_w, tile_h));
  return g;
}

/// Single-channel luma of an RGB raster; gray input is returned as is.
inline Raster to_gray(const Raster& r) {
  if (r.channels == 1) return r;
  Raster out(r.width, r.height, 1);
  for (std::size_t i = 0; i < r.pixels(); ++i)
    out.data[i] = clamp_u8(luma(r.data[3 * i], r.data[3 * i + 1], r.data[3 * i + 2]));
  return out;
}

/// Luma replicated to three channels to keep the network's input depth.
inline Raster grayscale_rgb_weighted(const Raster& r) { return to_rgb(to_gray(r)); }

inline std::array<std::size_t, 256> histogram(const Raster& gray) {
  std::array<std::size_t, 256> h{};
  for (std::size_t i = 0; i < gray.pixels(); ++i) ++h[gray.data[i * gray.channels]];
  return h;
}

/// CDF lookup table with the lowest occupied level pinned to 0. A constant
/// image maps to itself.
inline std::array<std::uint8_t, 256> equalize_lut(const std::array<std::size_t, 256>& h) {
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
  std::size_t total = 0;
  for (auto c : h) total += c;
  int lo = 0;
  while (lo < 256 && h[lo] == 0) ++lo;
  if (lo == 256 || h[lo] == total) return lut;
  const double scale = 255.0 / static_cast<double>(total - h[lo]);
  std::size_t sum = 0;
  for (int i = 0; i < 256; ++i) {
    if (i > lo) sum += h[i];
    lut[i] = i <= lo ? 0 : clamp_u8(static_cast<double>(sum) * scale);
  }
  return lut;
}

/// Equalizes the first channel and writes the result into every channel.
inline Raster hist_equalize(const Raster& gray) {
  const auto lut = equalize_lut(histogram(gray));
  Raster out = gray;
  for (std::size_t i = 0; i < gray.pixels(); ++i) {
    const auto v = lut[gray.data[i * gray.channels]];
    for (int c = 0; c < gray.channels; ++c) out.data[i * gray.channels + c] = v;
  }
  return out;
}

/// Bilinear with half-pixel centers and edge clamping, independently per axis.
inline Raster resize_bilinear(const Raster& r, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw DataError("resize target must be positive");
  if (out_w == r.width && out_h == r.height) return r;
  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double s = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(s);
      t[o] = {i0, std::min(i0 + 1, in - 1), s - i0};
    }
    return t;
  };
  const auto tx = taps(r.width, out_w);
  const auto ty = taps(r.height, out_h);
  Raster out(out_w, out_h, r.channels);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      for (int c = 0; c < r.channels; ++c) {
        const double top = r.at(tx[x].i0, ty[y].i0, c) * (1 - tx[x].f) + r.at(tx[x].i1, ty[y].i0, c) * tx[x].f;
        const double bot = r.at(tx[x].i0, ty[y].i1, c) * (1 - tx[x].f) + r.at(tx[x].i1, ty[y].i1, c) * tx[x].f;
        out.at(x, y, c) = clamp_u8(top * (1 - ty[y].f) + bot * ty[y].f);
      }
  return out;
}

inline constexpr std::uint8_t kNearBlack = 10;
inline constexpr double kDefaultBlackFraction = 0.05;

inline double near_black_fraction(const Raster& r, std::uint8_t level = kNearBlack) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.pixels(); ++i) {
    const double v = r.channels == 1 ? r.data[i]
                                     : luma(r.data[3 * i], r.data[3 * i + 1], r.data[3 * i + 2]);
    n += v < level;
  }
  return static_cast<double>(n) / static_cast<double>(r.pixels());
}

struct DiscardEntry {
  std::size_t index;
  double black_fraction;
};

struct DiscardResult {
  std::vector<std::size_t> kept;
  std::vector<DiscardEntry> discarded;
};

/// A tile goes when its near-black fraction exceeds the threshold; a fully
/// black tile goes even at threshold 1.
inline DiscardResult discard_boundary(const std::vector<Raster>& tiles,
                                      double threshold = kDefaultBlackFraction) {
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("black fraction threshold must be in (0, 1]");
  DiscardResult out;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const double f = near_black_fraction(tiles[i]);
    if (f > threshold || f >= 1.0)
      out.discarded.push_back({i, f});
    else
      out.kept.push_back(i);
  }
  return out;
}

}  // namespace grainscope::img
