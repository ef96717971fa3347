#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"

namespace grainscope::img {

/// Interleaved 8-bit raster with 1 (gray) or 3 (RGB) channels.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c = 3, std::uint8_t fill = 0) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1) throw DataError("raster dimensions must be positive");
    if (c != 1 && c != 3) throw DataError("raster must have 1 or 3 channels");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return data.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Raster&) const = default;
};

/// Row-major tile grid cut from a centered crop of a source raster.
struct TileGrid {
  std::string source;
  int rows = 0;
  int cols = 0;
  int tile_w = 0;
  int tile_h = 0;
  int offset_x = 0;  // crop origin in the source
  int offset_y = 0;
  std::vector<Raster> tiles;

  const Raster& tile(int r, int c) const { return tiles[static_cast<std::size_t>(r) * cols + c]; }
  Raster& tile(int r, int c) { return tiles[static_cast<std::size_t>(r) * cols + c]; }
};

inline Raster crop(const Raster& r, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > r.width || y0 + h > r.height)
    throw DataError("crop window outside raster");
  Raster out(w, h, r.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * r.channels;
  for (int y = 0; y < h; ++y) {
    const auto* src = &r.data[(static_cast<std::size_t>(y0 + y) * r.width + x0) * r.channels];
    std::copy(src, src + row_bytes, &out.data[static_cast<std::size_t>(y) * row_bytes]);
  }
  return out;
}

inline void paste(Raster& dst, const Raster& src, int x0, int y0) {
  if (src.channels != dst.channels) throw DataError("paste channel mismatch");
  if (x0 < 0 || y0 < 0 || x0 + src.width > dst.width || y0 + src.height > dst.height)
    throw DataError("paste window outside raster");
  const std::size_t row_bytes = static_cast<std::size_t>(src.width) * src.channels;
  for (int y = 0; y < src.height; ++y)
    std::copy(&src.data[y * row_bytes], &src.data[y * row_bytes] + row_bytes,
              &dst.data[(static_cast<std::size_t>(y0 + y) * dst.width + x0) * dst.channels]);
}

inline Raster to_rgb(const Raster& r) {
  if (r.channels == 3) return r;
  Raster out(r.width, r.height, 3);
  for (std::size_t i = 0; i < r.pixels(); ++i)
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = r.data[i];
  return out;
}

/// First channel only; callers should pass gray or replicated-gray rasters.
inline Raster first_channel(const Raster& r) {
  if (r.channels == 1) return r;
  Raster out(r.width, r.height, 1);
  for (std::size_t i = 0; i < r.pixels(); ++i) out.data[i] = r.data[i * r.channels];
  return out;
}

}  // namespace grainscope::img
