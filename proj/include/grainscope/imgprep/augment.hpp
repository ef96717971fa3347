#pragma once

#include <cmath>
#include <numbers>

#include "grainscope/common/rng.hpp"
#include "grainscope/imgprep/ops.hpp"

namespace grainscope::img {

/// Sampling ranges for random affine augmentation. There is deliberately no
/// zoom range; displaced regions always wrap around.
struct AugmentParams {
  double rotation_deg = 20;
  double shift_frac = 0.1;
  double shear_deg = 10;
  bool hflip = true;
  bool vflip = true;

  void validate() const {
    if (rotation_deg < 0 || shift_frac < 0 || shift_frac > 1 || shear_deg < 0 || shear_deg >= 90)
      throw ConfigError("augment ranges out of bounds");
  }
};

/// Forward map about the tile center: out = A (in - c) + c + t.
struct Affine {
  double a = 1, b = 0, c = 0, d = 1;
  double tx = 0, ty = 0;
  bool hflip = false, vflip = false;

  static Affine shift(double dx, double dy) {
    Affine m;
    m.tx = dx;
    m.ty = dy;
    return m;
  }

  bool is_identity() const {
    return a == 1 && b == 0 && c == 0 && d == 1 && tx == 0 && ty == 0 && !hflip && !vflip;
  }
};

inline Affine sample_affine(const AugmentParams& p, int width, int height, Rng& rng) {
  p.validate();
  const double deg = std::numbers::pi / 180;
  const double theta = rng.uniform(-p.rotation_deg, p.rotation_deg) * deg;
  const double shear = rng.uniform(-p.shear_deg, p.shear_deg) * deg;
  const double dx = rng.uniform(-p.shift_frac, p.shift_frac) * width;
  const double dy = rng.uniform(-p.shift_frac, p.shift_frac) * height;
  Affine m;
  // rotation composed with a shear along x
  m.a = std::cos(theta);
  m.b = -std::sin(theta + shear);
  m.c = std::sin(theta);
  m.d = std::cos(theta + shear);
  m.tx = dx;
  m.ty = dy;
  m.hflip = p.hflip && rng.uniform() < 0.5;
  m.vflip = p.vflip && rng.uniform() < 0.5;
  return m;
}

inline int wrap_index(long i, int n) {
  long r = i % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

inline Raster apply_affine(const Raster& src, const Affine& m) {
  if (m.is_identity()) return src;
  const int w = src.width, h = src.height;
  const double det = m.a * m.d - m.b * m.c;
  if (std::abs(det) < 1e-12) throw DataError("singular augmentation transform");
  const double ia = m.d / det, ib = -m.b / det, ic = -m.c / det, id = m.a / det;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  Raster out(w, h, src.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ox = x - cx - m.tx, oy = y - cy - m.ty;
      const double sx = ia * ox + ib * oy + cx;
      const double sy = ic * ox + id * oy + cy;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const double fx = sx - fx0, fy = sy - fy0;
      const int x0 = wrap_index(static_cast<long>(fx0), w), x1 = wrap_index(static_cast<long>(fx0) + 1, w);
      const int y0 = wrap_index(static_cast<long>(fy0), h), y1 = wrap_index(static_cast<long>(fy0) + 1, h);
      const int dx = m.hflip ? w - 1 - x : x;
      const int dy = m.vflip ? h - 1 - y : y;
      for (int ch = 0; ch < src.channels; ++ch) {
        double v;
        if (fx < 1e-9 && fy < 1e-9) {
          v = src.at(x0, y0, ch);  // exact for integer displacements
        } else {
          const double top = src.at(x0, y0, ch) * (1 - fx) + src.at(x1, y0, ch) * fx;
          const double bot = src.at(x0, y1, ch) * (1 - fx) + src.at(x1, y1, ch) * fx;
          v = top * (1 - fy) + bot * fy;
        }
        out.at(dx, dy, ch) = clamp_u8(v);
      }
    }
  return out;
}

inline Raster flip_horizontal(const Raster& r) {
  Affine m;
  m.hflip = true;
  return apply_affine(r, m);
}

inline Raster augment(const Raster& tile, const AugmentParams& p, Rng& rng) {
  return apply_affine(tile, sample_affine(p, tile.width, tile.height, rng));
}

}  // namespace grainscope::img
