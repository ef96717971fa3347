#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "grainscope/synthgrain/geometry.hpp"

namespace grainscope::grain {

struct GrainMeasure {
  double d1 = 0;  // longer of the two orthogonal diameters
  double d2 = 0;
  double angle_deg = 0;  // direction of d1
  double size() const { return (d1 + d2) / 2; }
};

namespace detail {

// Longest interior segment of a simple polygon on the line p.n = t, where n
// is the unit normal of direction u.
inline double chord_on_line(const Polygon& poly, double ux, double uy, double t) {
  const double nx = -uy, ny = ux;
  std::vector<double> s;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const double ta = a.x * nx + a.y * ny - t, tb = b.x * nx + b.y * ny - t;
    if ((ta < 0) == (tb < 0)) continue;
    const double f = ta / (ta - tb);
    s.push_back((a.x + f * (b.x - a.x)) * ux + (a.y + f * (b.y - a.y)) * uy);
  }
  std::sort(s.begin(), s.end());
  double best = 0;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) best = std::max(best, s[i + 1] - s[i]);
  return best;
}

}  // namespace detail

/// Longest chord parallel to direction `radians`. Chord length is piecewise
/// linear between vertex offsets, so only lines through vertices (nudged to
/// either side) need checking.
inline double max_chord(const Polygon& poly, double radians) {
  const double ux = std::cos(radians), uy = std::sin(radians);
  const double nx = -uy, ny = ux;
  double lo = 1e300, hi = -1e300;
  for (const auto& p : poly) {
    const double t = p.x * nx + p.y * ny;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const double eps = 1e-11 * std::max(1.0, hi - lo);
  double best = 0;
  for (const auto& p : poly) {
    const double t = p.x * nx + p.y * ny;
    for (double d : {-eps, eps}) best = std::max(best, detail::chord_on_line(poly, ux, uy, t + d));
  }
  return best;
}

/// Orthogonal diameter pair maximizing d1 + d2 over a grid of orientations.
inline GrainMeasure measure_grain(const Polygon& poly, double step_deg = 1.0) {
  if (poly.size() < 3) throw DataError("grain polygon needs at least 3 vertices");
  for (const auto& p : poly)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("grain polygon has non-finite vertex");
  double extent = 0;
  for (const auto& p : poly) extent = std::max({extent, std::abs(p.x - poly[0].x), std::abs(p.y - poly[0].y)});
  if (std::abs(signed_area(poly)) <= 1e-12 * std::max(1.0, extent * extent))
    throw DataError("degenerate grain polygon (zero area)");
  if (!(step_deg > 0 && step_deg <= 90)) throw DataError("angular step must be in (0, 90]");

  const double deg = std::numbers::pi / 180;
  GrainMeasure best;
  double best_sum = -1;
  const int steps = static_cast<int>(std::ceil(90.0 / step_deg - 1e-9));
  for (int i = 0; i < steps; ++i) {
    const double a = i * step_deg;
    const double p = max_chord(poly, a * deg), q = max_chord(poly, (a + 90) * deg);
    if (p + q > best_sum) {
      best_sum = p + q;
      best = p >= q ? GrainMeasure{p, q, a} : GrainMeasure{q, p, a + 90};
    }
  }
  return best;
}

inline double mean_grain_size(const std::vector<Polygon>& cells, double step_deg = 1.0) {
  if (cells.empty()) throw DataError("no grains to measure");
  double s = 0;
  for (const auto& c : cells) s += measure_grain(c, step_deg).size();
  return s / static_cast<double>(cells.size());
}

}  // namespace grainscope::grain
