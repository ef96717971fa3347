#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "grainscope/common/error.hpp"

namespace grainscope::grain {

struct Point {
  double x = 0, y = 0;
};

using Polygon = std::vector<Point>;

inline double signed_area(const Polygon& p) {
  double a = 0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % n];
    a += u.x * v.y - v.x * u.y;
  }
  return a / 2;
}

inline Polygon rectangle(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline Polygon regular_polygon(double cx, double cy, double r, int n) {
  Polygon p(n);
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    p[i] = {cx + r * std::cos(a), cy + r * std::sin(a)};
  }
  return p;
}

inline Polygon rotated(const Polygon& p, double radians, Point about = {}) {
  const double c = std::cos(radians), s = std::sin(radians);
  Polygon out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dx = p[i].x - about.x, dy = p[i].y - about.y;
    out[i] = {about.x + c * dx - s * dy, about.y + s * dx + c * dy};
  }
  return out;
}

/// Keeps the part of a convex polygon where a*x + b*y <= c.
inline Polygon clip_half_plane(const Polygon& poly, double a, double b, double c) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double fp = a * p.x + b * p.y - c;
    const double fq = a * q.x + b * q.y - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
      const double t = fp / (fp - fq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

/// Voronoi cells of `sites` clipped to [0,w]x[0,h], one per site, by
/// successive bisector clipping.
inline std::vector<Polygon> voronoi_cells(const std::vector<Point>& sites, double w, double h) {
  std::vector<Polygon> cells(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    Polygon cell = rectangle(0, 0, w, h);
    const Point s = sites[i];
    for (std::size_t j = 0; j < sites.size() && !cell.empty(); ++j) {
      if (j == i) continue;
      const Point t = sites[j];
      // |p-s|^2 <= |p-t|^2  <=>  2(t-s).p <= |t|^2 - |s|^2
      cell = clip_half_plane(cell, 2 * (t.x - s.x), 2 * (t.y - s.y),
                             t.x * t.x + t.y * t.y - s.x * s.x - s.y * s.y);
    }
    cells[i] = std::move(cell);
  }
  return cells;
}

}  // namespace grainscope::grain
