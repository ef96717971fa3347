#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "grainscope/common/rng.hpp"
#include "grainscope/synthgrain/generate.hpp"
#include "grainscope/synthgrain/geometry.hpp"
#include "grainscope/synthgrain/measure.hpp"

using namespace grainscope;
using namespace grainscope::grain;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

// Cyrus-Beck clip of the line p(s) = o + s*u against a convex polygon with
// either orientation; returns the inside length.
double clip_length(const Polygon& poly, Point o, double ux, double uy) {
  const double orient = signed_area(poly) > 0 ? 1 : -1;
  double s0 = -1e300, s1 = 1e300;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    // inward normal
    const double nx = -(b.y - a.y) * orient, ny = (b.x - a.x) * orient;
    const double num = nx * (o.x - a.x) + ny * (o.y - a.y);
    const double den = nx * ux + ny * uy;
    if (std::abs(den) < 1e-15) {
      if (num < 0) return 0;
      continue;
    }
    const double s = -num / den;
    if (den > 0)
      s0 = std::max(s0, s);
    else
      s1 = std::min(s1, s);
  }
  return std::max(0.0, s1 - s0);
}

double oracle_chord(const Polygon& poly, double radians) {
  const double ux = std::cos(radians), uy = std::sin(radians), nx = -uy, ny = ux;
  double lo = 1e300, hi = -1e300;
  for (const auto& p : poly) {
    lo = std::min(lo, p.x * nx + p.y * ny);
    hi = std::max(hi, p.x * nx + p.y * ny);
  }
  double best = 0;
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    const double t = lo + (hi - lo) * i / n;
    best = std::max(best, clip_length(poly, {t * nx, t * ny}, ux, uy));
  }
  return best;
}

double oracle_size(const Polygon& poly, double step_deg) {
  double best = 0;
  for (double a = 0; a < 180; a += step_deg)
    best = std::max(best, oracle_chord(poly, a * kDeg) + oracle_chord(poly, (a + 90) * kDeg));
  return best / 2;
}

bool inside_convex(const Polygon& poly, Point p, double tol) {
  const double orient = signed_area(poly) > 0 ? 1 : -1;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross * orient < -tol) return false;
  }
  return true;
}

}  // namespace

TEST(Measure, UnitSquareDiagonals) {
  const auto m = measure_grain(rectangle(0, 0, 1, 1));
  EXPECT_NEAR(m.d1, std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(m.d2, std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(m.size(), std::sqrt(2.0), 1e-9);
}

TEST(Measure, RectangleAgreesWithFineOracle) {
  const auto poly = rectangle(0, 0, 4, 2);
  const auto m = measure_grain(poly);
  EXPECT_GE(m.d1, m.d2);
  EXPECT_NEAR(m.size(), oracle_size(poly, 0.1), 0.01 * m.size());
}

TEST(Measure, ChordMatchesClipOracle) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    std::vector<Point> sites(12);
    for (auto& s : sites) s = {rng.uniform(0, 10), rng.uniform(0, 10)};
    const auto cells = voronoi_cells(sites, 10, 10);
    const auto& cell = cells[k % cells.size()];
    for (double a : {0.0, 17.0, 45.0, 101.0}) {
      const double got = max_chord(cell, a * kDeg);
      EXPECT_GE(got + 1e-9, oracle_chord(cell, a * kDeg));
      EXPECT_NEAR(got, oracle_chord(cell, a * kDeg), 2e-3 * got);
    }
  }
}

TEST(Measure, PolygonizedCircle) {
  for (double r : {1.0, 7.5, 30.0}) {
    const auto m = measure_grain(regular_polygon(3, -2, r, 360));
    EXPECT_NEAR(m.size(), 2 * r, 0.02 * 2 * r);
  }
}

TEST(Measure, RotationEquivariant) {
  Rng rng(5);
  std::vector<Point> sites(20);
  for (auto& s : sites) s = {rng.uniform(0, 50), rng.uniform(0, 50)};
  const auto cells = voronoi_cells(sites, 50, 50);
  for (std::size_t i = 0; i < cells.size(); i += 3) {
    const auto base = measure_grain(cells[i]);
    for (double theta : {13.0, 37.5, 90.0, 211.0}) {
      const auto m = measure_grain(rotated(cells[i], theta * kDeg, {25, 25}));
      EXPECT_NEAR(m.d1, base.d1, 0.01 * base.d1);
      EXPECT_NEAR(m.d2, base.d2, 0.01 * base.d2);
    }
  }
}

TEST(Measure, NonConvexLShape) {
  // L of two 4x1 arms; the longest single chord stays inside the polygon.
  const Polygon l{{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}};
  EXPECT_NEAR(max_chord(l, 0), 4.0, 1e-9);
  EXPECT_NEAR(max_chord(l, 90 * kDeg), 4.0, 1e-9);
}

TEST(Measure, DegeneratePolygonsThrow) {
  EXPECT_THROW(measure_grain({{0, 0}, {1, 1}}), DataError);
  EXPECT_THROW(measure_grain({{0, 0}, {1, 1}, {2, 2}}), DataError);
  EXPECT_THROW(measure_grain({{0, 0}, {1, 0}, {0, NAN}}), DataError);
}

TEST(Voronoi, CellsPartitionTheTile) {
  Rng rng(9);
  std::vector<Point> sites(40);
  for (auto& s : sites) s = {rng.uniform(0, 60), rng.uniform(0, 40)};
  const auto cells = voronoi_cells(sites, 60, 40);
  double area = 0;
  for (const auto& c : cells) area += std::abs(signed_area(c));
  EXPECT_NEAR(area, 60.0 * 40.0, 1e-8);
  for (int k = 0; k < 500; ++k) {
    const Point p{rng.uniform(0, 60), rng.uniform(0, 40)};
    std::size_t nearest = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const double d = std::hypot(p.x - sites[i].x, p.y - sites[i].y);
      if (d < best) best = d, nearest = i;
    }
    EXPECT_TRUE(inside_convex(cells[nearest], p, 1e-9));
  }
}

TEST(Generate, SingleSeedIsOneUniformCell) {
  GrainFieldSpec s;
  s.seed_count = 1;
  s.noise_sigma = 0;
  s.width = 30;
  s.height = 20;
  const auto t = generate_tile(s);
  ASSERT_EQ(t.cells.size(), 1u);
  EXPECT_NEAR(std::abs(signed_area(t.cells[0])), 600.0, 1e-9);
  for (auto v : t.gray.data) EXPECT_EQ(v, t.gray.data[0]);
}

TEST(Generate, DeterministicPerSeed) {
  GrainFieldSpec s;
  s.seed_count = 30;
  s.seed = 42;
  const auto a = generate_tile(s), b = generate_tile(s);
  EXPECT_EQ(a.gray, b.gray);
  s.seed = 43;
  EXPECT_NE(generate_tile(s).gray, a.gray);
}

TEST(Generate, BoundariesAreDarker) {
  GrainFieldSpec s;
  s.seed_count = 50;
  s.seed = 1;
  s.noise_sigma = 0;
  s.intensity_jitter = 0;
  const auto t = generate_tile(s);
  int dark = 0;
  for (auto v : t.gray.data) dark += v < s.base_intensity - 1;
  EXPECT_GT(dark, 0);
  EXPECT_LT(dark, static_cast<int>(t.gray.data.size()) / 2);
}

TEST(Generate, RegimesSeparateByThreeFold) {
  double small = 0, large = 0;
  for (int k = 0; k < 5; ++k) {
    GrainFieldSpec s;
    s.seed = 100 + k;
    s.seed_count = 200;
    small += mean_grain_size(generate_tile(s).cells);
    s.seed_count = 8;
    large += mean_grain_size(generate_tile(s).cells);
  }
  EXPECT_GE(large / small, 3.0);
}

TEST(Label, DefaultThresholdsAndNeutralBand) {
  const LabelThresholds th;
  GrainFieldSpec s;
  s.seed = 7;
  s.seed_count = 200;
  EXPECT_EQ(label_tile(generate_tile(s).cells, th), img::TileLabel::good);
  s.seed_count = 8;
  EXPECT_EQ(label_tile(generate_tile(s).cells, th), img::TileLabel::bad);
  EXPECT_EQ(label_for_size((th.good_max + th.bad_min) / 2, th), img::TileLabel::neutral);
  EXPECT_EQ(label_for_size(th.good_max, th), img::TileLabel::good);
  EXPECT_EQ(label_for_size(th.bad_min, th), img::TileLabel::bad);
  EXPECT_THROW(label_for_size(1, LabelThresholds{5, 5}), ConfigError);
}

TEST(Label, BalancedRequestsStayBalanced) {
  RegimeSpec r;
  r.field.width = r.field.height = 64;
  r.good_seeds = 60;
  r.bad_seeds = 4;
  r.count_spread = 0.5;
  r.thresholds = {12, 24};
  int good = 0, bad = 0, rejected = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto g = synth_labeled(r, img::TileLabel::good, 9, i);
    const auto b = synth_labeled(r, img::TileLabel::bad, 9, i);
    good += g.label == img::TileLabel::good;
    bad += b.label == img::TileLabel::bad;
    rejected += g.attempt + b.attempt;
  }
  EXPECT_EQ(good, 20);
  EXPECT_EQ(bad, 20);
  const auto again = synth_labeled(r, img::TileLabel::bad, 9, 3);
  EXPECT_EQ(again.gray, synth_labeled(r, img::TileLabel::bad, 9, 3).gray);
  EXPECT_THROW(synth_labeled(r, img::TileLabel::neutral, 9, 0), ConfigError);
  RegimeSpec impossible = r;
  impossible.good_seeds = 1;
  EXPECT_THROW(synth_labeled(impossible, img::TileLabel::good, 1, 0, 4), ConfigError);
}
