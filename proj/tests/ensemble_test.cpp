#include <gtest/gtest.h>

#include "grainscope/common/rng.hpp"
#include "grainscope/ensemble/reassemble.hpp"
#include "grainscope/ensemble/report.hpp"
#include "grainscope/ensemble/tint.hpp"
#include "grainscope/imgprep/ops.hpp"

using namespace grainscope;
using namespace grainscope::ensemble;

namespace {

img::Raster random_raster(int w, int h, int c, Rng& rng) {
  img::Raster r(w, h, c);
  for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.below(256));
  return r;
}

double red_mean(const img::Raster& r) {
  double s = 0;
  for (std::size_t i = 0; i < r.pixels(); ++i) s += r.data[3 * i];
  return s / r.pixels();
}

}  // namespace

TEST(Reassemble, SliceThenReassembleIsExactOnCrop) {
  Rng rng(1);
  const auto src = random_raster(103, 77, 3, rng);
  const auto grid = img::slice_raster(src, 20, 15);
  const auto back = reassemble(layout_of(grid), tiles_of(grid));
  EXPECT_EQ(back, img::crop(src, grid.offset_x, grid.offset_y, grid.cols * 20, grid.rows * 15));
}

TEST(Reassemble, SingleTileGridIsTheTile) {
  Rng rng(2);
  const auto t = random_raster(9, 7, 1, rng);
  EXPECT_EQ(reassemble({1, 1, 9, 7, {}}, {{{0, 0}, t}}), t);
}

TEST(Reassemble, DiscardedCellIsFlatGray) {
  Rng rng(3);
  std::map<Cell, img::Raster> tiles;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (!(r == 0 && c == 2)) tiles.emplace(Cell{r, c}, random_raster(4, 5, 3, rng));
  const auto out = reassemble({3, 3, 4, 5, {{0, 2}}}, tiles);
  EXPECT_EQ(out.width, 12);
  EXPECT_EQ(out.height, 15);
  for (int y = 0; y < 5; ++y)
    for (int x = 8; x < 12; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y, c), kDiscardGray);
  EXPECT_EQ(img::crop(out, 4, 10, 4, 5), tiles.at({2, 1}));
}

TEST(Reassemble, MissingTilesAreNamed) {
  std::map<Cell, img::Raster> tiles{{{0, 0}, img::Raster(2, 2, 1)}, {{1, 1}, img::Raster(2, 2, 1)}};
  try {
    reassemble({2, 2, 2, 2, {}}, tiles);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("0_1, 1_0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(reassemble({2, 2, 3, 2, {{0, 1}, {1, 0}}}, tiles), DataError);  // wrong tile size
  EXPECT_NO_THROW(reassemble({2, 2, 2, 2, {{0, 1}, {1, 0}}}, tiles));
}

TEST(Tint, FullProbabilityIsBitExactIdentity) {
  Rng rng(4);
  const auto t = random_raster(16, 16, 3, rng);
  EXPECT_EQ(tint_tile(t, 1.0), t);
}

TEST(Tint, RedAtLumaHasMaximalRed) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double r = rng.below(256), g = rng.below(256), b = rng.below(256);
    const auto t = red_at_luma(r, g, b);
    const double L = img::luma(r, g, b);
    EXPECT_NEAR(img::luma(t[0], t[1], t[2]), L, 1e-9);
    EXPECT_NEAR(t[0], std::min(255.0, L / img::kLumaR), 1e-9);
    EXPECT_NEAR(t[1], t[2], 1e-12);
    EXPECT_GE(t[1], -1e-9);
    EXPECT_LE(t[0], 255 + 1e-9);
  }
}

TEST(Tint, LumaWithinOnePercentOnFuzzSet) {
  Rng rng(6);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto t = random_raster(12, 12, 3, rng);
    const double p = k == 0 ? 0.0 : rng.uniform();
    const auto out = tint_tile(t, p);
    for (std::size_t i = 0; i < t.pixels(); ++i) {
      const auto* a = &t.data[3 * i];
      const auto* b = &out.data[3 * i];
      worst = std::max(worst, std::abs(img::luma(a[0], a[1], a[2]) - img::luma(b[0], b[1], b[2])) / 255.0);
    }
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Tint, ShiftIsLinearInStrength) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.below(256), g = rng.below(256), b = rng.below(256);
    const auto full = tint_pixel(r, g, b, 1.0), half = tint_pixel(r, g, b, 0.5);
    const double in[3] = {r, g, b};
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(half[c] - in[c], 0.5 * (full[c] - in[c]), 1e-9);
  }
  const auto t = random_raster(8, 8, 3, rng);
  const auto t0 = tint_tile(t, 0.0), t5 = tint_tile(t, 0.5);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    EXPECT_LE(std::abs((t5.data[i] - t.data[i]) - 0.5 * (t0.data[i] - t.data[i])), 1.0);
}

TEST(Tint, LowerProbabilityNeverLessRed) {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const auto t = random_raster(10, 10, k % 2 ? 3 : 1, rng);
    double prev = red_mean(tint_tile(t, 1.0));
    for (int j = 19; j >= 0; --j) {
      const double m = red_mean(tint_tile(t, j / 20.0));
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(Tint, GrayTileTurnsRed) {
  const img::Raster g(4, 4, 1, 100);
  const auto out = tint_tile(g, 0.0);
  EXPECT_EQ(out.channels, 3);
  EXPECT_GT(out.at(0, 0, 0), 200);
  EXPECT_LT(out.at(0, 0, 1), 100);
  EXPECT_THROW(tint_tile(g, 1.5), ConfigError);
  EXPECT_NEAR(tint_strength(0.5, 2.0), 0.25, 1e-15);
}

TEST(Report, VerdictRules) {
  std::vector<TileClassification> all_good;
  for (int i = 0; i < 2025; ++i) all_good.push_back(classify(i / 45, i % 45, 0.9));
  EXPECT_EQ(coupon_report(all_good).verdict, Verdict::accept);

  auto one_bad = all_good;
  one_bad[1000] = classify(22, 10, 0.2);
  const auto r = coupon_report(one_bad, 0, "c1");
  EXPECT_EQ(r.verdict, Verdict::reject);
  EXPECT_EQ(r.bad, 1u);
  EXPECT_DOUBLE_EQ(r.min_p_good, 0.2);
  EXPECT_EQ(coupon_report(one_bad, 1.0).verdict, Verdict::accept);

  std::vector<TileClassification> tenth;
  for (int i = 0; i < 100; ++i) tenth.push_back(classify(0, i, i < 10 ? 0.1 : 0.8));
  EXPECT_EQ(coupon_report(tenth, 0.15).verdict, Verdict::accept);
  EXPECT_EQ(coupon_report(tenth, 0.05).verdict, Verdict::reject);
  EXPECT_EQ(coupon_report(tenth, 0.10).verdict, Verdict::accept);

  EXPECT_THROW(coupon_report({}), DataError);
  EXPECT_THROW(coupon_report(tenth, -0.1), ConfigError);
}

TEST(Report, ClassifyThresholdAndCsv) {
  EXPECT_EQ(classify(0, 0, 0.5).label, TileClass::good);
  EXPECT_EQ(classify(0, 0, 0.4999).label, TileClass::bad);
  const auto csv = classifications_to_csv({classify(1, 0, 0.25), classify(0, 3, 0.75)});
  EXPECT_EQ(to_csv(csv), "row,col,p_good,label\n0,3,0.750000,good\n1,0,0.250000,bad\n");
  const auto line = verdict_line(coupon_report({classify(0, 0, 0.25)}, 0, "c7"));
  EXPECT_EQ(line.rfind("c7 reject tiles=1 bad=1", 0), 0u) << line;
}
