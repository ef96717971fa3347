#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "grainscope/common/rng.hpp"
#include "grainscope/imgprep/augment.hpp"
#include "grainscope/imgprep/io.hpp"
#include "grainscope/imgprep/manifest.hpp"
#include "grainscope/imgprep/ops.hpp"
#include "grainscope/imgprep/pipeline.hpp"

using namespace grainscope;
using namespace grainscope::img;
namespace fs = std::filesystem;

namespace {

Raster noise(int w, int h, int c, std::uint64_t seed) {
  Raster r(w, h, c);
  Rng rng(seed);
  for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.below(256));
  return r;
}

// Smooth-ish texture with a skewed histogram.
Raster texture(int w, int h, std::uint64_t seed) {
  Raster r(w, h, 1);
  Rng rng(seed);
  const double fx = rng.uniform(0.05, 0.2), fy = rng.uniform(0.05, 0.2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.3 * std::sin(fx * x) * std::cos(fy * y) + 0.1 * rng.normal();
      r.at(x, y) = clamp_u8(255 * std::pow(std::clamp(v, 0.0, 1.0), 2.2));
    }
  return r;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("grainscope_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Reference bilinear sampler written against the continuous-coordinate
// definition rather than precomputed taps.
double reference_sample(const Raster& r, double u, double v, int c) {
  u = std::clamp(u, 0.0, r.width - 1.0);
  v = std::clamp(v, 0.0, r.height - 1.0);
  double acc = 0;
  for (int y = static_cast<int>(std::floor(v)); y <= static_cast<int>(std::ceil(v)); ++y)
    for (int x = static_cast<int>(std::floor(u)); x <= static_cast<int>(std::ceil(u)); ++x) {
      const double wx = std::max(0.0, 1 - std::abs(u - x)), wy = std::max(0.0, 1 - std::abs(v - y));
      acc += wx * wy * r.at(x, y, c);
    }
  return acc;
}

Raster reference_resize(const Raster& r, int w, int h) {
  Raster out(w, h, r.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < r.channels; ++c)
        out.at(x, y, c) = clamp_u8(reference_sample(r, (x + 0.5) * r.width / w - 0.5,
                                                    (y + 0.5) * r.height / h - 0.5, c));
  return out;
}

}  // namespace

TEST(Slice, PublishedGridArithmetic) {
  const auto d = grid_dims(22050, 16560, 490, 368);
  EXPECT_EQ(d.rows, 45);
  EXPECT_EQ(d.cols, 45);
  EXPECT_EQ(d.rows * d.cols, 2025);
  EXPECT_EQ(d.offset_x, 0);
  // The raw scan is not an exact multiple of the tile size.
  const auto raw = grid_dims(22000, 16600, 490, 368);
  EXPECT_EQ(raw.cols, 44);
  EXPECT_EQ(raw.rows, 45);
}

TEST(Slice, SingleTileIsInput) {
  const auto r = noise(17, 11, 3, 1);
  const auto g = slice_raster(r, 17, 11);
  ASSERT_EQ(g.tiles.size(), 1u);
  EXPECT_EQ(g.tiles[0], r);
}

TEST(Slice, CenteredCropDropsMargins) {
  const auto r = noise(1000, 1000, 1, 2);
  const auto g = slice_raster(r, 300, 300);
  EXPECT_EQ(g.rows, 3);
  EXPECT_EQ(g.cols, 3);
  EXPECT_EQ(g.offset_x, 50);
  EXPECT_EQ(g.offset_y, 50);
  EXPECT_EQ(g.tile(1, 2).at(0, 0), r.at(650, 350));
  EXPECT_EQ(g.tile(2, 2).at(299, 299), r.at(949, 949));
}

TEST(Slice, TileLargerThanRasterThrows) {
  EXPECT_THROW(slice_raster(noise(10, 10, 1, 3), 11, 5), DataError);
}

TEST(Slice, PasteInvertsSliceOnCrop) {
  const auto r = noise(103, 77, 3, 4);
  const auto g = slice_raster(r, 20, 15);
  Raster back(g.cols * g.tile_w, g.rows * g.tile_h, 3);
  for (int row = 0; row < g.rows; ++row)
    for (int col = 0; col < g.cols; ++col) paste(back, g.tile(row, col), col * g.tile_w, row * g.tile_h);
  EXPECT_EQ(back, crop(r, g.offset_x, g.offset_y, back.width, back.height));
}

TEST(Gray, WeightCases) {
  EXPECT_NEAR(kLumaR + kLumaG + kLumaB, 1.0, 5e-4);
  Raster px(1, 1, 3);
  px.data = {255, 255, 255};
  EXPECT_EQ(to_gray(px).data[0], 255);
  px.data = {0, 255, 0};
  EXPECT_EQ(to_gray(px).data[0], 182);
  for (int v = 0; v < 256; ++v) {
    const auto b = static_cast<std::uint8_t>(v);
    px.data = {b, b, b};
    EXPECT_EQ(to_gray(px).data[0], v);
  }
  const auto rgb = grayscale_rgb_weighted(noise(5, 4, 3, 5));
  EXPECT_EQ(rgb.channels, 3);
  for (std::size_t i = 0; i < rgb.pixels(); ++i) {
    EXPECT_EQ(rgb.data[3 * i], rgb.data[3 * i + 1]);
    EXPECT_EQ(rgb.data[3 * i], rgb.data[3 * i + 2]);
  }
}

TEST(Equalize, TwoLevelMapsToExtremes) {
  Raster r(10, 10, 1, 80);
  for (int i = 0; i < 50; ++i) r.data[i] = 120;
  const auto e = hist_equalize(r);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(e.data[i], i < 50 ? 255 : 0);
}

TEST(Equalize, UniformRampIsIdentity) {
  Raster r(256, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 256; ++x) r.at(x, y) = static_cast<std::uint8_t>(x);
  EXPECT_EQ(hist_equalize(r), r);
}

TEST(Equalize, ConstantUnchanged) {
  const Raster r(8, 8, 1, 77);
  EXPECT_EQ(hist_equalize(r), r);
}

TEST(Equalize, MonotoneWithinLargestBinBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = texture(90, 70, seed);
    const auto e = hist_equalize(r);
    // monotone: input order preserved
    std::array<int, 256> lo, hi;
    lo.fill(256);
    hi.fill(-1);
    for (std::size_t i = 0; i < r.pixels(); ++i) {
      lo[r.data[i]] = std::min(lo[r.data[i]], int(e.data[i]));
      hi[r.data[i]] = std::max(hi[r.data[i]], int(e.data[i]));
    }
    int last = -1;
    for (int v = 0; v < 256; ++v) {
      if (hi[v] < 0) continue;
      EXPECT_EQ(lo[v], hi[v]);
      EXPECT_GE(lo[v], last);
      last = lo[v];
    }
    const auto hin = histogram(r), hout = histogram(e);
    const double n = static_cast<double>(r.pixels());
    const double max_bin = *std::max_element(hin.begin(), hin.end()) / n;
    double dev = 0, cdf = 0;
    for (int v = 0; v < 256; ++v) {
      const double before = cdf;  // left limit at v
      cdf += hout[v] / n;
      dev = std::max({dev, std::abs(cdf - v / 255.0), std::abs(before - v / 255.0)});
    }
    // half a gray level of rounding on top of the bin-mass bound
    EXPECT_LE(dev, max_bin + 0.5 / 255 + 1e-12) << seed;
  }
}

TEST(Resize, IdentityBitExact) {
  const auto r = noise(31, 9, 3, 6);
  EXPECT_EQ(resize_bilinear(r, 31, 9), r);
}

TEST(Resize, CheckerboardToOnePixelIsMean) {
  Raster r(2, 2, 1);
  r.data = {0, 255, 255, 0};
  EXPECT_EQ(resize_bilinear(r, 1, 1).data[0], 128);
  r.data = {10, 20, 30, 40};
  EXPECT_EQ(resize_bilinear(r, 1, 1).data[0], 25);
}

TEST(Resize, StorageThenNetworkMatchesReference) {
  const auto src = texture(490, 368, 11);
  const auto a = resize_bilinear(resize_bilinear(src, 189, 142), 140, 140);
  const auto b = reference_resize(reference_resize(src, 189, 142), 140, 140);
  int worst = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(int(a.data[i]) - int(b.data[i])));
  EXPECT_LE(worst, 1);
}

TEST(Discard, Cases) {
  std::vector<Raster> tiles{Raster(10, 10, 3, 0), Raster(10, 10, 3, 200), Raster(10, 10, 1, 200)};
  for (int i = 0; i < 50; ++i) tiles[2].data[i] = 3;
  for (double th : {0.05, 0.5, 1.0}) {
    const auto d = discard_boundary({tiles[0]}, th);
    EXPECT_EQ(d.discarded.size(), 1u) << th;
  }
  const auto d = discard_boundary(tiles, 0.4);
  EXPECT_EQ(d.kept, (std::vector<std::size_t>{1}));
  ASSERT_EQ(d.discarded.size(), 2u);
  EXPECT_DOUBLE_EQ(d.discarded[1].black_fraction, 0.5);
  EXPECT_EQ(discard_boundary(tiles, 0.6).kept.size(), 2u);
  EXPECT_THROW(discard_boundary(tiles, 0.0), ConfigError);
}

TEST(Augment, ZeroRangesIsIdentity) {
  AugmentParams p{0, 0, 0, false, false};
  Rng rng(1);
  const auto r = noise(20, 13, 3, 7);
  EXPECT_EQ(augment(r, p, rng), r);
}

TEST(Augment, IntegerWrapShiftPermutesPixels) {
  const auto r = noise(23, 17, 1, 8);
  for (auto [dx, dy] : {std::pair{3, 0}, {0, -5}, {7, 4}, {-22, 16}}) {
    const auto s = apply_affine(r, Affine::shift(dx, dy));
    auto a = r.data, b = s.data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        ASSERT_EQ(s.at(wrap_index(x + dx, r.width), wrap_index(y + dy, r.height)), r.at(x, y));
  }
}

TEST(Augment, FlipTwiceIsIdentity) {
  const auto r = noise(9, 6, 3, 9);
  const auto f = flip_horizontal(r);
  EXPECT_NE(f, r);
  EXPECT_EQ(f.at(0, 2, 1), r.at(8, 2, 1));
  EXPECT_EQ(flip_horizontal(f), r);
}

TEST(Augment, SeededAndShapePreserving) {
  const auto r = texture(40, 30, 3);
  AugmentParams p;
  Rng a(5), b(5);
  const auto x = augment(r, p, a), y = augment(r, p, b);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x.width, 40);
  EXPECT_EQ(x.height, 30);
  EXPECT_THROW((AugmentParams{0, 2, 0, false, false}.validate()), ConfigError);
}

TEST(Io, PngRoundTripExact) {
  const auto dir = temp_dir("png");
  for (int c : {1, 3}) {
    const auto r = noise(13, 7, c, 10 + c);
    const auto path = (dir / ("x" + std::to_string(c) + ".png")).string();
    write_png(path, r);
    EXPECT_EQ(read_image(path), r);
  }
}

TEST(Io, JpegRoundTripClose) {
  const auto dir = temp_dir("jpg");
  const auto r = texture(64, 48, 12);
  const auto path = (dir / "t.jpg").string();
  write_jpeg(path, r, 95);
  const auto back = read_image(path);
  ASSERT_EQ(back.channels, 1);
  double err = 0;
  for (std::size_t i = 0; i < r.data.size(); ++i) err += std::abs(int(r.data[i]) - int(back.data[i]));
  EXPECT_LT(err / r.data.size(), 3.0);
  // signature wins over extension
  fs::copy_file(path, dir / "t.png");
  EXPECT_EQ(read_image((dir / "t.png").string()), back);
}

TEST(Io, BadFilesRaiseDataError) {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "junk.png") << "not an image at all";
  EXPECT_THROW(read_image((dir / "junk.png").string()), DataError);
  EXPECT_THROW(read_image((dir / "missing.png").string()), DataError);
  std::ofstream(dir / "trunc.jpg") << "\xFF\xD8\xFF\xE0";
  EXPECT_THROW(read_image((dir / "trunc.jpg").string()), DataError);
}

TEST(Manifest, RoundTrip) {
  const auto dir = temp_dir("manifest");
  TileManifest m;
  m.tiles = {{"c1/0_0.jpg", "c1", 0, 0, TileLabel::good}, {"c1/0_1.jpg", "c1", 0, 1, TileLabel::neutral}};
  save_manifest(dir / "m.csv", m);
  const auto back = load_manifest(dir / "m.csv");
  EXPECT_EQ(back.tiles, m.tiles);
  EXPECT_EQ(back.root, dir);
  EXPECT_THROW(parse_label("great"), DataError);
}

TEST(Pipeline, BorderTilesDiscardedAndSizesApplied) {
  // 5x4 grid of 40x30 tiles; the first column is mount background.
  Raster coupon(200, 120, 3, 0);
  Rng rng(13);
  for (int y = 0; y < 120; ++y)
    for (int x = 40; x < 200; ++x)
      for (int c = 0; c < 3; ++c) coupon.at(x, y, c) = static_cast<std::uint8_t>(60 + rng.below(150));
  PrepOptions opt;
  opt.tile_w = 40;
  opt.tile_h = 30;
  opt.store_w = 20;
  opt.store_h = 15;
  const auto p = prepare_coupon(coupon, "c", opt, 2);
  EXPECT_EQ(p.grid.rows, 4);
  EXPECT_EQ(p.grid.cols, 5);
  EXPECT_EQ(p.tiles.size(), 16u);
  EXPECT_EQ(p.discarded.size(), 4u);
  for (int r = 0; r < 4; ++r) EXPECT_TRUE(p.grid.discarded.count({r, 0}));
  for (const auto& t : p.tiles) {
    EXPECT_EQ(t.gray.width, 20);
    EXPECT_EQ(t.gray.channels, 3);
    EXPECT_EQ(t.color.height, 15);
    EXPECT_NE(t.col, 0);
  }
  const auto meta = GridMeta::from_kv(KeyValueDoc::parse(p.grid.to_kv().str()));
  EXPECT_EQ(meta.discarded, p.grid.discarded);
  EXPECT_EQ(meta.store_w, 20);

  const auto dir = temp_dir("prep");
  const auto recs = write_prepared(dir, p, TileLabel::unlabeled, opt);
  ASSERT_EQ(recs.size(), 16u);
  EXPECT_TRUE(fs::exists(dir / recs[0].path));
  EXPECT_TRUE(fs::exists(dir / "color" / "c" / "0_1.png"));
  EXPECT_TRUE(fs::exists(dir / "c" / "grid.kv"));
}
