#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grainscope/common/kv.hpp"
#include "grainscope/common/parallel.hpp"
#include "grainscope/imgprep/io.hpp"
#include "grainscope/imgprep/manifest.hpp"
#include "grainscope/imgprep/ops.hpp"

namespace grainscope::img {

struct PrepOptions {
  int tile_w = 490;
  int tile_h = 368;
  int store_w = 189;
  int store_h = 142;
  double black_threshold = kDefaultBlackFraction;
  bool equalize = true;
  int jpeg_quality = 90;

  void validate() const {
    if (tile_w < 1 || tile_h < 1 || store_w < 1 || store_h < 1) throw ConfigError("tile sizes must be positive");
    if (!(black_threshold > 0 && black_threshold <= 1)) throw ConfigError("black_threshold must be in (0, 1]");
    if (jpeg_quality < 1 || jpeg_quality > 100) throw ConfigError("jpeg_quality must be in [1, 100]");
  }

  void to_kv(KeyValueDoc& d) const {
    d.set("tile_w", tile_w);
    d.set("tile_h", tile_h);
    d.set("store_w", store_w);
    d.set("store_h", store_h);
    d.set("black_threshold", black_threshold);
    d.set("equalize", equalize);
    d.set("jpeg_quality", jpeg_quality);
  }

  /// Reads any of the keys above present in `d`.
  void update_from(const KeyValueDoc& d) {
    if (d.has("tile_w")) tile_w = static_cast<int>(d.get_int("tile_w"));
    if (d.has("tile_h")) tile_h = static_cast<int>(d.get_int("tile_h"));
    if (d.has("store_w")) store_w = static_cast<int>(d.get_int("store_w"));
    if (d.has("store_h")) store_h = static_cast<int>(d.get_int("store_h"));
    if (d.has("black_threshold")) black_threshold = d.get_double("black_threshold");
    if (d.has("equalize")) equalize = d.get_bool("equalize");
    if (d.has("jpeg_quality")) jpeg_quality = static_cast<int>(d.get_int("jpeg_quality"));
  }
};

/// Grid geometry needed to put a coupon back together.
struct GridMeta {
  std::string coupon;
  int rows = 0, cols = 0;
  int tile_w = 0, tile_h = 0;
  int offset_x = 0, offset_y = 0;
  int store_w = 0, store_h = 0;
  std::set<std::pair<int, int>> discarded;

  KeyValueDoc to_kv() const {
    KeyValueDoc d;
    d.set("coupon", coupon);
    d.set("rows", rows);
    d.set("cols", cols);
    d.set("tile_w", tile_w);
    d.set("tile_h", tile_h);
    d.set("offset_x", offset_x);
    d.set("offset_y", offset_y);
    d.set("store_w", store_w);
    d.set("store_h", store_h);
    std::string cells;
    for (const auto& [r, c] : discarded) {
      if (!cells.empty()) cells += ' ';
      cells += std::to_string(r) + "_" + std::to_string(c);
    }
    d.set("discarded", cells);
    return d;
  }

  static GridMeta from_kv(const KeyValueDoc& d) {
    GridMeta g;
    g.coupon = d.get("coupon");
    g.rows = static_cast<int>(d.get_int("rows"));
    g.cols = static_cast<int>(d.get_int("cols"));
    g.tile_w = static_cast<int>(d.get_int("tile_w"));
    g.tile_h = static_cast<int>(d.get_int("tile_h"));
    g.offset_x = static_cast<int>(d.get_int("offset_x"));
    g.offset_y = static_cast<int>(d.get_int("offset_y"));
    g.store_w = static_cast<int>(d.get_int("store_w"));
    g.store_h = static_cast<int>(d.get_int("store_h"));
    for (const auto& cell : split(d.get_or("discarded", ""), ' ')) {
      if (trim(cell).empty()) continue;
      const auto rc = split(cell, '_');
      if (rc.size() != 2) throw DataError("bad discarded cell '" + cell + "'");
      g.discarded.emplace(static_cast<int>(parse_int(rc[0])), static_cast<int>(parse_int(rc[1])));
    }
    return g;
  }
};

struct PreparedTile {
  int row = 0, col = 0;
  Raster gray;   // equalized, storage size, 3 replicated channels
  Raster color;  // untouched color at storage size, for reconstruction
};

struct PreparedCoupon {
  GridMeta grid;
  std::vector<PreparedTile> tiles;  // kept tiles, row-major
  std::vector<DiscardEntry> discarded;
};

/// slice, grayscale, boundary discard, equalize, resize. The near-black test
/// runs before equalization, which would otherwise stretch ordinary dark
/// texture below the cutoff.
inline PreparedCoupon prepare_coupon(const Raster& src, const std::string& coupon, const PrepOptions& opt,
                                     int threads = 1) {
  opt.validate();
  auto grid = slice_raster(src, opt.tile_w, opt.tile_h, coupon);
  std::vector<Raster> gray(grid.tiles.size());
  parallel_for(grid.tiles.size(), threads, [&](std::size_t i) { gray[i] = to_gray(grid.tiles[i]); });
  const auto keep = discard_boundary(gray, opt.black_threshold);

  PreparedCoupon out;
  out.grid = {coupon, grid.rows, grid.cols, grid.tile_w, grid.tile_h, grid.offset_x, grid.offset_y,
              opt.store_w, opt.store_h, {}};
  for (const auto& d : keep.discarded) {
    out.grid.discarded.emplace(static_cast<int>(d.index) / grid.cols, static_cast<int>(d.index) % grid.cols);
    out.discarded.push_back(d);
  }
  out.tiles.resize(keep.kept.size());
  parallel_for(keep.kept.size(), threads, [&](std::size_t k) {
    const auto i = keep.kept[k];
    auto& t = out.tiles[k];
    t.row = static_cast<int>(i) / grid.cols;
    t.col = static_cast<int>(i) % grid.cols;
    const Raster g = opt.equalize ? hist_equalize(gray[i]) : gray[i];
    t.gray = to_rgb(resize_bilinear(g, opt.store_w, opt.store_h));
    t.color = resize_bilinear(to_rgb(grid.tiles[i]), opt.store_w, opt.store_h);
  });
  return out;
}

inline std::string tile_name(int row, int col) { return std::to_string(row) + "_" + std::to_string(col); }

/// Writes processed tiles as `<coupon>/<row>_<col>.jpg`, color tiles under
/// `color/<coupon>/`, and `<coupon>/grid.kv`. Returns manifest records.
inline std::vector<TileRecord> write_prepared(const std::filesystem::path& out_dir, const PreparedCoupon& p,
                                              TileLabel label, const PrepOptions& opt) {
  namespace fs = std::filesystem;
  const fs::path gray_dir = out_dir / p.grid.coupon;
  const fs::path color_dir = out_dir / "color" / p.grid.coupon;
  fs::create_directories(gray_dir);
  fs::create_directories(color_dir);
  p.grid.to_kv().save((gray_dir / "grid.kv").string());
  std::vector<TileRecord> recs;
  for (const auto& t : p.tiles) {
    const auto name = tile_name(t.row, t.col);
    // single channel on disk; loaders replicate to RGB
    write_jpeg((gray_dir / (name + ".jpg")).string(), first_channel(t.gray), opt.jpeg_quality);
    write_png((color_dir / (name + ".png")).string(), t.color);
    recs.push_back({p.grid.coupon + "/" + name + ".jpg", p.grid.coupon, t.row, t.col, label});
  }
  return recs;
}

}  // namespace grainscope::img
