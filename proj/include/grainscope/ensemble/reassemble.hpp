#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>

#include "grainscope/imgprep/pipeline.hpp"
#include "grainscope/imgprep/raster.hpp"

namespace grainscope::ensemble {

using Cell = std::pair<int, int>;  // (row, col)

inline constexpr std::uint8_t kDiscardGray = 128;

/// Cell layout of an ensemble image. Cells listed in `discarded` render as
/// flat gray; every other cell needs a tile.
struct EnsembleGrid {
  int rows = 0, cols = 0;
  int cell_w = 0, cell_h = 0;
  std::set<Cell> discarded;
};

inline EnsembleGrid layout_of(const img::TileGrid& g) { return {g.rows, g.cols, g.tile_w, g.tile_h, {}}; }

/// Layout at stored tile size.
inline EnsembleGrid layout_of(const img::GridMeta& m) { return {m.rows, m.cols, m.store_w, m.store_h, m.discarded}; }

inline std::map<Cell, img::Raster> tiles_of(const img::TileGrid& g) {
  std::map<Cell, img::Raster> out;
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) out.emplace(Cell{r, c}, g.tile(r, c));
  return out;
}

/// Row-major composition of tiles into one raster. Output has 3 channels if
/// any tile does; gray tiles are replicated in that case.
inline img::Raster reassemble(const EnsembleGrid& g, const std::map<Cell, img::Raster>& tiles) {
  if (g.rows < 1 || g.cols < 1 || g.cell_w < 1 || g.cell_h < 1) throw DataError("ensemble grid has no cells");
  int channels = 1;
  for (const auto& [cell, t] : tiles) {
    if (cell.first < 0 || cell.first >= g.rows || cell.second < 0 || cell.second >= g.cols)
      throw DataError("tile " + std::to_string(cell.first) + "_" + std::to_string(cell.second) + " outside the grid");
    if (t.width != g.cell_w || t.height != g.cell_h)
      throw DataError("tile " + std::to_string(cell.first) + "_" + std::to_string(cell.second) + " is " +
                      std::to_string(t.width) + "x" + std::to_string(t.height) + ", expected " +
                      std::to_string(g.cell_w) + "x" + std::to_string(g.cell_h));
    if (t.channels == 3) channels = 3;
  }
  if (tiles.empty()) channels = 3;

  std::string missing;
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      if (!g.discarded.count({r, c}) && !tiles.count({r, c}))
        missing += (missing.empty() ? "" : ", ") + std::to_string(r) + "_" + std::to_string(c);
  if (!missing.empty()) throw DataError("missing tiles at " + missing);

  img::Raster out(g.cols * g.cell_w, g.rows * g.cell_h, channels, kDiscardGray);
  for (const auto& [cell, t] : tiles) {
    if (g.discarded.count(cell)) continue;
    paste(out, channels == 3 ? img::to_rgb(t) : t, cell.second * g.cell_w, cell.first * g.cell_h);
  }
  return out;
}

}  // namespace grainscope::ensemble
