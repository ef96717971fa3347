#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/common/error.hpp"
#include "grainscope/common/kv.hpp"

namespace grainscope::img {

enum class TileLabel { good, bad, neutral, unlabeled };

inline std::string to_string(TileLabel l) {
  switch (l) {
    case TileLabel::good: return "good";
    case TileLabel::bad: return "bad";
    case TileLabel::neutral: return "neutral";
    case TileLabel::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

inline TileLabel parse_label(const std::string& s) {
  const auto t = trim(s);
  if (t == "good") return TileLabel::good;
  if (t == "bad") return TileLabel::bad;
  if (t == "neutral") return TileLabel::neutral;
  if (t == "unlabeled" || t.empty()) return TileLabel::unlabeled;
  throw DataError("unknown tile label '" + t + "'");
}

struct TileRecord {
  std::string path;  // relative to the manifest directory
  std::string coupon;
  int row = 0;
  int col = 0;
  TileLabel label = TileLabel::unlabeled;

  bool operator==(const TileRecord&) const = default;
};

struct TileManifest {
  std::filesystem::path root;  // directory the paths are relative to
  std::vector<TileRecord> tiles;

  std::filesystem::path resolve(const TileRecord& t) const { return root / t.path; }
};

inline CsvTable manifest_to_csv(const TileManifest& m) {
  CsvTable t;
  t.header = {"path", "coupon", "row", "col", "label"};
  for (const auto& r : m.tiles)
    t.rows.push_back({r.path, r.coupon, std::to_string(r.row), std::to_string(r.col), to_string(r.label)});
  return t;
}

inline void save_manifest(const std::filesystem::path& path, const TileManifest& m) {
  write_csv(path.string(), manifest_to_csv(m));
}

inline TileManifest load_manifest(const std::filesystem::path& path) {
  const auto t = read_csv(path.string());
  const auto ip = t.require_column("path"), ir = t.require_column("row"), ic = t.require_column("col"),
             il = t.require_column("label");
  const auto icoupon = t.column("coupon");
  TileManifest m;
  m.root = path.parent_path();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string where = "manifest row " + std::to_string(i + 2);
    if (row.size() != t.header.size()) throw DataError(where + ": expected " + std::to_string(t.header.size()) + " cells");
    TileRecord r;
    r.path = row[ip];
    r.coupon = icoupon >= 0 ? row[icoupon] : std::string{};
    r.row = static_cast<int>(parse_int(row[ir], where + " column row"));
    r.col = static_cast<int>(parse_int(row[ic], where + " column col"));
    r.label = parse_label(row[il]);
    m.tiles.push_back(std::move(r));
  }
  return m;
}

}  // namespace grainscope::img
