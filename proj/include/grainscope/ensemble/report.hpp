#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/common/error.hpp"

namespace grainscope::ensemble {

enum class TileClass { good, bad };

inline const char* to_string(TileClass c) { return c == TileClass::good ? "good" : "bad"; }

struct TileClassification {
  int row = 0, col = 0;
  double p_good = 1;
  TileClass label = TileClass::good;
};

/// Label follows the trainer's decision rule: good iff p_good >= 0.5.
inline TileClassification classify(int row, int col, double p_good) {
  return {row, col, p_good, p_good >= 0.5 ? TileClass::good : TileClass::bad};
}

enum class Verdict { accept, reject };

inline const char* to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

struct CouponReport {
  std::string coupon;
  std::size_t tiles = 0;
  std::size_t bad = 0;
  double bad_fraction = 0;
  double min_p_good = 1;
  double mean_p_good = 1;
  Verdict verdict = Verdict::accept;
  double threshold = 0;
};

/// Rejects when the bad fraction exceeds `threshold`; 0 rejects on any bad tile.
inline CouponReport coupon_report(const std::vector<TileClassification>& tiles, double threshold = 0,
                                  std::string coupon = {}) {
  if (tiles.empty()) throw DataError("coupon report needs at least one classified tile");
  if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("reject threshold must be in [0, 1]");
  CouponReport r;
  r.coupon = std::move(coupon);
  r.tiles = tiles.size();
  r.threshold = threshold;
  double sum = 0;
  for (const auto& t : tiles) {
    r.bad += t.label == TileClass::bad;
    r.min_p_good = std::min(r.min_p_good, t.p_good);
    sum += t.p_good;
  }
  r.mean_p_good = sum / tiles.size();
  r.bad_fraction = static_cast<double>(r.bad) / r.tiles;
  r.verdict = r.bad_fraction > threshold ? Verdict::reject : Verdict::accept;
  return r;
}

inline CsvTable classifications_to_csv(std::vector<TileClassification> tiles) {
  std::sort(tiles.begin(), tiles.end(),
            [](const auto& a, const auto& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  CsvTable t;
  t.header = {"row", "col", "p_good", "label"};
  char buf[32];
  for (const auto& c : tiles) {
    std::snprintf(buf, sizeof buf, "%.6f", c.p_good);
    t.rows.push_back({std::to_string(c.row), std::to_string(c.col), buf, to_string(c.label)});
  }
  return t;
}

inline std::string verdict_line(const CouponReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "tiles=%zu bad=%zu bad_fraction=%.6f min_p_good=%.6f mean_p_good=%.6f threshold=%g",
                r.tiles, r.bad, r.bad_fraction, r.min_p_good, r.mean_p_good, r.threshold);
  return r.coupon + " " + to_string(r.verdict) + " " + buf;
}

}  // namespace grainscope::ensemble
