#pragma once

// Central composite designs: 2^k cube points in standard order (first
// factor alternating fastest), 2k axial points, then center runs, repeated
// for each level of an optional categorical block factor.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/doe/design.hpp"

namespace grainscope::doe {

enum class AlphaMode { rotatable, face, inscribed };

inline AlphaMode parse_alpha_mode(const std::string& s) {
  if (s == "rotatable") return AlphaMode::rotatable;
  if (s == "face") return AlphaMode::face;
  if (s == "inscribed") return AlphaMode::inscribed;
  throw ConfigError("unknown alpha mode '" + s + "'");
}

struct CcdSpec {
  AlphaMode alpha_mode = AlphaMode::rotatable;
  std::optional<double> alpha;  // overrides the mode's default distance
  int center_points = 5;        // per block
  std::optional<FactorDef> block;

  static double rotatable_alpha(int k) { return std::pow(std::pow(2.0, k), 0.25); }

  double resolved_alpha(int k) const {
    if (alpha) return *alpha;
    switch (alpha_mode) {
      case AlphaMode::rotatable:
      case AlphaMode::inscribed:
        return rotatable_alpha(k);
      case AlphaMode::face:
        return 1.0;
    }
    return 1.0;
  }
};

inline std::size_t ccd_row_count(int k, const CcdSpec& spec) {
  const std::size_t blocks = spec.block ? spec.block->levels.size() : 1;
  return ((std::size_t{1} << k) + 2 * k + spec.center_points) * blocks;
}

/// Continuous factors form the leading columns; the block factor, if any,
/// is the last column.
inline DesignMatrix generate_ccd(const CcdSpec& spec, const std::vector<FactorDef>& continuous) {
  const int k = static_cast<int>(continuous.size());
  if (k < 2) throw ConfigError("a central composite design needs at least 2 continuous factors");
  if (k > 12) throw ConfigError("too many factors for a full-factorial cube");
  if (spec.center_points < 0) throw ConfigError("center point count must be >= 0");
  for (const auto& f : continuous) {
    if (!f.is_continuous()) throw ConfigError("CCD factor " + f.name + " is not continuous");
    f.validate();
  }
  const double alpha = spec.resolved_alpha(k);
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (spec.alpha_mode == AlphaMode::inscribed && alpha <= 1.0)
    throw ConfigError("inscribed CCD needs alpha > 1");
  const double cube = spec.alpha_mode == AlphaMode::inscribed ? 1.0 / alpha : 1.0;
  const double star = spec.alpha_mode == AlphaMode::inscribed ? 1.0 : alpha;

  std::vector<std::vector<double>> base;
  for (int i = 0; i < (1 << k); ++i) {
    std::vector<double> r(k);
    for (int j = 0; j < k; ++j) r[j] = (i >> j) & 1 ? cube : -cube;
    base.push_back(std::move(r));
  }
  for (int j = 0; j < k; ++j)
    for (double s : {-star, star}) {
      std::vector<double> r(k, 0.0);
      r[j] = s;
      base.push_back(std::move(r));
    }
  for (int c = 0; c < spec.center_points; ++c) base.emplace_back(k, 0.0);

  DesignMatrix d;
  d.kind = DesignKind::ccd;
  d.factors = continuous;
  if (spec.block) {
    spec.block->validate();
    d.factors.push_back(*spec.block);
    for (double level : spec.block->coded)
      for (auto r : base) {
        r.push_back(level);
        d.rows.push_back(std::move(r));
      }
  } else {
    d.rows = std::move(base);
  }
  return d;
}

}  // namespace grainscope::doe
