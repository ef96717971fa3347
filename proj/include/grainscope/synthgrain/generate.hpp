#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "grainscope/common/kv.hpp"
#include "grainscope/common/rng.hpp"
#include "grainscope/imgprep/manifest.hpp"
#include "grainscope/imgprep/raster.hpp"
#include "grainscope/synthgrain/geometry.hpp"
#include "grainscope/synthgrain/measure.hpp"

namespace grainscope::grain {

struct GrainFieldSpec {
  int width = 140;
  int height = 140;
  int seed_count = 200;
  double base_intensity = 165;
  double intensity_jitter = 35;  // per-cell uniform offset range
  double boundary_width = 1.2;   // px from the bisector
  double boundary_darkening = 0.7;
  double noise_sigma = 6;
  std::uint64_t seed = 0;

  void validate() const {
    if (width < 1 || height < 1) throw ConfigError("tile size must be positive");
    if (seed_count < 1) throw ConfigError("seed_count must be at least 1");
    if (intensity_jitter < 0 || boundary_width < 0 || noise_sigma < 0) throw ConfigError("negative grain knob");
    if (boundary_darkening < 0 || boundary_darkening > 1) throw ConfigError("boundary_darkening must be in [0, 1]");
  }
};

struct GrainTile {
  img::Raster gray;  // single channel
  std::vector<Point> sites;
  std::vector<Polygon> cells;
};

/// Pure function of the spec: sites, per-cell shade, boundary darkening by
/// distance to the nearest bisector, then pixel noise.
inline GrainTile generate_tile(const GrainFieldSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  GrainTile t;
  t.sites.resize(spec.seed_count);
  for (auto& s : t.sites) s = {rng.uniform(0, spec.width), rng.uniform(0, spec.height)};
  std::vector<double> shade(spec.seed_count);
  for (auto& v : shade) v = spec.base_intensity + rng.uniform(-spec.intensity_jitter, spec.intensity_jitter);
  t.cells = voronoi_cells(t.sites, spec.width, spec.height);

  t.gray = img::Raster(spec.width, spec.height, 1);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      std::size_t i1 = 0, i2 = 0;
      double d1 = 1e300, d2 = 1e300;
      for (std::size_t i = 0; i < t.sites.size(); ++i) {
        const double dx = px - t.sites[i].x, dy = py - t.sites[i].y;
        const double d = dx * dx + dy * dy;
        if (d < d1) {
          d2 = d1;
          i2 = i1;
          d1 = d;
          i1 = i;
        } else if (d < d2) {
          d2 = d;
          i2 = i;
        }
      }
      double v = shade[i1];
      if (t.sites.size() > 1 && spec.boundary_width > 0) {
        const double gx = t.sites[i2].x - t.sites[i1].x, gy = t.sites[i2].y - t.sites[i1].y;
        const double dist = (d2 - d1) / (2 * std::sqrt(gx * gx + gy * gy));
        if (dist < spec.boundary_width) v *= 1 - spec.boundary_darkening * (1 - dist / spec.boundary_width);
      }
      if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.normal();
      t.gray.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return t;
}

struct LabelThresholds {
  double good_max = 20;
  double bad_min = 40;

  void validate() const {
    if (!(good_max < bad_min)) throw ConfigError("good_max_size must be below bad_min_size");
  }
};

inline img::TileLabel label_for_size(double mean_size, const LabelThresholds& th) {
  th.validate();
  if (mean_size <= th.good_max) return img::TileLabel::good;
  if (mean_size >= th.bad_min) return img::TileLabel::bad;
  return img::TileLabel::neutral;
}

inline img::TileLabel label_tile(const std::vector<Polygon>& cells, const LabelThresholds& th,
                                 double step_deg = 1.0) {
  return label_for_size(mean_grain_size(cells, step_deg), th);
}

/// Seed-count regimes for the two classes; counts are drawn uniformly from
/// [nominal*(1-spread), nominal*(1+spread)].
struct RegimeSpec {
  GrainFieldSpec field;
  int good_seeds = 200;
  int bad_seeds = 8;
  double count_spread = 0;
  LabelThresholds thresholds;
  double step_deg = 1.0;

  void update_from(const KeyValueDoc& d) {
    if (d.has("synth_size")) field.width = field.height = static_cast<int>(d.get_int("synth_size"));
    if (d.has("good_seeds")) good_seeds = static_cast<int>(d.get_int("good_seeds"));
    if (d.has("bad_seeds")) bad_seeds = static_cast<int>(d.get_int("bad_seeds"));
    if (d.has("count_spread")) count_spread = d.get_double("count_spread");
    if (d.has("intensity_jitter")) field.intensity_jitter = d.get_double("intensity_jitter");
    if (d.has("boundary_width")) field.boundary_width = d.get_double("boundary_width");
    if (d.has("boundary_darkening")) field.boundary_darkening = d.get_double("boundary_darkening");
    if (d.has("noise_sigma")) field.noise_sigma = d.get_double("noise_sigma");
    if (d.has("good_max_size")) thresholds.good_max = d.get_double("good_max_size");
    if (d.has("bad_min_size")) thresholds.bad_min = d.get_double("bad_min_size");
    if (d.has("angle_step_deg")) step_deg = d.get_double("angle_step_deg");
  }

  void to_kv(KeyValueDoc& d) const {
    d.set("synth_size", field.width);
    d.set("good_seeds", good_seeds);
    d.set("bad_seeds", bad_seeds);
    d.set("count_spread", count_spread);
    d.set("intensity_jitter", field.intensity_jitter);
    d.set("boundary_width", field.boundary_width);
    d.set("boundary_darkening", field.boundary_darkening);
    d.set("noise_sigma", field.noise_sigma);
    d.set("good_max_size", thresholds.good_max);
    d.set("bad_min_size", thresholds.bad_min);
    d.set("angle_step_deg", step_deg);
  }
};

struct SyntheticTile {
  img::Raster gray;
  img::TileLabel label;
  double mean_size;
  int seed_count;
  std::uint64_t seed;
  int attempt;  // draws rejected before this one
};

/// Draws tiles from the requested regime until the measured label agrees,
/// so a request for n good and n bad yields exactly n of each.
inline SyntheticTile synth_labeled(const RegimeSpec& r, img::TileLabel want, std::uint64_t master, std::uint64_t index,
                                   int max_attempts = 64) {
  const bool good = want == img::TileLabel::good;
  if (!good && want != img::TileLabel::bad) throw ConfigError("synthetic tiles are requested as good or bad");
  const int nominal = good ? r.good_seeds : r.bad_seeds;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t seed = derive_seed({master, good ? 1u : 2u, index, static_cast<std::uint64_t>(attempt)});
    Rng rng(seed);
    GrainFieldSpec f = r.field;
    const double lo = nominal * (1 - r.count_spread), hi = nominal * (1 + r.count_spread);
    f.seed_count = std::max(1, static_cast<int>(std::lround(rng.uniform(lo, hi))));
    f.seed = rng.next();
    auto tile = generate_tile(f);
    const double size = mean_grain_size(tile.cells, r.step_deg);
    const auto label = label_for_size(size, r.thresholds);
    if (label == want) return {std::move(tile.gray), label, size, f.seed_count, f.seed, attempt};
  }
  throw ConfigError("synthetic regime never produced a '" + img::to_string(want) +
                    "' tile; check seed counts against the size thresholds");
}

}  // namespace grainscope::grain
