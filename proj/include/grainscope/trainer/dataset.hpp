#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "grainscope/common/parallel.hpp"
#include "grainscope/common/rng.hpp"
#include "grainscope/imgprep/augment.hpp"
#include "grainscope/imgprep/io.hpp"
#include "grainscope/imgprep/manifest.hpp"
#include "grainscope/imgprep/ops.hpp"
#include "grainscope/nn/tensor.hpp"

namespace grainscope::train {

/// Network-ready tiles: NCHW floats in [0, 1], label 1 = good, 0 = bad.
struct LabeledSet {
  nn::Tensor4<float> x;
  std::vector<float> y;
  std::vector<std::string> ids;

  std::size_t size() const { return y.size(); }
  std::size_t count(float label) const { return static_cast<std::size_t>(std::count(y.begin(), y.end(), label)); }
};

inline void write_sample(const img::Raster& src, nn::Shape3 shape, std::span<float> out) {
  img::Raster r = img::resize_bilinear(src, shape.width, shape.height);
  if (shape.channels == 3) r = img::to_rgb(r);
  else if (shape.channels == 1) r = img::to_gray(r);
  else throw ConfigError("network input must have 1 or 3 channels");
  const std::size_t plane = static_cast<std::size_t>(shape.height) * shape.width;
  for (int c = 0; c < shape.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = r.data[i * shape.channels + c] / 255.0f;
}

/// In-memory labeled tile, before conversion to the network input shape.
struct TileSample {
  img::Raster image;
  float label = 0;
  std::string id;
};

inline LabeledSet to_labeled_set(const std::vector<TileSample>& tiles, const std::vector<std::size_t>& pick,
                                 nn::Shape3 shape, unsigned threads = 1) {
  LabeledSet s;
  s.x = nn::Tensor4<float>(static_cast<int>(pick.size()), shape);
  s.y.resize(pick.size());
  s.ids.resize(pick.size());
  parallel_for(pick.size(), threads, [&](std::size_t i) {
    const auto& t = tiles.at(pick[i]);
    write_sample(t.image, shape, s.x.sample(static_cast<int>(i)));
    s.y[i] = t.label;
    s.ids[i] = t.id;
  });
  return s;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

/// Good and bad tiles from a manifest; neutral and unlabeled entries are
/// skipped, as they are excluded from the binary dataset.
inline std::vector<TileSample> load_tiles(const img::TileManifest& m, unsigned threads = 1) {
  std::vector<const img::TileRecord*> keep;
  for (const auto& t : m.tiles)
    if (t.label == img::TileLabel::good || t.label == img::TileLabel::bad) keep.push_back(&t);
  std::vector<TileSample> out(keep.size());
  parallel_for(keep.size(), threads, [&](std::size_t i) {
    out[i].image = img::read_image(m.resolve(*keep[i]).string());
    out[i].label = keep[i]->label == img::TileLabel::good ? 1.0f : 0.0f;
    out[i].id = keep[i]->path;
  });
  return out;
}

struct SplitSizes {
  std::size_t train = 5020;
  std::size_t validation = 1600;
  std::size_t test = 800;

  std::size_t total() const { return train + validation + test; }
};

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

/// Seeded stratified split with equal good/bad counts in every part.
inline SplitIndices split_indices(const std::vector<float>& labels, SplitSizes sizes, std::uint64_t seed) {
  for (auto n : {sizes.train, sizes.validation, sizes.test})
    if (n % 2) throw ConfigError("split sizes must be even to balance classes");
  std::vector<std::size_t> good, bad;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] >= 0.5f ? good : bad).push_back(i);
  const std::size_t need = sizes.total() / 2;
  if (good.size() < need || bad.size() < need)
    throw DataError("split needs " + std::to_string(need) + " tiles per class; have " + std::to_string(good.size()) +
                    " good and " + std::to_string(bad.size()) + " bad");
  Rng rng(seed);
  rng.shuffle(good);
  rng.shuffle(bad);
  SplitIndices s;
  std::size_t at = 0;
  auto take = [&](std::vector<std::size_t>& dst, std::size_t n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      dst.push_back(good[at + k]);
      dst.push_back(bad[at + k]);
    }
    at += n / 2;
  };
  take(s.train, sizes.train);
  take(s.validation, sizes.validation);
  take(s.test, sizes.test);
  return s;
}

struct DatasetSplit {
  LabeledSet train, validation, test;
};

inline DatasetSplit split_dataset(const std::vector<TileSample>& tiles, SplitSizes sizes, std::uint64_t seed,
                                  nn::Shape3 shape, unsigned threads = 1) {
  std::vector<float> labels(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) labels[i] = tiles[i].label;
  const auto idx = split_indices(labels, sizes, seed);
  return {to_labeled_set(tiles, idx.train, shape, threads), to_labeled_set(tiles, idx.validation, shape, threads),
          to_labeled_set(tiles, idx.test, shape, threads)};
}

/// Tops each class up to `per_class` with augmented copies of its own tiles.
inline std::vector<TileSample> balance_by_augmentation(std::vector<TileSample> tiles, std::size_t per_class,
                                                       const img::AugmentParams& params, std::uint64_t seed) {
  for (float label : {1.0f, 0.0f}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < tiles.size(); ++i)
      if (tiles[i].label == label) members.push_back(i);
    if (members.empty() || members.size() >= per_class) continue;
    const std::size_t missing = per_class - members.size();
    for (std::size_t k = 0; k < missing; ++k) {
      const auto& src = tiles[members[k % members.size()]];
      Rng rng(derive_seed({seed, static_cast<std::uint64_t>(label), k}));
      tiles.push_back({img::augment(src.image, params, rng), label, src.id + "#aug" + std::to_string(k)});
    }
  }
  return tiles;
}

}  // namespace grainscope::train
