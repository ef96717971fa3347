#pragma once

#include <array>
#include <string>

#include "grainscope/imgprep/pipeline.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/trainer/dataset.hpp"

namespace grainscope::train {

/// Sizes that differ between full-scale runs and fast desk/CI runs.
struct Profile {
  std::string name;
  img::PrepOptions prep;
  nn::Shape3 input;
  std::array<int, 3> filters;
  int dense_units;
  int synth_size;   // generated tile edge, px
  int synth_store;  // stored tile edge, px
  SplitSizes split;

  void apply(nn::Hyperparams& h) const {
    h.input = input;
    h.filters = filters;
    h.dense_units = dense_units;
  }
};

inline Profile paper_profile() {
  Profile p;
  p.name = "paper";
  p.input = {3, 140, 140};
  p.filters = {32, 32, 64};
  p.dense_units = 64;
  p.synth_size = 140;
  p.synth_store = 140;
  p.split = {5020, 1600, 800};
  return p;
}

/// 64x64 tiles and a quarter of the filters; the dense width is unchanged.
inline Profile tiny_profile() {
  Profile p;
  p.name = "tiny";
  p.prep.tile_w = 140;
  p.prep.tile_h = 140;
  p.prep.store_w = 64;
  p.prep.store_h = 64;
  p.input = {3, 64, 64};
  p.filters = {8, 8, 16};
  p.dense_units = 64;
  p.synth_size = 140;
  p.synth_store = 64;
  p.split = {600, 200, 200};
  return p;
}

inline Profile profile_by_name(const std::string& name) {
  if (name == "paper") return paper_profile();
  if (name == "tiny") return tiny_profile();
  throw ConfigError("unknown profile '" + name + "' (expected paper or tiny)");
}

}  // namespace grainscope::train
