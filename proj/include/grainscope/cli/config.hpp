#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grainscope/common/kv.hpp"
#include "grainscope/imgprep/augment.hpp"
#include "grainscope/imgprep/pipeline.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/synthgrain/generate.hpp"
#include "grainscope/trainer/profile.hpp"

namespace grainscope::cli {

inline constexpr const char* kToolVersion = "grainscope 0.1.0";

/// Everything a command may depend on, resolved as profile defaults, then
/// the config file, then command-line flags.
struct RunConfig {
  train::Profile profile;
  nn::Hyperparams hyper;
  img::PrepOptions prep;
  img::AugmentParams augment;
  grain::RegimeSpec regime;
  int synth_store = 0;
  train::SplitSizes split;
  int epochs = 35;
  int replicates = 2;
  bool balance = true;  // augment the short class up to the split's needs

  KeyValueDoc to_kv() const;
  std::string hash() const;  // hex digest of to_kv()
  void set(const std::string& key, const std::string& value);
};

struct ConfigFlags {
  std::string profile = "paper";
  std::optional<std::string> config_path;
  std::optional<int> epochs;
  std::optional<int> batch;
};

RunConfig resolve_config(const ConfigFlags& flags);

/// One per artifact-producing command, written next to its outputs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = kToolVersion;

  KeyValueDoc to_kv() const;
  void save(const std::string& path) const;
};

}  // namespace grainscope::cli
