#include "grainscope/cli/config.hpp"

#include <set>

#include "grainscope/common/hash.hpp"

namespace grainscope::cli {

namespace {

const std::set<std::string>& prep_keys() {
  static const std::set<std::string> k{"tile_w",          "tile_h",   "store_w",     "store_h",
                                       "black_threshold", "equalize", "jpeg_quality"};
  return k;
}

const std::set<std::string>& regime_keys() {
  static const std::set<std::string> k{"synth_size",      "good_seeds",    "bad_seeds",      "count_spread",
                                       "intensity_jitter", "boundary_width", "boundary_darkening",
                                       "noise_sigma",     "good_max_size", "bad_min_size",   "angle_step_deg"};
  return k;
}

bool parse_bool(const std::string& key, const std::string& v) {
  KeyValueDoc d;
  d.set(key, v);
  return d.get_bool(key);
}

}  // namespace

KeyValueDoc RunConfig::to_kv() const {
  KeyValueDoc d;
  d.set("profile", profile.name);
  const auto h = hyper.to_kv();
  for (const auto& [k, v] : h.entries()) d.set(k, v);
  prep.to_kv(d);
  d.set("augment_rotation_deg", augment.rotation_deg);
  d.set("augment_shift_frac", augment.shift_frac);
  d.set("augment_shear_deg", augment.shear_deg);
  d.set("augment_hflip", augment.hflip);
  d.set("augment_vflip", augment.vflip);
  regime.to_kv(d);
  d.set("synth_store", synth_store);
  d.set("split_train", static_cast<long long>(split.train));
  d.set("split_validation", static_cast<long long>(split.validation));
  d.set("split_test", static_cast<long long>(split.test));
  d.set("epochs", epochs);
  d.set("replicates", replicates);
  d.set("balance", balance);
  return d;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_kv().str())); }

void RunConfig::set(const std::string& key, const std::string& value) {
  KeyValueDoc one;
  one.set(key, value);
  if (prep_keys().count(key)) {
    prep.update_from(one);
  } else if (regime_keys().count(key)) {
    regime.update_from(one);
  } else if (key == "augment_rotation_deg") {
    augment.rotation_deg = parse_double(value, key);
  } else if (key == "augment_shift_frac") {
    augment.shift_frac = parse_double(value, key);
  } else if (key == "augment_shear_deg") {
    augment.shear_deg = parse_double(value, key);
  } else if (key == "augment_hflip") {
    augment.hflip = parse_bool(key, value);
  } else if (key == "augment_vflip") {
    augment.vflip = parse_bool(key, value);
  } else if (key == "synth_store") {
    synth_store = static_cast<int>(parse_int(value, key));
  } else if (key == "split_train") {
    split.train = static_cast<std::size_t>(parse_int(value, key));
  } else if (key == "split_validation") {
    split.validation = static_cast<std::size_t>(parse_int(value, key));
  } else if (key == "split_test") {
    split.test = static_cast<std::size_t>(parse_int(value, key));
  } else if (key == "epochs") {
    epochs = static_cast<int>(parse_int(value, key));
  } else if (key == "replicates") {
    replicates = static_cast<int>(parse_int(value, key));
  } else if (key == "balance") {
    balance = parse_bool(key, value);
  } else if (key == "profile") {
    // chosen by --profile; a config file may restate it but not change it
    if (value != profile.name) throw ConfigError("config says profile=" + value + " but --profile is " + profile.name);
  } else {
    hyper.set(key, value);
  }
}

RunConfig resolve_config(const ConfigFlags& flags) {
  RunConfig c;
  c.profile = train::profile_by_name(flags.profile);
  c.profile.apply(c.hyper);
  c.prep = c.profile.prep;
  c.regime.field.width = c.regime.field.height = c.profile.synth_size;
  c.synth_store = c.profile.synth_store;
  c.split = c.profile.split;
  if (flags.config_path) {
    const auto doc = KeyValueDoc::load(*flags.config_path);
    for (const auto& [k, v] : doc.entries()) c.set(k, v);
  }
  if (flags.epochs) c.epochs = *flags.epochs;
  if (flags.batch) c.hyper.batch = *flags.batch;
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.hyper.batch < 1) throw ConfigError("batch must be >= 1");
  if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (c.synth_store < 1) throw ConfigError("synth_store must be positive");
  c.prep.validate();
  c.augment.validate();
  c.regime.field.validate();
  return c;
}

KeyValueDoc RunManifest::to_kv() const {
  KeyValueDoc d;
  d.set("command", command);
  d.set("config_hash", config_hash);
  d.set("seed", std::to_string(seed));
  for (std::size_t i = 0; i < inputs.size(); ++i) d.set("input." + std::to_string(i + 1), inputs[i]);
  for (std::size_t i = 0; i < outputs.size(); ++i) d.set("output." + std::to_string(i + 1), outputs[i]);
  d.set("tool_version", version);
  return d;
}

void RunManifest::save(const std::string& path) const { to_kv().save(path); }

}  // namespace grainscope::cli
