#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/common/kv.hpp"
#include "grainscope/nn/model_spec.hpp"

namespace grainscope::doe {

enum class FactorClass { training, cnn_layer };
enum class FactorType { continuous, categorical };

inline const char* to_string(FactorClass c) { return c == FactorClass::training ? "training" : "cnn-layer"; }
inline const char* to_string(FactorType t) {
  return t == FactorType::continuous ? "continuous" : "categorical";
}
inline FactorClass parse_factor_class(const std::string& s) {
  if (s == "training") return FactorClass::training;
  if (s == "cnn-layer" || s == "cnn_layer") return FactorClass::cnn_layer;
  throw ConfigError("unknown factor class '" + s + "'");
}
inline FactorType parse_factor_type(const std::string& s) {
  if (s == "continuous") return FactorType::continuous;
  if (s == "categorical") return FactorType::categorical;
  throw ConfigError("unknown factor type '" + s + "'");
}

/// One experimental factor. `levels[i]` is the raw setting for coded value
/// `coded[i]`; numeric continuous factors additionally map any coded value
/// linearly (raw = center + coded * half_range), which CCD star points need.
/// `key` names the Hyperparams setting the factor drives.
struct FactorDef {
  std::string name;
  std::string key;
  FactorClass factor_class = FactorClass::training;
  FactorType type = FactorType::continuous;
  std::vector<std::string> levels;
  std::vector<double> coded;
  std::optional<double> center;
  std::optional<double> half_range;

  bool is_continuous() const noexcept { return type == FactorType::continuous; }
  bool is_linear() const noexcept { return center.has_value() && half_range.has_value(); }

  void validate() const {
    if (name.empty()) throw ConfigError("factor without a name");
    if (levels.size() != coded.size())
      throw ConfigError("factor " + name + ": levels and coded values differ in length");
    if (type == FactorType::categorical && levels.size() != 2)
      throw ConfigError("categorical factor " + name + " must have exactly 2 levels");
    if (type == FactorType::continuous && levels.size() != 3 && !is_linear())
      throw ConfigError("continuous factor " + name + " needs 3 levels or a linear map");
    if (half_range && !(*half_range > 0.0))
      throw ConfigError("factor " + name + ": half range must be positive");
  }

  /// Canonical form of a raw setting, so "S", "Same" and "same" compare equal.
  std::string canonical(const std::string& raw) const {
    if (key.empty() || !nn::Hyperparams::is_key(key)) return nn::lower(trim(raw));
    nn::Hyperparams probe;
    probe.set(key, raw);
    return probe.to_kv().get(key);
  }

  std::string raw_of(double code) const {
    for (std::size_t i = 0; i < coded.size(); ++i)
      if (std::abs(coded[i] - code) < 1e-9) return levels[i];
    if (is_continuous() && is_linear()) return format_double(*center + code * *half_range, 12);
    throw ConfigError("factor " + name + ": coded value " + format_double(code) +
                      " maps to no level");
  }

  double code_of(const std::string& raw) const {
    const std::string c = canonical(raw);
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (canonical(levels[i]) == c) return coded[i];
    if (is_continuous() && is_linear()) {
      const double v = parse_double(raw, name);
      for (std::size_t i = 0; i < levels.size(); ++i) {
        try {
          if (std::abs(parse_double(levels[i]) - v) < 1e-12) return coded[i];
        } catch (const DataError&) {
        }
      }
      return (v - *center) / *half_range;
    }
    throw ConfigError("factor " + name + ": setting '" + raw + "' is not a defined level");
  }

  void to_kv(KeyValueDoc& kv, const std::string& prefix) const {
    kv.set(prefix + "name", name);
    kv.set(prefix + "key", key);
    kv.set(prefix + "class", to_string(factor_class));
    kv.set(prefix + "type", to_string(type));
    std::string lv, cd;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      lv += (i ? "," : "") + levels[i];
      cd += (i ? "," : "") + format_double(coded[i], 17);
    }
    kv.set(prefix + "levels", lv);
    kv.set(prefix + "coded", cd);
    if (center) kv.set(prefix + "center", *center);
    if (half_range) kv.set(prefix + "half_range", *half_range);
  }

  static FactorDef from_kv(const KeyValueDoc& kv, const std::string& prefix) {
    FactorDef f;
    f.name = kv.get(prefix + "name");
    f.key = kv.get_or(prefix + "key", "");
    f.factor_class = parse_factor_class(kv.get(prefix + "class"));
    f.type = parse_factor_type(kv.get(prefix + "type"));
    const auto lv = kv.get(prefix + "levels");
    if (!lv.empty()) f.levels = split(lv, ',');
    const auto cd = kv.get(prefix + "coded");
    if (!cd.empty())
      for (const auto& c : split(cd, ',')) f.coded.push_back(parse_double(c, prefix + "coded"));
    if (kv.has(prefix + "center")) f.center = kv.get_double(prefix + "center");
    if (kv.has(prefix + "half_range")) f.half_range = kv.get_double(prefix + "half_range");
    f.validate();
    return f;
  }
};

/// Three-level continuous factor coded -1/0/+1, linear when numeric.
inline FactorDef continuous_factor(std::string name, std::string key, FactorClass cls,
                                   std::vector<std::string> levels, bool linear = true) {
  FactorDef f;
  f.name = std::move(name);
  f.key = std::move(key);
  f.factor_class = cls;
  f.type = FactorType::continuous;
  f.levels = std::move(levels);
  f.coded = {-1.0, 0.0, 1.0};
  if (linear) {
    const double lo = parse_double(f.levels.front(), f.name);
    const double hi = parse_double(f.levels.back(), f.name);
    f.center = (lo + hi) / 2;
    f.half_range = (hi - lo) / 2;
  }
  f.validate();
  return f;
}

/// Continuous factor given by center and half range (CCD style).
inline FactorDef linear_factor(std::string name, std::string key, FactorClass cls, double center,
                               double half_range) {
  FactorDef f;
  f.name = std::move(name);
  f.key = std::move(key);
  f.factor_class = cls;
  f.type = FactorType::continuous;
  f.center = center;
  f.half_range = half_range;
  f.levels = {format_double(center - half_range, 12), format_double(center, 12),
              format_double(center + half_range, 12)};
  f.coded = {-1.0, 0.0, 1.0};
  f.validate();
  return f;
}

/// Two-level categorical factor coded -1 (first level) / +1 (second level).
inline FactorDef categorical_factor(std::string name, std::string key, FactorClass cls,
                                    std::string low, std::string high) {
  FactorDef f;
  f.name = std::move(name);
  f.key = std::move(key);
  f.factor_class = cls;
  f.type = FactorType::categorical;
  f.levels = {std::move(low), std::move(high)};
  f.coded = {-1.0, 1.0};
  f.validate();
  return f;
}

}  // namespace grainscope::doe
