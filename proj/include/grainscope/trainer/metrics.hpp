#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>

namespace grainscope::train {

/// Positive class is "good grains".
struct ConfusionMatrix {
  long tn = 0, fp = 0, fn = 0, tp = 0;

  long total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Prediction threshold; a probability of exactly 0.5 counts as good.
inline constexpr double kDecisionThreshold = 0.5;

inline bool predicts_good(double p) { return p >= kDecisionThreshold; }

inline ConfusionMatrix count_confusion(std::span<const float> predicted, std::span<const float> labels) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool good = labels[i] >= 0.5f;
    const bool said_good = predicts_good(predicted[i]);
    if (good) (said_good ? cm.tp : cm.fn)++;
    else (said_good ? cm.fp : cm.tn)++;
  }
  return cm;
}

/// A rate with a zero denominator is undefined rather than NaN-producing
/// arithmetic; `defined()` tells them apart.
struct Rate {
  long num = 0, den = 0;
  bool defined() const { return den > 0; }
  double value() const { return defined() ? static_cast<double>(num) / den : std::numeric_limits<double>::quiet_NaN(); }
  std::string percent(int decimals = 2) const {
    if (!defined()) return "*";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f%%", decimals, 100.0 * value());
    return buf;
  }
};

struct ConfusionRates {
  Rate specificity, sensitivity, fpr, precision, accuracy;
};

inline ConfusionRates confusion_metrics(const ConfusionMatrix& c) {
  return {{c.tn, c.tn + c.fp}, {c.tp, c.tp + c.fn}, {c.fp, c.fp + c.tn}, {c.tp, c.tp + c.fp},
          {c.tn + c.tp, c.tn + c.fn + c.fp + c.tp}};
}

}  // namespace grainscope::train
