#pragma once

// Definitive screening designs from conference matrices: fold-over pairs
// (C_i, -C_i) plus center runs. Two-level categorical columns replace the
// conference zeros with +1/-1 and use two center runs (categoricals all -1
// and all +1).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/doe/conference.hpp"
#include "grainscope/doe/design.hpp"

namespace grainscope::doe {

/// Factors keep their order as design columns.
inline DesignMatrix generate_dsd(const std::vector<FactorDef>& factors) {
  const int m = static_cast<int>(factors.size());
  const int continuous = static_cast<int>(
      std::count_if(factors.begin(), factors.end(), [](const auto& f) { return f.is_continuous(); }));
  if (continuous < 4)
    throw ConfigError("a definitive screening design needs at least 4 continuous factors");
  for (const auto& f : factors) f.validate();
  const int order = m % 2 == 0 ? m : m + 1;
  const IntMatrix c = conference_matrix(order);
  const bool has_categorical = continuous < m;

  DesignMatrix d;
  d.kind = DesignKind::dsd;
  d.factors = factors;
  for (int i = 0; i < order; ++i) {
    std::vector<double> plus(m), minus(m);
    for (int j = 0; j < m; ++j) {
      int v = c[i][j];
      if (v == 0 && !factors[j].is_continuous()) v = 1;
      plus[j] = v;
      minus[j] = -v;
    }
    d.rows.push_back(std::move(plus));
    d.rows.push_back(std::move(minus));
  }
  if (has_categorical) {
    for (double level : {-1.0, 1.0}) {
      std::vector<double> center(m, 0.0);
      for (int j = 0; j < m; ++j)
        if (!factors[j].is_continuous()) center[j] = level;
      d.rows.push_back(std::move(center));
    }
  } else {
    d.rows.emplace_back(m, 0.0);
  }
  return d;
}

inline DesignMatrix generate_dsd(std::vector<FactorDef> continuous,
                                 const std::vector<FactorDef>& categorical) {
  continuous.insert(continuous.end(), categorical.begin(), categorical.end());
  return generate_dsd(continuous);
}

struct DsdViolation {
  std::string check;  // "fold-over", "orthogonality", "center", "row-count", "levels"
  int row = -1;       // 0-based standard-order row, -1 when not row-specific
  std::vector<int> columns;
  std::string detail;
};

struct DsdReport {
  std::vector<DsdViolation> violations;
  double max_main_quadratic_correlation = 0.0;
  std::size_t center_rows = 0;
  std::size_t fold_pairs = 0;

  bool ok() const noexcept { return violations.empty(); }
  bool passed(const std::string& check) const {
    for (const auto& v : violations)
      if (v.check == check) return false;
    return true;
  }
};

namespace detail {

inline bool is_center(const DesignMatrix& m, std::size_t r) {
  for (std::size_t c = 0; c < m.factors.size(); ++c)
    if (m.factors[c].is_continuous() && m.rows[r][c] != 0.0) return false;
  return true;
}

inline std::vector<int> negation_mismatches(const std::vector<double>& a,
                                            const std::vector<double>& b) {
  std::vector<int> out;
  for (std::size_t c = 0; c < a.size(); ++c)
    if (std::abs(a[c] + b[c]) > 1e-12) out.push_back(static_cast<int>(c));
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

/// Structural checks: every non-center row has a negated mate, continuous
/// main-effect columns are uncorrelated with every squared column, center
/// rows exist, and the row count is 2m+1 (2m+2 with categorical factors)
/// for even m.
inline DsdReport validate_dsd(const DesignMatrix& m) {
  DsdReport rep;
  const std::size_t n = m.rows.size(), k = m.factors.size();
  for (std::size_t r = 0; r < n; ++r)
    if (m.rows[r].size() != k) {
      rep.violations.push_back({"levels", static_cast<int>(r), {}, "row length mismatch"});
      return rep;
    }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      const double v = m.rows[r][c];
      const bool ok = m.factors[c].is_continuous() ? (v == -1 || v == 0 || v == 1)
                                                   : (v == -1 || v == 1);
      if (!ok)
        rep.violations.push_back({"levels", static_cast<int>(r), {static_cast<int>(c)},
                                  "coded value " + format_double(v) + " is not a DSD level"});
    }

  // Fold-over: prefer the adjacent standard-order mate, else any unmatched row.
  std::vector<bool> matched(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    if (detail::is_center(m, r)) {
      matched[r] = true;
      ++rep.center_rows;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (matched[r]) continue;
    std::vector<std::size_t> candidates;
    if (r % 2 == 0 && r + 1 < n) candidates.push_back(r + 1);
    for (std::size_t s = r + 1; s < n; ++s) candidates.push_back(s);
    for (auto s : candidates) {
      if (matched[s]) continue;
      if (detail::negation_mismatches(m.rows[r], m.rows[s]).empty()) {
        matched[r] = matched[s] = true;
        ++rep.fold_pairs;
        break;
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (matched[r]) continue;
    // Name the closest mate to make the violation actionable.
    std::size_t best = n;
    std::vector<int> best_cols;
    for (std::size_t s = 0; s < n; ++s) {
      if (s == r || detail::is_center(m, s)) continue;
      auto mis = detail::negation_mismatches(m.rows[r], m.rows[s]);
      if (best == n || mis.size() < best_cols.size()) {
        best = s;
        best_cols = std::move(mis);
      }
    }
    rep.violations.push_back(
        {"fold-over", static_cast<int>(r), best_cols,
         best == n ? "no fold-over mate"
                   : "no fold-over mate; nearest is row " + std::to_string(best + 1)});
  }

  if (rep.center_rows == 0) rep.violations.push_back({"center", -1, {}, "no center row"});

  std::vector<std::size_t> cont;
  for (std::size_t c = 0; c < k; ++c)
    if (m.factors[c].is_continuous()) cont.push_back(c);
  for (auto a : cont) {
    std::vector<double> x(n);
    for (std::size_t r = 0; r < n; ++r) x[r] = m.rows[r][a];
    for (auto b : cont) {
      std::vector<double> q(n);
      for (std::size_t r = 0; r < n; ++r) q[r] = m.rows[r][b] * m.rows[r][b];
      const double corr = std::abs(detail::pearson(x, q));
      rep.max_main_quadratic_correlation = std::max(rep.max_main_quadratic_correlation, corr);
      if (corr > 1e-12)
        rep.violations.push_back({"orthogonality", -1, {static_cast<int>(a), static_cast<int>(b)},
                                  "main effect correlated with squared column (r=" +
                                      format_double(corr) + ")"});
    }
  }

  // 2p+1 rows (2p+2 with categoricals) for the conference order p used:
  // p = m or m+1 normally, larger when extra columns were dropped.
  const bool categorical = cont.size() < k;
  const std::size_t centers = categorical ? 2 : 1;
  const std::size_t min_order = k % 2 == 0 ? k : k + 1;
  const bool count_ok = n >= centers && (n - centers) % 4 == 0 && (n - centers) / 2 >= min_order &&
                        rep.center_rows == centers;
  if (!count_ok)
    rep.violations.push_back({"row-count", -1, {},
                              std::to_string(n) + " rows with " + std::to_string(rep.center_rows) +
                                  " center rows, expected " +
                                  std::to_string(2 * min_order + centers)});
  return rep;
}

}  // namespace grainscope::doe
