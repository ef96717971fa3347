#pragma once

// Model terms, model-matrix construction and least-squares fitting by
// column-pivoted Householder QR.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grainscope/common/error.hpp"
#include "grainscope/common/kv.hpp"

namespace grainscope::stats {

enum class FactorRole { continuous, categorical, group };

/// Named predictor columns for n observations. Continuous and two-level
/// categorical factors hold coded numbers; group factors hold labels and
/// enter the model effect-coded.
struct ModelData {
  struct Column {
    std::string name;
    FactorRole role = FactorRole::continuous;
    std::vector<double> values;
    std::vector<std::string> labels;
  };

  std::size_t n = 0;
  std::vector<Column> columns;

  void add(std::string name, FactorRole role, std::vector<double> values) {
    if (role == FactorRole::group) throw ConfigError("group factors take labels");
    check_length(values.size());
    columns.push_back({std::move(name), role, std::move(values), {}});
  }
  void add_group(std::string name, std::vector<std::string> labels) {
    check_length(labels.size());
    columns.push_back({std::move(name), FactorRole::group, {}, std::move(labels)});
  }
  const Column& get(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw ConfigError("unknown factor '" + name + "' in model terms");
  }
  bool has(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return true;
    return false;
  }

 private:
  void check_length(std::size_t len) {
    if (columns.empty() && n == 0) n = len;
    if (len != n) throw DataError("factor column length does not match observation count");
  }
};

enum class TermKind { intercept, linear, quadratic, interaction, group };

struct Term {
  std::string name;
  TermKind kind = TermKind::linear;
  std::vector<std::string> factors;
};

inline Term make_term(const ModelData& data, const std::vector<std::string>& factors) {
  Term t;
  for (const auto& f : factors) data.get(f);
  if (factors.size() == 1) {
    t.kind = data.get(factors[0]).role == FactorRole::group ? TermKind::group : TermKind::linear;
  } else if (factors.size() == 2) {
    for (const auto& f : factors)
      if (data.get(f).role == FactorRole::group)
        throw ConfigError("interactions with group factors are not supported");
    t.kind = factors[0] == factors[1] ? TermKind::quadratic : TermKind::interaction;
  } else {
    throw ConfigError("only main, two-factor and squared terms are supported");
  }
  t.factors = factors;
  t.name = factors[0];
  for (std::size_t i = 1; i < factors.size(); ++i) t.name += "*" + factors[i];
  return t;
}

/// Parses a whitespace/comma separated term list: `A`, `A*B`, `A*A`, and the
/// shortcuts @linear (every factor), @quadratic (squares of continuous
/// factors) and @interactions (all pairs of non-group factors).
inline std::vector<Term> parse_terms(const std::string& spec, const ModelData& data) {
  std::vector<Term> terms;
  std::set<std::string> seen;
  auto push = [&](Term t) {
    if (seen.insert(t.name).second) terms.push_back(std::move(t));
  };
  std::string text = spec;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok == "@linear") {
      for (const auto& c : data.columns) push(make_term(data, {c.name}));
    } else if (tok == "@quadratic") {
      for (const auto& c : data.columns)
        if (c.role == FactorRole::continuous) push(make_term(data, {c.name, c.name}));
    } else if (tok == "@interactions") {
      for (std::size_t i = 0; i < data.columns.size(); ++i)
        for (std::size_t j = i + 1; j < data.columns.size(); ++j)
          if (data.columns[i].role != FactorRole::group && data.columns[j].role != FactorRole::group)
            push(make_term(data, {data.columns[i].name, data.columns[j].name}));
    } else {
      push(make_term(data, split(tok, '*')));
    }
  }
  if (terms.empty()) throw ConfigError("no model terms given");
  return terms;
}

/// Sorted distinct labels; numeric labels sort numerically.
inline std::vector<std::string> group_levels(const std::vector<std::string>& labels) {
  std::vector<std::string> lv(labels.begin(), labels.end());
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  bool numeric = true;
  for (const auto& l : lv) {
    try {
      parse_double(l);
    } catch (const DataError&) {
      numeric = false;
    }
  }
  if (numeric)
    std::sort(lv.begin(), lv.end(),
              [](const auto& a, const auto& b) { return parse_double(a) < parse_double(b); });
  return lv;
}

/// Columns contributed by a term: one for numeric terms, L-1 effect-coded
/// columns (last level = -1) for a group factor with L levels.
inline Eigen::MatrixXd term_columns(const ModelData& data, const Term& t) {
  const auto n = static_cast<Eigen::Index>(data.n);
  if (t.kind == TermKind::intercept) return Eigen::MatrixXd::Ones(n, 1);
  if (t.kind == TermKind::group) {
    const auto& col = data.get(t.factors[0]);
    const auto lv = group_levels(col.labels);
    if (lv.size() < 2) return Eigen::MatrixXd(n, 0);
    std::map<std::string, int> idx;
    for (std::size_t i = 0; i < lv.size(); ++i) idx[lv[i]] = static_cast<int>(i);
    const int L = static_cast<int>(lv.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, L - 1);
    for (Eigen::Index r = 0; r < n; ++r) {
      const int k = idx[col.labels[r]];
      if (k == L - 1) m.row(r).setConstant(-1.0);
      else m(r, k) = 1.0;
    }
    return m;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(n, 1);
  for (const auto& f : t.factors) {
    const auto& v = data.get(f).values;
    for (Eigen::Index r = 0; r < n; ++r) m(r, 0) *= v[r];
  }
  return m;
}

struct LeastSquaresFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double sse = 0.0;
  Eigen::Index rank = 0;
};

inline constexpr double kRankTolerance = 1e-10;

inline LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw ConfigError("design rows do not match response length");
  LeastSquaresFit f;
  if (x.cols() == 0) {
    f.beta = Eigen::VectorXd(0);
    f.fitted = Eigen::VectorXd::Zero(y.size());
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(kRankTolerance);
    f.rank = qr.rank();
    f.beta = qr.solve(y);
    f.fitted = x * f.beta;
  }
  f.residuals = y - f.fitted;
  f.sse = f.residuals.squaredNorm();
  return f;
}

inline Eigen::Index matrix_rank(const Eigen::MatrixXd& x) {
  if (x.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTolerance);
  return qr.rank();
}

/// Least-squares model over named terms. Terms whose columns are aliased
/// with earlier terms are dropped in entry order and listed in `dropped`.
struct RegressionModel {
  std::vector<Term> terms;  // retained, intercept first
  std::vector<std::string> dropped;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;  // (first column, width) per term
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  LeastSquaresFit fit;

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index df_error() const { return y.size() - x.cols(); }

  /// Model matrix with the listed term indices removed.
  Eigen::MatrixXd without(const std::vector<std::size_t>& remove) const {
    std::vector<Eigen::Index> keep;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (std::find(remove.begin(), remove.end(), t) != remove.end()) continue;
      for (Eigen::Index c = 0; c < blocks[t].second; ++c) keep.push_back(blocks[t].first + c);
    }
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) out.col(i) = x.col(keep[i]);
    return out;
  }

  /// Model matrix of terms [0, count).
  Eigen::MatrixXd leading(std::size_t count) const {
    const Eigen::Index cols = count == 0 ? 0 : blocks[count - 1].first + blocks[count - 1].second;
    return x.leftCols(cols);
  }
};

inline RegressionModel fit_model(const ModelData& data, const std::vector<Term>& terms,
                                 const std::vector<double>& y) {
  if (y.size() != data.n) throw DataError("response length does not match factor columns");
  RegressionModel m;
  m.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("response contains a non-finite value");
  std::vector<Term> all;
  all.push_back({"Intercept", TermKind::intercept, {}});
  all.insert(all.end(), terms.begin(), terms.end());
  m.x = Eigen::MatrixXd(static_cast<Eigen::Index>(data.n), 0);
  for (const auto& t : all) {
    Eigen::MatrixXd cols = term_columns(data, t);
    if (cols.cols() == 0) {
      m.dropped.push_back(t.name);
      continue;
    }
    Eigen::MatrixXd trial(m.x.rows(), m.x.cols() + cols.cols());
    trial << m.x, cols;
    if (matrix_rank(trial) < trial.cols()) {
      m.dropped.push_back(t.name);
      continue;
    }
    m.blocks.emplace_back(m.x.cols(), cols.cols());
    m.terms.push_back(t);
    m.x = std::move(trial);
  }
  if (m.x.cols() > m.x.rows())
    throw DataError("model has " + std::to_string(m.x.cols()) + " columns for " +
                    std::to_string(m.x.rows()) + " observations");
  m.fit = fit_least_squares(m.x, m.y);
  return m;
}

}  // namespace grainscope::stats
