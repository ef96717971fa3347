#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grainscope/common/error.hpp"
#include "grainscope/stats/fdist.hpp"
#include "grainscope/stats/ols.hpp"

namespace grainscope::stats {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

enum class RowKind { model, group, term, error, lack_of_fit, pure_error, total };

struct AnovaRow {
  std::string source;
  RowKind kind = RowKind::term;
  int df = 0;
  double seq_ss = kUndefined;
  double contribution = kUndefined;  // percent of total SS (sequential)
  double adj_ss = kUndefined;
  double adj_ms = kUndefined;
  double f_value = kUndefined;
  double p_value = kUndefined;
  double vif = kUndefined;
};

struct ModelSummary {
  double s = kUndefined;
  double r2 = kUndefined;
  double r2_adj = kUndefined;
  double press = kUndefined;
  double r2_pred = kUndefined;      // floored at 0 for reporting
  double r2_pred_raw = kUndefined;  // unfloored
};

struct AnovaTable {
  std::vector<AnovaRow> rows;
  ModelSummary summary;
  std::vector<std::string> dropped_terms;

  const AnovaRow* find(const std::string& source) const {
    for (const auto& r : rows)
      if (r.source == source) return &r;
    return nullptr;
  }
  const AnovaRow& at(const std::string& source) const {
    if (auto* r = find(source)) return *r;
    throw ConfigError("no ANOVA row '" + source + "'");
  }
};

struct PressResult {
  double press = 0.0;
  double r2_pred = 0.0;  // floored at 0
  double r2_pred_raw = 0.0;
  Eigen::VectorXd leverage;
};

/// PRESS = sum (e_i / (1 - h_ii))^2 from the hat-matrix diagonal.
inline PressResult press_statistic(const RegressionModel& m) {
  const Eigen::Index n = m.x.rows(), p = m.x.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.x);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  PressResult r;
  r.leverage = q.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = r.leverage(i);
    if (h > 1.0 - 1e-10)
      throw DataError("observation " + std::to_string(i + 1) +
                      " has leverage 1; PRESS is undefined");
    const double e = m.fit.residuals(i) / (1.0 - h);
    r.press += e * e;
  }
  const double sst = (m.y.array() - m.y.mean()).square().sum();
  r.r2_pred_raw = sst > 0 ? 1.0 - r.press / sst : kUndefined;
  r.r2_pred = std::isnan(r.r2_pred_raw) ? kUndefined : std::max(0.0, r.r2_pred_raw);
  return r;
}

/// Variance inflation of one model column: 1 / (1 - R^2) of that column
/// regressed on every other column (intercept included).
inline double column_vif(const Eigen::MatrixXd& x, Eigen::Index col) {
  Eigen::MatrixXd others(x.rows(), x.cols() - 1);
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    if (c != col) others.col(k++) = x.col(c);
  const Eigen::VectorXd target = x.col(col);
  const double sst = (target.array() - target.mean()).square().sum();
  if (sst <= 0) return kUndefined;
  const auto f = fit_least_squares(others, target);
  const double r2 = 1.0 - f.sse / sst;
  return r2 >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
}

namespace detail {

inline double sse_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return fit_least_squares(x, y).sse;
}

inline const char* group_name(TermKind k) {
  switch (k) {
    case TermKind::linear: return "Linear";
    case TermKind::quadratic: return "Square";
    case TermKind::interaction: return "2-Way Interaction";
    default: return nullptr;
  }
}

// Observations sharing identical model-matrix rows form replicate groups.
inline std::pair<double, int> pure_error(const RegressionModel& m) {
  std::map<std::vector<double>, std::vector<double>> groups;
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    std::vector<double> key(m.x.cols());
    for (Eigen::Index c = 0; c < m.x.cols(); ++c) key[c] = m.x(r, c);
    groups[key].push_back(m.y(r));
  }
  double ss = 0;
  int df = 0;
  for (const auto& [k, ys] : groups) {
    if (ys.size() < 2) continue;
    double mean = 0;
    for (double v : ys) mean += v;
    mean /= static_cast<double>(ys.size());
    for (double v : ys) ss += (v - mean) * (v - mean);
    df += static_cast<int>(ys.size()) - 1;
  }
  return {ss, df};
}

}  // namespace detail

struct AnovaOptions {
  bool group_rows = true;    // Linear / Square / 2-Way Interaction subtotals
  bool lack_of_fit = true;   // split error when replicates exist
};

/// Sequential SS from incremental fits in term order, adjusted SS from
/// refits without the term (or term group), F against the full-model error.
inline AnovaTable anova_decompose(const RegressionModel& m, AnovaOptions opt = {}) {
  AnovaTable t;
  t.dropped_terms = m.dropped;
  const Eigen::Index n = m.x.rows();
  const double sse = m.fit.sse;
  const int df_err = static_cast<int>(m.df_error());
  const double mse = df_err > 0 ? sse / df_err : kUndefined;
  const double sst = (m.y.array() - m.y.mean()).square().sum();
  auto pct = [&](double ss) { return sst > 0 ? 100.0 * ss / sst : kUndefined; };
  auto finish = [&](AnovaRow& r) {
    r.adj_ms = r.df > 0 ? r.adj_ss / r.df : kUndefined;
    if (df_err > 0 && r.df > 0 && mse > 0) {
      r.f_value = r.adj_ms / mse;
      r.p_value = f_tail(r.f_value, r.df, df_err);
    }
    r.contribution = pct(r.seq_ss);
  };

  // Sequential SS per term (index 0 is the intercept).
  std::vector<double> seq(m.terms.size(), 0.0);
  double prev = detail::sse_of(m.leading(1), m.y);
  for (std::size_t k = 1; k < m.terms.size(); ++k) {
    const double cur = detail::sse_of(m.leading(k + 1), m.y);
    seq[k] = prev - cur;
    prev = cur;
  }

  AnovaRow model{"Model", RowKind::model};
  model.df = static_cast<int>(m.p() - 1);
  model.seq_ss = model.adj_ss = sst - sse;
  finish(model);
  t.rows.push_back(model);

  auto term_row = [&](std::size_t k) {
    AnovaRow r{m.terms[k].name, RowKind::term};
    r.df = static_cast<int>(m.blocks[k].second);
    r.seq_ss = seq[k];
    r.adj_ss = detail::sse_of(m.without({k}), m.y) - sse;
    finish(r);
    double vif = 0;
    for (Eigen::Index c = 0; c < m.blocks[k].second; ++c)
      vif = std::max(vif, column_vif(m.x, m.blocks[k].first + c));
    r.vif = vif;
    return r;
  };

  // Groups appear in order of first occurrence; group factors stand alone.
  std::vector<TermKind> order;
  for (std::size_t k = 1; k < m.terms.size(); ++k) {
    const auto kind = m.terms[k].kind;
    if (std::find(order.begin(), order.end(), kind) == order.end()) order.push_back(kind);
  }
  for (auto kind : order) {
    std::vector<std::size_t> members;
    for (std::size_t k = 1; k < m.terms.size(); ++k)
      if (m.terms[k].kind == kind) members.push_back(k);
    const char* gname = detail::group_name(kind);
    if (opt.group_rows && gname) {
      AnovaRow g{gname, RowKind::group};
      g.seq_ss = 0;
      for (auto k : members) {
        g.df += static_cast<int>(m.blocks[k].second);
        g.seq_ss += seq[k];
      }
      g.adj_ss = detail::sse_of(m.without(members), m.y) - sse;
      finish(g);
      t.rows.push_back(g);
    }
    for (auto k : members) t.rows.push_back(term_row(k));
  }

  AnovaRow err{"Error", RowKind::error};
  err.df = df_err;
  err.seq_ss = err.adj_ss = sse;
  err.adj_ms = mse;
  err.contribution = pct(sse);
  t.rows.push_back(err);

  if (opt.lack_of_fit) {
    const auto [pe_ss, pe_df] = detail::pure_error(m);
    const int lof_df = df_err - pe_df;
    if (pe_df > 0 && lof_df > 0) {
      AnovaRow lof{"Lack-of-Fit", RowKind::lack_of_fit};
      lof.df = lof_df;
      lof.seq_ss = lof.adj_ss = sse - pe_ss;
      lof.adj_ms = lof.adj_ss / lof_df;
      lof.contribution = pct(lof.seq_ss);
      AnovaRow pe{"Pure Error", RowKind::pure_error};
      pe.df = pe_df;
      pe.seq_ss = pe.adj_ss = pe_ss;
      pe.adj_ms = pe_ss / pe_df;
      pe.contribution = pct(pe_ss);
      if (pe.adj_ms > 0) {
        lof.f_value = lof.adj_ms / pe.adj_ms;
        lof.p_value = f_tail(lof.f_value, lof_df, pe_df);
      }
      t.rows.push_back(lof);
      t.rows.push_back(pe);
    }
  }

  AnovaRow total{"Total", RowKind::total};
  total.df = static_cast<int>(n - 1);
  total.seq_ss = sst;
  total.contribution = sst > 0 ? 100.0 : kUndefined;
  t.rows.push_back(total);

  auto& s = t.summary;
  s.s = std::sqrt(mse);
  s.r2 = sst > 0 ? 1.0 - sse / sst : kUndefined;
  s.r2_adj = sst > 0 && df_err > 0 ? 1.0 - mse / (sst / double(n - 1)) : kUndefined;
  try {
    const auto pr = press_statistic(m);
    s.press = pr.press;
    s.r2_pred = pr.r2_pred;
    s.r2_pred_raw = pr.r2_pred_raw;
  } catch (const DataError&) {
    // Leverage-1 observations leave PRESS undefined.
  }
  return t;
}

struct RunSummary {
  std::size_t n = 0;
  double mean = kUndefined;
  double sd = kUndefined;  // n-1 denominator; undefined for n < 2
  double se = kUndefined;
};

inline RunSummary summarize_runs(const std::vector<double>& values) {
  RunSummary r;
  r.n = values.size();
  if (values.empty()) return r;
  double sum = 0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n < 2) return r;
  double ss = 0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  r.se = r.sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

struct LevelMean {
  std::string factor;
  std::string level;
  std::size_t n = 0;
  double mean = 0.0;
};

/// Response mean per level of every factor (main-effects plot data).
inline std::vector<LevelMean> level_means(const ModelData& data, const std::vector<double>& y) {
  std::vector<LevelMean> out;
  for (const auto& c : data.columns) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < data.n; ++i) {
      const std::string key =
          c.role == FactorRole::group ? c.labels[i] : format_double(c.values[i], 6);
      if (!acc.count(key)) order.push_back(key);
      acc[key].first += y[i];
      acc[key].second += 1;
    }
    order = group_levels(order);
    for (const auto& k : order)
      out.push_back({c.name, k, acc[k].second, acc[k].first / double(acc[k].second)});
  }
  return out;
}

}  // namespace grainscope::stats
