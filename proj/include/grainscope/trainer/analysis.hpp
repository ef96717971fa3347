#pragma once

#include <map>
#include <string>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/stats/anova.hpp"
#include "grainscope/stats/ols.hpp"

namespace grainscope::train {

struct ResponseData {
  stats::ModelData factors;
  std::map<std::string, std::vector<double>> responses;
  std::vector<std::size_t> imputed_rows;  // 0-based data rows
  bool has_groups = false;
};

/// Parses a response CSV for analysis. Faulted rows get, for every response,
/// the mean of the ok rows in the same replicate group and are listed in
/// `imputed_rows`.
inline ResponseData load_response_data(const CsvTable& t) {
  ResponseData d;
  const int status = t.column("status");
  const int rep = t.column("replicate");
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (h.size() < 3 || h[1] != ':' || (h[0] != 'x' && h[0] != 'c' && h[0] != 'g')) continue;
    const std::string name = h.substr(2);
    if (h[0] == 'g') {
      std::vector<std::string> labels;
      for (const auto& row : t.rows) labels.push_back(row.at(c));
      d.factors.add_group(name, labels);
      d.has_groups = true;
      continue;
    }
    std::vector<double> v;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      v.push_back(parse_double(t.rows[r].at(c), "row " + std::to_string(r + 2) + " column " + h));
    d.factors.add(name, h[0] == 'x' ? stats::FactorRole::continuous : stats::FactorRole::categorical, v);
  }
  if (d.factors.columns.empty()) throw DataError("response CSV has no x:/c:/g: factor columns");

  std::vector<bool> bad(t.rows.size(), false);
  if (status >= 0)
    for (std::size_t r = 0; r < t.rows.size(); ++r) bad[r] = t.rows[r].at(status) == "fault";
  for (std::size_t r = 0; r < bad.size(); ++r)
    if (bad[r]) d.imputed_rows.push_back(r);

  for (const auto& name : {"trn_acc", "val_acc", "tst_acc", "tpr", "tnr", "ppr", "fpr", "time"}) {
    const int c = t.column(name);
    if (c < 0) continue;
    std::vector<double> v(t.rows.size(), std::nan(""));
    std::map<std::string, std::pair<double, int>> group_sum;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (bad[r]) continue;
      const auto& cell = t.rows[r].at(c);
      if (cell.empty()) continue;  // undefined rate
      v[r] = parse_double(cell, "row " + std::to_string(r + 2) + " column " + name);
      auto& g = group_sum[rep >= 0 ? t.rows[r].at(rep) : ""];
      g.first += v[r];
      g.second += 1;
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (!bad[r]) continue;
      const auto it = group_sum.find(rep >= 0 ? t.rows[r].at(rep) : "");
      if (it != group_sum.end() && it->second.second > 0) v[r] = it->second.first / it->second.second;
    }
    d.responses[name] = std::move(v);
  }
  return d;
}

/// Full quadratic screening model for designs, main effects for groups.
inline std::string default_terms(const ResponseData& d) { return d.has_groups ? "@linear" : "@linear @quadratic"; }

struct ResponseAnalysis {
  std::string response;
  stats::AnovaTable table;
  std::vector<stats::LevelMean> level_means;
};

/// ANOVA for one response, skipping rows whose value is undefined.
inline ResponseAnalysis analyze_response(const ResponseData& d, const std::string& response, const std::string& terms,
                                         const stats::AnovaOptions& opt = {}) {
  const auto it = d.responses.find(response);
  if (it == d.responses.end()) throw ConfigError("unknown response '" + response + "'");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < it->second.size(); ++i)
    if (std::isfinite(it->second[i])) keep.push_back(i);
  stats::ModelData sub;
  for (const auto& col : d.factors.columns) {
    if (col.role == stats::FactorRole::group) {
      std::vector<std::string> l;
      for (auto i : keep) l.push_back(col.labels[i]);
      sub.add_group(col.name, l);
    } else {
      std::vector<double> v;
      for (auto i : keep) v.push_back(col.values[i]);
      sub.add(col.name, col.role, v);
    }
  }
  std::vector<double> y;
  for (auto i : keep) y.push_back(it->second[i]);
  ResponseAnalysis a;
  a.response = response;
  a.table = stats::anova_decompose(stats::fit_model(sub, stats::parse_terms(terms, sub), y), opt);
  a.level_means = stats::level_means(sub, y);
  return a;
}

}  // namespace grainscope::train
