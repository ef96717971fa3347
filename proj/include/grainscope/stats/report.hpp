#pragma once

// ANOVA table rendering: aligned text and CSV, columns Source, DF, Seq SS,
// Contribution, Adj SS, Adj MS, F-Value, P-Value, VIF.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/stats/anova.hpp"

namespace grainscope::stats {

inline std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "*";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Three decimals, so anything below 0.0005 prints as 0.000.
inline std::string format_p(double p) { return fixed(p, 3); }

inline std::string format_percent(double v, int decimals = 2) {
  return std::isnan(v) ? "*" : fixed(v, decimals) + "%";
}

inline std::string render_anova_text(const AnovaTable& t, const std::string& title = "") {
  const std::vector<std::string> head{"Source", "DF",     "Seq SS",  "Contribution", "Adj SS",
                                      "Adj MS", "F-Value", "P-Value", "VIF"};
  std::vector<std::vector<std::string>> cells{head};
  for (const auto& r : t.rows) {
    const bool indent = r.kind == RowKind::term || r.kind == RowKind::lack_of_fit ||
                        r.kind == RowKind::pure_error;
    cells.push_back({(indent ? "  " : "") + r.source, std::to_string(r.df), fixed(r.seq_ss, 5),
                     format_percent(r.contribution),
                     r.kind == RowKind::total ? "" : fixed(r.adj_ss, 5),
                     r.kind == RowKind::total ? "" : fixed(r.adj_ms, 5),
                     std::isnan(r.f_value) ? "" : fixed(r.f_value, 2),
                     std::isnan(r.p_value) ? "" : format_p(r.p_value),
                     std::isnan(r.vif) ? "" : fixed(r.vif, 2)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  if (!title.empty()) os << title << "\n\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        os << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        os << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    os << '\n';
  }
  const auto& s = t.summary;
  os << "\nModel Summary\n";
  os << "  S " << fixed(s.s, 6) << "  R-sq " << format_percent(100 * s.r2)
     << "  R-sq(adj) " << format_percent(100 * s.r2_adj) << "  PRESS " << fixed(s.press, 6)
     << "  R-sq(pred) " << format_percent(100 * s.r2_pred) << '\n';
  if (!t.dropped_terms.empty()) {
    os << "\nAliased terms dropped:";
    for (const auto& d : t.dropped_terms) os << ' ' << d;
    os << '\n';
  }
  return os.str();
}

inline CsvTable anova_to_csv(const AnovaTable& t) {
  CsvTable c;
  c.header = {"source", "kind", "df", "seq_ss", "contribution_pct", "adj_ss", "adj_ms",
              "f_value", "p_value", "vif"};
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v, 10); };
  static const char* kinds[] = {"model", "group", "term", "error", "lack_of_fit", "pure_error",
                                "total"};
  for (const auto& r : t.rows)
    c.rows.push_back({r.source, kinds[static_cast<int>(r.kind)], std::to_string(r.df),
                      num(r.seq_ss), num(r.contribution), num(r.adj_ss), num(r.adj_ms),
                      num(r.f_value), num(r.p_value), num(r.vif)});
  const auto& s = t.summary;
  c.rows.push_back({"S", "summary", "", num(s.s), "", "", "", "", "", ""});
  c.rows.push_back({"R-sq", "summary", "", num(s.r2), "", "", "", "", "", ""});
  c.rows.push_back({"R-sq(adj)", "summary", "", num(s.r2_adj), "", "", "", "", "", ""});
  c.rows.push_back({"PRESS", "summary", "", num(s.press), "", "", "", "", "", ""});
  c.rows.push_back({"R-sq(pred)", "summary", "", num(s.r2_pred), "", "", "", "", "", ""});
  return c;
}

}  // namespace grainscope::stats
