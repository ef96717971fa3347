#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/common/error.hpp"
#include "grainscope/common/kv.hpp"
#include "grainscope/common/rng.hpp"
#include "grainscope/doe/factor.hpp"
#include "grainscope/nn/model_spec.hpp"

namespace grainscope::doe {

enum class DesignKind { dsd, ccd, custom };

inline const char* to_string(DesignKind k) {
  switch (k) {
    case DesignKind::dsd: return "dsd";
    case DesignKind::ccd: return "ccd";
    case DesignKind::custom: return "custom";
  }
  return "custom";
}
inline DesignKind parse_design_kind(const std::string& s) {
  if (s == "dsd") return DesignKind::dsd;
  if (s == "ccd") return DesignKind::ccd;
  if (s == "custom") return DesignKind::custom;
  throw ConfigError("unknown design kind '" + s + "'");
}

/// Coded experiment plan. Rows are kept in standard order; `run_order[i]`
/// is the standard-order index executed i-th.
struct DesignMatrix {
  DesignKind kind = DesignKind::custom;
  std::string name;
  std::vector<FactorDef> factors;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> run_order;
  int replicate_count = 1;

  std::size_t size() const noexcept { return rows.size(); }

  int factor_index(const std::string& factor_name) const {
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (factors[i].name == factor_name) return static_cast<int>(i);
    return -1;
  }

  std::string raw(std::size_t row, std::size_t col) const {
    return factors.at(col).raw_of(rows.at(row).at(col));
  }

  void validate() const {
    for (const auto& f : factors) f.validate();
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (rows[r].size() != factors.size())
        throw ConfigError("design row " + std::to_string(r + 1) + " has " +
                          std::to_string(rows[r].size()) + " entries for " +
                          std::to_string(factors.size()) + " factors");
    if (!run_order.empty()) {
      if (run_order.size() != rows.size()) throw ConfigError("run order length mismatch");
      std::vector<bool> seen(rows.size(), false);
      for (auto i : run_order) {
        if (i >= rows.size() || seen[i]) throw ConfigError("run order is not a permutation");
        seen[i] = true;
      }
    }
    if (replicate_count < 1) throw ConfigError("replicate count must be >= 1");
  }

  /// Execution order, standard order when none was assigned.
  std::vector<std::size_t> execution_order() const {
    if (!run_order.empty()) return run_order;
    std::vector<std::size_t> o(rows.size());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = i;
    return o;
  }
};

/// Seeded execution order; the standard-order rows are untouched.
inline DesignMatrix randomize_run_order(DesignMatrix m, std::uint64_t seed) {
  m.run_order = seeded_permutation(m.rows.size(), seed);
  return m;
}

/// Applies a row's settings on top of `base`.
inline nn::Hyperparams decode_row(const DesignMatrix& m, std::size_t row,
                                  nn::Hyperparams base = {}) {
  if (row >= m.rows.size()) throw ConfigError("design row " + std::to_string(row + 1) + " out of range");
  for (std::size_t c = 0; c < m.factors.size(); ++c) {
    const auto& f = m.factors[c];
    if (f.key.empty()) continue;
    std::string raw;
    try {
      raw = f.raw_of(m.rows[row][c]);
      base.set(f.key, raw);
    } catch (const std::exception& e) {
      throw ConfigError("cannot decode factor " + f.name + " in row " + std::to_string(row + 1) +
                        ": " + e.what());
    }
  }
  base.validate();
  return base;
}

/// Coded row for the settings of `h`; inverse of decode_row on valid rows.
inline std::vector<double> encode_row(const nn::Hyperparams& h,
                                      const std::vector<FactorDef>& factors) {
  const auto kv = h.to_kv();
  std::vector<double> out;
  out.reserve(factors.size());
  for (const auto& f : factors) {
    if (f.key.empty()) throw ConfigError("factor " + f.name + " is not bound to a setting");
    out.push_back(f.code_of(kv.get(f.key)));
  }
  return out;
}

// Serialization: CSV of raw settings (TC, factors..., run_order) in
// standard order, with a key-value sidecar for the factor definitions.

inline CsvTable design_to_csv(const DesignMatrix& m) {
  m.validate();
  CsvTable t;
  t.header.push_back("TC");
  for (const auto& f : m.factors) t.header.push_back(f.name);
  t.header.push_back("run_order");
  std::vector<std::size_t> position(m.rows.size());
  const auto order = m.execution_order();
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i + 1;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::vector<std::string> cells{std::to_string(r + 1)};
    for (std::size_t c = 0; c < m.factors.size(); ++c) cells.push_back(m.raw(r, c));
    cells.push_back(std::to_string(position[r]));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline KeyValueDoc design_metadata(const DesignMatrix& m) {
  KeyValueDoc kv;
  kv.set("kind", to_string(m.kind));
  kv.set("name", m.name);
  kv.set("replicates", m.replicate_count);
  kv.set("factors", static_cast<int>(m.factors.size()));
  for (std::size_t i = 0; i < m.factors.size(); ++i)
    m.factors[i].to_kv(kv, "factor." + std::to_string(i + 1) + ".");
  return kv;
}

inline DesignMatrix design_from_csv(const CsvTable& t, const KeyValueDoc& meta) {
  DesignMatrix m;
  m.kind = parse_design_kind(meta.get("kind"));
  m.name = meta.get_or("name", "");
  m.replicate_count = static_cast<int>(meta.get_int("replicates"));
  const auto n = meta.get_int("factors");
  for (long long i = 1; i <= n; ++i)
    m.factors.push_back(FactorDef::from_kv(meta, "factor." + std::to_string(i) + "."));
  std::vector<int> cols;
  for (const auto& f : m.factors) cols.push_back(t.require_column(f.name));
  const int order_col = t.column("run_order");
  std::vector<std::size_t> order(t.rows.size(), 0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      try {
        row.push_back(m.factors[c].code_of(t.rows[r][cols[c]]));
      } catch (const std::exception& e) {
        throw DataError("design row " + std::to_string(r + 1) + ": " + e.what());
      }
    }
    m.rows.push_back(std::move(row));
    if (order_col >= 0) {
      const auto pos = parse_int(t.rows[r][order_col], "run_order");
      if (pos < 1 || pos > static_cast<long long>(t.rows.size()))
        throw DataError("run_order out of range in row " + std::to_string(r + 1));
      order[pos - 1] = r;
    }
  }
  if (order_col >= 0) m.run_order = order;
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  return m;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".design.kv");
  return p;
}

inline void save_design(const std::filesystem::path& csv, const DesignMatrix& m) {
  write_csv(csv.string(), design_to_csv(m));
  design_metadata(m).save(sidecar_path(csv).string());
}

inline DesignMatrix load_design(const std::filesystem::path& csv) {
  const auto side = sidecar_path(csv);
  if (!std::filesystem::exists(side))
    throw DataError("design sidecar " + side.string() + " not found");
  return design_from_csv(read_csv(csv.string()), KeyValueDoc::load(side.string()));
}

}  // namespace grainscope::doe
