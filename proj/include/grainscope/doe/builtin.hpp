#pragma once

// Built-in factor sets and designs used by the published experiments.

#include <sstream>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/doe/ccd.hpp"
#include "grainscope/doe/design.hpp"

namespace grainscope::doe {

/// The sixteen screening factors, in matrix column order.
inline std::vector<FactorDef> screening_factors() {
  using FC = FactorClass;
  std::vector<FactorDef> f;
  f.push_back(continuous_factor("batch", "batch", FC::training, {"80", "160", "240"}));
  f.push_back(continuous_factor("constraint", "constraint", FC::training, {"3", "5", "7"}));
  f.push_back(continuous_factor("optimizer", "optimizer", FC::training,
                                {"adam", "adamax", "nadam"}, false));
  for (const char* k : {"dropC1", "dropC2", "dropC3"})
    f.push_back(continuous_factor(k, k, FC::training, {"0", "0.1", "0.2"}));
  f.push_back(continuous_factor("dropD1", "dropD1", FC::training, {"0.1", "0.3", "0.5"}));
  for (const char* k : {"maxpC1", "maxpC2", "maxpC3"})
    f.push_back(categorical_factor(k, k, FC::cnn_layer, "0", "2"));
  for (const char* k : {"filtC1", "filtC2", "filtC3"})
    f.push_back(continuous_factor(k, k, FC::cnn_layer, {"3", "5", "7"}));
  f.push_back(categorical_factor("padding", "padding", FC::cnn_layer, "valid", "same"));
  f.push_back(categorical_factor("strideC1", "strideC1", FC::cnn_layer, "1", "2"));
  f.push_back(continuous_factor("activation", "activation", FC::cnn_layer,
                                {"tanh", "selu", "relu"}, false));
  return f;
}

namespace detail {

// Raw settings of the published 34-run screening matrix in standard order.
inline constexpr const char* kScreeningMatrix = R"(
160 7 3 0.2 0.2 0.2 0.5 2 2 2 7 7 7 S 2 3
160 3 1 0 0 0 0.1 0 0 0 3 3 3 V 1 1
240 5 1 0 0.2 0 0.5 2 0 2 3 3 7 V 2 3
80 5 3 0.2 0 0.2 0.1 0 2 0 7 7 3 S 1 1
240 7 2 0 0 0.2 0.1 2 0 2 7 3 3 S 1 3
80 3 2 0.2 0.2 0 0.5 0 2 0 3 7 7 V 2 1
240 7 3 0.1 0 0 0.5 0 0 2 7 7 3 V 2 1
80 3 1 0.1 0.2 0.2 0.1 2 2 0 3 3 7 S 1 3
240 3 3 0.2 0.1 0 0.1 2 0 0 7 7 7 V 1 3
80 7 1 0 0.1 0.2 0.5 0 2 2 3 3 3 S 2 1
240 7 1 0.2 0.2 0.1 0.1 0 0 2 3 5 5 S 1 1
80 3 3 0 0 0.1 0.5 2 2 0 7 3 3 V 2 3
240 3 3 0 0.2 0.2 0.3 0 0 0 7 3 7 S 2 1
80 7 1 0.2 0 0 0.3 2 2 2 3 7 3 V 1 3
240 3 1 0.2 0 0.2 0.5 0 0 0 3 7 3 S 2 3
80 7 3 0 0.2 0 0.1 2 2 2 7 3 7 V 1 1
240 7 3 0.2 0.2 0.2 0.5 2 0 0 3 3 3 V 1 1
80 3 1 0 0 0 0.1 0 2 2 7 7 7 S 2 3
240 3 1 0 0.2 0 0.5 2 2 0 7 7 3 S 1 1
80 7 3 0.2 0 0.2 0.1 0 0 2 3 3 7 V 2 3
240 7 1 0 0 0.2 0.1 2 2 0 5 7 7 V 2 1
80 3 3 0.2 0.2 0 0.5 0 0 2 5 3 3 S 1 3
240 7 3 0 0 0 0.5 0 2 0 3 5 7 S 1 3
80 3 1 0.2 0.2 0.2 0.1 2 0 2 7 5 3 V 2 1
240 3 3 0.2 0 0 0.1 2 2 2 3 3 5 S 2 1
80 7 1 0 0.2 0.2 0.5 0 0 0 7 7 5 V 1 3
240 7 1 0.2 0.2 0 0.1 0 2 0 7 3 3 V 2 3
80 3 3 0 0 0.2 0.5 2 0 2 3 7 7 S 1 1
240 3 3 0 0.2 0.2 0.1 0 2 2 3 7 3 V 1 3
80 7 1 0.2 0 0 0.5 2 0 0 7 3 7 S 2 1
240 3 1 0.2 0 0.2 0.5 0 2 2 7 3 7 V 1 2
80 7 3 0 0.2 0 0.1 2 0 0 3 7 3 S 2 2
160 5 2 0.1 0.1 0.1 0.3 0 0 0 5 5 5 V 1 2
160 5 2 0.1 0.1 0.1 0.3 2 2 2 5 5 5 S 2 2
)";

inline constexpr const char* kRegularizationMatrix = R"(
1e-3 1e-3 1e-3 1e-3
1e-7 1e-7 1e-7 1e-7
1e-5 1e-3 1e-7 1e-7
1e-5 1e-7 1e-3 1e-3
1e-3 1e-5 1e-3 1e-7
1e-7 1e-5 1e-7 1e-3
1e-7 1e-3 1e-5 1e-3
1e-3 1e-7 1e-5 1e-7
1e-7 1e-7 1e-3 1e-5
1e-3 1e-3 1e-7 1e-5
1e-3 1e-7 1e-7 1e-3
1e-7 1e-3 1e-3 1e-7
1e-5 1e-5 1e-5 1e-5
)";

inline DesignMatrix parse_raw_matrix(const char* text, std::vector<FactorDef> factors,
                                     DesignKind kind, std::string name) {
  DesignMatrix d;
  d.kind = kind;
  d.name = std::move(name);
  d.factors = std::move(factors);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::vector<double> row;
    std::string cell;
    while (cells >> cell) row.push_back(d.factors.at(row.size()).code_of(cell));
    if (row.empty()) continue;
    if (row.size() != d.factors.size()) throw ConfigError("built-in matrix row length mismatch");
    d.rows.push_back(std::move(row));
  }
  return d;
}

}  // namespace detail

/// The screening matrix exactly as published. Row 11 carries mid-level
/// filter sizes for conv2/conv3 where its fold-over mate (row 12) has the
/// low level, so it fails strict fold-over validation at those two cells.
inline DesignMatrix screening_matrix_printed() {
  return detail::parse_raw_matrix(detail::kScreeningMatrix, screening_factors(), DesignKind::dsd,
                                  "screening-printed");
}

/// The published screening matrix with row 11's conv2/conv3 filter sizes set
/// to the negation of row 12 (7, 7), restoring the fold-over structure.
inline DesignMatrix screening_matrix() {
  auto d = screening_matrix_printed();
  d.name = "screening";
  const int f2 = d.factor_index("filtC2"), f3 = d.factor_index("filtC3");
  d.rows[10][f2] = -d.rows[11][f2];
  d.rows[10][f3] = -d.rows[11][f3];
  return d;
}

inline std::vector<FactorDef> optimization_factors() {
  return {linear_factor("constraint", "constraint", FactorClass::training, 5.0, 2.0),
          linear_factor("dropD1", "dropD1", FactorClass::training, 0.3, 0.2)};
}

inline FactorDef optimizer_block() {
  return categorical_factor("optimizer", "optimizer", FactorClass::training, "adam", "adamax");
}

/// Rotatable two-factor CCD with five centers per optimizer block (26 runs).
inline DesignMatrix optimization_matrix() {
  CcdSpec spec;
  spec.alpha_mode = AlphaMode::rotatable;
  spec.center_points = 5;
  spec.block = optimizer_block();
  auto d = generate_ccd(spec, optimization_factors());
  d.name = "optimization";
  return d;
}

inline std::vector<FactorDef> regularization_factors() {
  std::vector<FactorDef> f;
  for (const char* k : {"C1_L2", "C2_L2", "C3_L2", "D1_L2"})
    f.push_back(continuous_factor(k, k, FactorClass::training, {"1e-7", "1e-5", "1e-3"}, false));
  return f;
}

/// Thirteen-run four-factor L2 screening matrix (log-spaced levels).
inline DesignMatrix regularization_matrix() {
  return detail::parse_raw_matrix(detail::kRegularizationMatrix, regularization_factors(),
                                  DesignKind::dsd, "regularization");
}

inline std::vector<std::string> builtin_design_names() {
  return {"screening", "screening-printed", "optimization", "regularization"};
}

inline DesignMatrix builtin_design(const std::string& name) {
  if (name == "screening") return screening_matrix();
  if (name == "screening-printed") return screening_matrix_printed();
  if (name == "optimization") return optimization_matrix();
  if (name == "regularization") return regularization_matrix();
  throw ConfigError("unknown built-in design '" + name + "'");
}

}  // namespace grainscope::doe
