#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "grainscope/common/rng.hpp"
#include "grainscope/doe/builtin.hpp"
#include "grainscope/doe/dsd.hpp"
#include "grainscope/stats/anova.hpp"
#include "grainscope/stats/fdist.hpp"
#include "grainscope/stats/ols.hpp"
#include "grainscope/stats/report.hpp"

using namespace grainscope;
using namespace grainscope::stats;

namespace {

// Student-t upper tail by composite Simpson integration of the density.
double t_two_sided(double t, double nu) {
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) /
                   std::sqrt(nu * std::numbers::pi);
  auto dens = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const int n = 200000;
  const double h = t / n;
  double s = dens(0) + dens(t);
  for (int i = 1; i < n; ++i) s += dens(i * h) * (i % 2 ? 4 : 2);
  const double central = 2 * s * h / 3;
  return 1 - central;
}

ModelData from_design(const doe::DesignMatrix& d, int replicates) {
  ModelData data;
  for (std::size_t c = 0; c < d.factors.size(); ++c) {
    std::vector<double> v;
    for (int r = 0; r < replicates; ++r)
      for (const auto& row : d.rows) v.push_back(row[c]);
    data.add(d.factors[c].name,
             d.factors[c].is_continuous() ? FactorRole::continuous : FactorRole::categorical, v);
  }
  return data;
}

std::vector<double> random_y(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) v = rng.normal();
  return y;
}

}  // namespace

TEST(FTail, ZeroIsOne) { EXPECT_EQ(f_tail(0.0, 3, 10), 1.0); }

TEST(FTail, OneNumeratorDfMatchesStudentT) {
  for (double nu : {3.0, 10.0, 40.0})
    for (double f : {0.25, 1.0, 4.0, 9.0}) {
      SCOPED_TRACE(nu);
      EXPECT_NEAR(f_tail(f, 1, nu), t_two_sided(std::sqrt(f), nu), 1e-10);
    }
}

TEST(FTail, PublishedLargeEffectIsBelowDisplayThreshold) {
  const double p = f_tail(56.32, 1, 40);
  EXPECT_LT(p, 0.0005);
  EXPECT_EQ(format_p(p), "0.000");
}

TEST(Fit, ExactLinearRecovered) {
  Eigen::MatrixXd x(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = 1;
    x(i, 1) = i * 0.7 - 1;
    y(i) = x(i, 1);
  }
  const auto f = fit_least_squares(x, y);
  EXPECT_NEAR(f.beta(0), 0.0, 1e-10);
  EXPECT_NEAR(f.beta(1), 1.0, 1e-10);
  EXPECT_NEAR(f.sse, 0.0, 1e-20);
}

TEST(Fit, SyntheticInteractionModel) {
  Rng rng(17);
  ModelData d;
  std::vector<double> x1(50), x2(50), y(50);
  for (int i = 0; i < 50; ++i) {
    x1[i] = rng.uniform(-1, 1);
    x2[i] = rng.uniform(-1, 1);
    y[i] = 2 + 3 * x1[i] - x1[i] * x2[i] + 0.01 * rng.normal();
  }
  d.add("x1", FactorRole::continuous, x1);
  d.add("x2", FactorRole::continuous, x2);
  const auto m = fit_model(d, parse_terms("x1 x2 x1*x2", d), y);
  ASSERT_EQ(m.p(), 4);
  const double sigma = 0.01;
  EXPECT_NEAR(m.fit.beta(0), 2, 5 * sigma);
  EXPECT_NEAR(m.fit.beta(1), 3, 5 * sigma);
  EXPECT_NEAR(m.fit.beta(2), 0, 5 * sigma);
  EXPECT_NEAR(m.fit.beta(3), -1, 5 * sigma);
}

TEST(Fit, InterceptOnlyIsMean) {
  ModelData d;
  d.add("a", FactorRole::continuous, {1, 1, 1, 1});
  const std::vector<double> y{1, 2, 3, 10};
  const auto m = fit_model(d, parse_terms("a", d), y);
  EXPECT_EQ(m.p(), 1);
  EXPECT_EQ(m.dropped, (std::vector<std::string>{"a"}));
  EXPECT_NEAR(m.fit.beta(0), 4.0, 1e-12);
}

TEST(Fit, AliasedTermDroppedInEntryOrder) {
  ModelData d;
  d.add("a", FactorRole::continuous, {-1, 0, 1, -1, 0, 1});
  d.add("b", FactorRole::continuous, {-2, 0, 2, -2, 0, 2});
  d.add("c", FactorRole::categorical, {-1, -1, 1, 1, -1, 1});
  const auto m = fit_model(d, parse_terms("a b c", d), random_y(6, 1));
  EXPECT_EQ(m.dropped, (std::vector<std::string>{"b"}));
  EXPECT_EQ(m.terms.size(), 3u);
}

TEST(Terms, ShortcutsExpandInColumnOrder) {
  ModelData d;
  d.add("a", FactorRole::continuous, {0, 1});
  d.add("k", FactorRole::categorical, {1, -1});
  d.add("b", FactorRole::continuous, {1, 0});
  const auto t = parse_terms("@linear @quadratic", d);
  std::vector<std::string> names;
  for (const auto& x : t) names.push_back(x.name);
  EXPECT_EQ(names, (std::vector<std::string>{"a", "k", "b", "a*a", "b*b"}));
  EXPECT_EQ(parse_terms("@interactions", d).size(), 3u);
  EXPECT_THROW(parse_terms("zz", d), ConfigError);
}

TEST(Anova, BalancedOneFactorMatchesHandComputation) {
  ModelData d;
  d.add("a", FactorRole::categorical, {-1, -1, -1, -1, 1, 1, 1, 1});
  const std::vector<double> y{1, 2, 3, 2, 5, 6, 4, 5};
  const auto t = anova_decompose(fit_model(d, parse_terms("a", d), y));
  // Level means 2 and 5, grand mean 3.5: SS = 4*(1.5^2) * 2 = 18.
  EXPECT_NEAR(t.at("a").seq_ss, 18.0, 1e-12);
  EXPECT_NEAR(t.at("a").adj_ss, 18.0, 1e-12);
  // Within SS: (1+0+1+0) + (0+1+1+0) = 4, df 6.
  EXPECT_NEAR(t.at("Error").adj_ss, 4.0, 1e-12);
  EXPECT_EQ(t.at("Error").df, 6);
  EXPECT_NEAR(t.at("a").f_value, 18.0 / (4.0 / 6), 1e-9);
  EXPECT_NEAR(t.at("a").vif, 1.0, 1e-9);
}

TEST(Anova, OrthogonalDesignInvariants) {
  // 2^3 factorial, two replicates.
  ModelData d;
  std::vector<double> a, b, c;
  for (int r = 0; r < 2; ++r)
    for (int i = 0; i < 8; ++i) {
      a.push_back(i & 1 ? 1 : -1);
      b.push_back(i & 2 ? 1 : -1);
      c.push_back(i & 4 ? 1 : -1);
    }
  d.add("a", FactorRole::continuous, a);
  d.add("b", FactorRole::continuous, b);
  d.add("c", FactorRole::categorical, c);
  const auto y = random_y(16, 3);
  const auto t1 = anova_decompose(fit_model(d, parse_terms("a b c a*b", d), y));
  const auto t2 = anova_decompose(fit_model(d, parse_terms("a*b c b a", d), y));
  for (const char* n : {"a", "b", "c", "a*b"}) {
    EXPECT_NEAR(t1.at(n).vif, 1.0, 1e-9) << n;
    EXPECT_NEAR(t1.at(n).seq_ss, t2.at(n).seq_ss, 1e-12) << n;
    EXPECT_NEAR(t1.at(n).seq_ss, t1.at(n).adj_ss, 1e-12) << n;
  }
}

TEST(Anova, SequentialSumsToTotalAndContributionsToHundred) {
  const auto design = doe::generate_dsd(
      std::vector<doe::FactorDef>{doe::continuous_factor("p", "", doe::FactorClass::training, {"-1", "0", "1"}),
                                  doe::continuous_factor("q", "", doe::FactorClass::training, {"-1", "0", "1"}),
                                  doe::continuous_factor("r", "", doe::FactorClass::training, {"-1", "0", "1"}),
                                  doe::continuous_factor("s", "", doe::FactorClass::training, {"-1", "0", "1"}),
                                  doe::continuous_factor("u", "", doe::FactorClass::training, {"-1", "0", "1"}),
                                  doe::continuous_factor("v", "", doe::FactorClass::training, {"-1", "0", "1"})});
  const auto data = from_design(design, 2);
  const auto y = random_y(data.n, 9);
  const auto t = anova_decompose(fit_model(data, parse_terms("@linear", data), y));
  double seq = 0, contrib = 0;
  int df = 0;
  for (const auto& r : t.rows)
    if (r.kind == RowKind::term || r.kind == RowKind::error) {
      seq += r.seq_ss;
      contrib += r.contribution;
      df += r.df;
    }
  EXPECT_NEAR(seq, t.at("Total").seq_ss, 1e-9 * t.at("Total").seq_ss);
  EXPECT_NEAR(contrib, 100.0, 1e-6);
  EXPECT_EQ(df, t.at("Total").df);
  // Replicated design: error splits into lack-of-fit and pure error.
  ASSERT_NE(t.find("Pure Error"), nullptr);
  EXPECT_EQ(t.at("Pure Error").df, 13);
  EXPECT_EQ(t.at("Lack-of-Fit").df, 6);
  EXPECT_NEAR(t.at("Lack-of-Fit").adj_ss + t.at("Pure Error").adj_ss, t.at("Error").adj_ss, 1e-12);
}

TEST(Anova, GlmFoldRunBookkeeping) {
  ModelData d;
  std::vector<std::string> fold, run;
  for (int f = 1; f <= 10; ++f)
    for (int r = 1; r <= 5; ++r) {
      fold.push_back(std::to_string(f));
      run.push_back(std::to_string(r));
    }
  d.add_group("k-Fold", fold);
  d.add_group("Run", run);
  const auto t = anova_decompose(fit_model(d, parse_terms("k-Fold Run", d), random_y(50, 4)));
  EXPECT_EQ(t.at("k-Fold").df, 9);
  EXPECT_EQ(t.at("Run").df, 4);
  EXPECT_EQ(t.at("Error").df, 36);
  EXPECT_EQ(t.at("Total").df, 49);
  // Balanced effect coding: largest column VIF is 2(L-1)/L.
  EXPECT_NEAR(t.at("k-Fold").vif, 1.80, 1e-9);
  EXPECT_NEAR(t.at("Run").vif, 1.60, 1e-9);
  EXPECT_NEAR(t.at("k-Fold").seq_ss, t.at("k-Fold").adj_ss, 1e-12);
}

TEST(Anova, ZeroErrorDfLeavesFUndefined) {
  ModelData d;
  d.add("a", FactorRole::continuous, {-1, 1});
  const auto t = anova_decompose(fit_model(d, parse_terms("a", d), {0.0, 1.0}));
  EXPECT_TRUE(std::isnan(t.at("a").f_value));
  EXPECT_TRUE(std::isnan(t.at("a").p_value));
}

TEST(Anova, PlantedEffectDetectedAndNoiseCalibrated) {
  std::vector<doe::FactorDef> f;
  for (const char* n : {"a", "b", "c", "d", "e", "g"})
    f.push_back(doe::continuous_factor(n, "", doe::FactorClass::training, {"-1", "0", "1"}));
  const auto data = from_design(doe::generate_dsd(f), 2);
  const auto terms = parse_terms("@linear", data);
  {
    auto y = random_y(data.n, 5);
    for (std::size_t i = 0; i < data.n; ++i) y[i] += 1.5 * data.get("c").values[i];
    const auto t = anova_decompose(fit_model(data, terms, y));
    EXPECT_LT(t.at("c").p_value, 0.05);
  }
  std::vector<int> hits(6, 0);
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const auto t = anova_decompose(fit_model(data, terms, random_y(data.n, 1000 + s)));
    for (int k = 0; k < 6; ++k) hits[k] += t.at(f[k].name).p_value < 0.05;
  }
  const double mean = seeds * 0.05, sd = std::sqrt(seeds * 0.05 * 0.95);
  for (int k = 0; k < 6; ++k) EXPECT_LE(hits[k], mean + 4 * sd) << f[k].name;
}

TEST(Press, MatchesLeaveOneOutRefits) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    ModelData d;
    for (int j = 0; j < 3; ++j) {
      std::vector<double> v(20);
      for (auto& x : v) x = rng.uniform(-1, 1);
      d.add("x" + std::to_string(j), FactorRole::continuous, v);
    }
    const auto y = random_y(20, 500 + trial);
    const auto m = fit_model(d, parse_terms("@linear", d), y);
    ASSERT_EQ(m.p(), 4);
    double loo = 0;
    for (Eigen::Index i = 0; i < 20; ++i) {
      Eigen::MatrixXd x(19, 4);
      Eigen::VectorXd yy(19);
      for (Eigen::Index r = 0, k = 0; r < 20; ++r) {
        if (r == i) continue;
        x.row(k) = m.x.row(r);
        yy(k++) = m.y(r);
      }
      const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(yy);
      const double e = m.y(i) - m.x.row(i).dot(beta);
      loo += e * e;
    }
    EXPECT_NEAR(press_statistic(m).press, loo, 1e-8);
  }
}

TEST(Press, PerfectFitAndInterceptOnly) {
  ModelData d;
  d.add("a", FactorRole::continuous, {0, 1, 2, 3, 4});
  const std::vector<double> lin{1, 3, 5, 7, 9};
  EXPECT_NEAR(press_statistic(fit_model(d, parse_terms("a", d), lin)).press, 0.0, 1e-20);

  ModelData c;
  c.add("k", FactorRole::continuous, {1, 1, 1, 1, 1});
  const std::vector<double> y{2, 4, 4, 5, 10};
  const auto m = fit_model(c, parse_terms("k", c), y);
  const double mean = 5, n = 5;
  double want = 0;
  for (double v : y) want += std::pow((v - mean) * n / (n - 1), 2);
  EXPECT_NEAR(press_statistic(m).press, want, 1e-10);
}

TEST(Press, UnitLeverageNamesObservation) {
  ModelData d;
  d.add("a", FactorRole::continuous, {0, 0, 0, 1});
  const auto m = fit_model(d, parse_terms("a", d), {1, 2, 3, 4});
  try {
    press_statistic(m);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("observation 4"), std::string::npos);
  }
}

TEST(Summary, RunStatistics) {
  auto c = summarize_runs({0.9, 0.9, 0.9});
  EXPECT_EQ(c.sd, 0.0);
  auto two = summarize_runs({0.3, 0.8});
  EXPECT_NEAR(two.sd, 0.5 / std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(std::isnan(summarize_runs({1.0}).sd));

  // Fifty values standardized to the published cross-validation mean and S.
  auto v = random_y(50, 8);
  const auto raw = summarize_runs(v);
  for (auto& x : v) x = 0.91253 + (x - raw.mean) / raw.sd * 0.01964;
  const auto s = summarize_runs(v);
  EXPECT_EQ(format_percent(100 * s.mean, 3), "91.253%");
  EXPECT_EQ(format_percent(100 * s.sd, 3), "1.964%");
  EXPECT_NEAR(s.se, 0.01964 / std::sqrt(50.0), 1e-12);
}

// Published screening ANOVA: printed matrix, two replicates of test accuracy.
TEST(Anova, ReproducesPublishedScreeningAnova) {
  const std::vector<double> rep1{
      0.5000, 0.5000, 0.8013, 0.5000, 0.7575, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5438, 0.5000,
      0.5000, 0.8075, 0.5000, 0.5000, 0.5000, 0.7738, 0.5000, 0.5000, 0.5000, 0.5000, 0.5025, 0.5000,
      0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.8025};
  const std::vector<double> rep2{
      0.5000, 0.5000, 0.7975, 0.5000, 0.8138, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5438, 0.5000,
      0.5000, 0.8138, 0.5000, 0.5000, 0.5000, 0.8013, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.4825,
      0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.5000, 0.7350};
  std::vector<double> y = rep1;
  y.insert(y.end(), rep2.begin(), rep2.end());
  const auto data = from_design(doe::screening_matrix_printed(), 2);
  const auto t = anova_decompose(fit_model(data, parse_terms("@linear @quadratic", data), y),
                                 {.group_rows = true, .lack_of_fit = false});

  EXPECT_EQ(t.at("Model").df, 27);
  EXPECT_EQ(t.at("Linear").df, 16);
  EXPECT_EQ(t.at("Square").df, 11);
  EXPECT_EQ(t.at("Error").df, 40);
  EXPECT_EQ(t.at("Total").df, 67);

  struct Row {
    const char* name;
    double seq, adj, vif;
  };
  const Row published[] = {
      {"batch", 0.00011, 0.00440, 1.05},      {"constraint", 0.00876, 0.00631, 1.07},
      {"optimizer", 0.05782, 0.08666, 1.08},  {"dropC1", 0.01859, 0.01483, 1.06},
      {"dropC2", 0.02021, 0.01074, 1.07},     {"dropC3", 0.02578, 0.03279, 1.03},
      {"dropD1", 0.00631, 0.00515, 1.07},     {"maxpC1", 0.03903, 0.02949, 1.10},
      {"maxpC2", 0.00007, 0.00298, 1.10},     {"maxpC3", 0.13673, 0.12961, 1.11},
      {"filtC1", 0.00011, 0.00042, 1.04},     {"filtC2", 0.00410, 0.00374, 1.09},
      {"filtC3", 0.00007, 0.00005, 1.10},     {"padding", 0.00318, 0.00930, 1.11},
      {"strideC1", 0.00005, 0.00005, 1.10},   {"activation", 0.08435, 0.06999, 1.07},
      {"batch*batch", 0.00492, 0.00608, 1.60}, {"constraint*constraint", 0.08655, 0.05593, 1.60},
      {"optimizer*optimizer", 0.04133, 0.04931, 1.60}, {"dropC1*dropC1", 0.00938, 0.00608, 1.60},
      {"dropC2*dropC2", 0.00640, 0.00608, 1.60}, {"dropC3*dropC3", 0.00062, 0.00145, 2.83},
      {"dropD1*dropD1", 0.05111, 0.06166, 1.60}, {"filtC1*filtC1", 0.00866, 0.00608, 1.60},
      {"filtC2*filtC2", 0.00598, 0.00557, 2.15}, {"filtC3*filtC3", 0.00494, 0.00451, 2.15},
      {"activation*activation", 0.00608, 0.00608, 1.60},
  };
  for (const auto& r : published) {
    SCOPED_TRACE(r.name);
    const auto& row = t.at(r.name);
    EXPECT_EQ(row.df, 1);
    EXPECT_NEAR(row.seq_ss, r.seq, 1.5e-4);
    EXPECT_NEAR(row.adj_ss, r.adj, 1.5e-4);
    EXPECT_NEAR(row.vif, r.vif, 0.01);
  }
  EXPECT_NEAR(t.at("Model").seq_ss, 0.63124, 3e-4);
  EXPECT_NEAR(t.at("Linear").seq_ss, 0.40527, 3e-4);
  EXPECT_NEAR(t.at("Linear").adj_ss, 0.41126, 3e-4);
  EXPECT_NEAR(t.at("Square").seq_ss, 0.22597, 3e-4);
  EXPECT_NEAR(t.at("Error").adj_ss, 0.09206, 3e-4);
  EXPECT_NEAR(t.at("Total").seq_ss, 0.72330, 3e-4);
  EXPECT_EQ(format_p(t.at("maxpC3").p_value), "0.000");
  EXPECT_EQ(format_p(t.at("dropC1").p_value), "0.015");
  EXPECT_NEAR(t.summary.s, 0.04797, 5e-5);
  EXPECT_NEAR(t.summary.r2, 0.8727, 5e-4);
  EXPECT_NEAR(t.summary.r2_adj, 0.7868, 5e-4);
  EXPECT_NEAR(t.summary.press, 0.187374, 1e-3);
  EXPECT_NEAR(t.summary.r2_pred, 0.7409, 2e-3);
}

TEST(Report, TextAndCsvLayouts) {
  ModelData d;
  d.add("a", FactorRole::categorical, {-1, -1, 1, 1, -1, 1});
  const auto t = anova_decompose(fit_model(d, parse_terms("a", d), {1, 2, 3, 4, 1.5, 3.5}));
  const auto text = render_anova_text(t, "Response");
  EXPECT_NE(text.find("Source"), std::string::npos);
  EXPECT_NE(text.find("Model Summary"), std::string::npos);
  const auto csv = anova_to_csv(t);
  EXPECT_EQ(csv.header[0], "source");
  EXPECT_EQ(csv.rows[0][0], "Model");
}
