#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grainscope/common/csv.hpp"
#include "grainscope/doe/design.hpp"
#include "grainscope/nn/weights.hpp"
#include "grainscope/trainer/train.hpp"

namespace grainscope::train {

/// One trained treatment (or one k-fold run). `factors` holds prefixed
/// analysis columns: "x:" continuous coded, "c:" categorical coded, "g:" group.
struct ResponseRecord {
  int tc = 0;
  int replicate = 1;
  int run_position = 0;
  std::vector<std::pair<std::string, std::string>> factors;
  int epochs = 0;
  double time_minutes = 0;
  double trn_acc = 0, val_acc = 0, tst_acc = 0;
  ConfusionMatrix cm;
  bool fault = false;
  std::string note;
};

inline std::string fmt(double v, int decimals) {
  if (!std::isfinite(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline const std::vector<std::string>& response_columns() {
  static const std::vector<std::string> cols{"trn_acc", "val_acc", "tst_acc", "tpr", "tnr", "ppr", "fpr"};
  return cols;
}

inline const std::vector<std::string>& wall_time_columns() {
  static const std::vector<std::string> cols{"time"};
  return cols;
}

/// Shared header for a set of records; factor columns come from the first.
/// Execution order is left out so results do not depend on it.
inline std::vector<std::string> response_header(const std::vector<ResponseRecord>& recs) {
  std::vector<std::string> h{"TC", "replicate"};
  if (!recs.empty())
    for (const auto& [k, v] : recs.front().factors) h.push_back(k);
  for (const char* c : {"epoch", "time", "trn_acc", "val_acc", "tst_acc", "tpr", "tnr", "ppr", "fpr", "tn", "fp",
                        "fn", "tp", "status", "note"})
    h.push_back(c);
  return h;
}

inline std::vector<std::string> response_row(const ResponseRecord& r) {
  std::vector<std::string> row{std::to_string(r.tc), std::to_string(r.replicate)};
  for (const auto& [k, v] : r.factors) row.push_back(v);
  row.push_back(std::to_string(r.epochs));
  row.push_back(fmt(r.time_minutes, 3));
  if (r.fault) {
    for (int i = 0; i < 11; ++i) row.emplace_back();
  } else {
    const auto m = confusion_metrics(r.cm);
    row.push_back(fmt(r.trn_acc, 6));
    row.push_back(fmt(r.val_acc, 6));
    row.push_back(fmt(r.tst_acc, 6));
    for (const auto& rate : {m.sensitivity, m.specificity, m.precision, m.fpr}) row.push_back(fmt(rate.value(), 6));
    for (long c : {r.cm.tn, r.cm.fp, r.cm.fn, r.cm.tp}) row.push_back(std::to_string(c));
  }
  row.push_back(r.fault ? "fault" : "ok");
  row.push_back(r.note);
  return row;
}

inline CsvTable responses_to_csv(const std::vector<ResponseRecord>& recs) {
  CsvTable t;
  t.header = response_header(recs);
  for (const auto& r : recs) t.rows.push_back(response_row(r));
  return t;
}

/// Coded factor columns for one design row.
inline std::vector<std::pair<std::string, std::string>> factor_columns(const doe::DesignMatrix& m, std::size_t row) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t c = 0; c < m.factors.size(); ++c) {
    const auto& f = m.factors[c];
    out.emplace_back((f.is_continuous() ? "x:" : "c:") + f.name, format_double(m.rows[row][c], 10));
  }
  return out;
}

struct ExperimentConfig {
  int epochs = 35;
  int replicates = 1;
  std::uint64_t seed = 0;
  nn::Hyperparams base;
  unsigned threads = 1;
};

/// Trains one configuration from fresh weights and scores it on the test set.
inline ResponseRecord run_treatment(const nn::Hyperparams& h, const DatasetSplit& split, int epochs,
                                    std::uint64_t seed, unsigned threads, Params* best_out = nullptr) {
  ResponseRecord r;
  r.epochs = epochs;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Net net(nn::build_model(h));
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.hyper = h;
    cfg.seed = derive_seed({seed, 2});
    cfg.threads = threads;
    auto res = train(net, nn::init_weights<float>(net.spec(), derive_seed({seed, 1})), split.train,
                     split.validation, cfg);
    std::tie(r.trn_acc, r.val_acc) = last_five_means(res.epochs);
    r.cm = evaluate(net, res.best, split.test, threads);
    r.tst_acc = confusion_metrics(r.cm).accuracy.value();
    if (best_out) *best_out = std::move(res.best);
  } catch (const TrainingFault& e) {
    r.fault = true;
    r.note = e.what();
  } catch (const ConfigError& e) {
    r.fault = true;
    r.note = e.what();
  } catch (const std::bad_alloc&) {
    r.fault = true;
    r.note = "out of memory";
  }
  r.time_minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return r;
}

using TreatmentKey = std::pair<int, int>;  // (TC, replicate)
using RecordCallback = std::function<void(const ResponseRecord&)>;

/// Runs every (replicate, treatment) in the matrix's run order. Each one is
/// seeded from (seed, TC, replicate) alone, so order and skipping do not
/// change results. Keys in `done` are skipped. Output is sorted by
/// (replicate, TC).
inline std::vector<ResponseRecord> run_experiment(const doe::DesignMatrix& m, const DatasetSplit& split,
                                                  const ExperimentConfig& cfg, const std::set<TreatmentKey>& done = {},
                                                  const RecordCallback& on_record = {}) {
  m.validate();
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  const auto order = m.execution_order();
  std::vector<ResponseRecord> out;
  for (int rep = 1; rep <= cfg.replicates; ++rep)
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t row = order[pos];
      const int tc = static_cast<int>(row) + 1;
      if (done.count({tc, rep})) continue;
      const std::uint64_t seed =
          derive_seed({cfg.seed, static_cast<std::uint64_t>(tc), static_cast<std::uint64_t>(rep)});
      ResponseRecord r;
      try {
        r = run_treatment(doe::decode_row(m, row, cfg.base), split, cfg.epochs, seed, cfg.threads);
      } catch (const ConfigError& e) {
        r.fault = true;
        r.epochs = cfg.epochs;
        r.note = e.what();
      }
      r.tc = tc;
      r.replicate = rep;
      r.run_position = static_cast<int>(pos) + 1;
      r.factors = factor_columns(m, row);
      if (on_record) on_record(r);
      out.push_back(std::move(r));
    }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.replicate, a.tc) < std::tie(b.replicate, b.tc);
  });
  return out;
}

struct KFoldConfig {
  int k = 10;
  int runs = 5;
  SplitSizes sizes;
  int epochs = 35;
  nn::Hyperparams hyper;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// k seeded re-partitions of the tiles, each trained `runs` times from
/// fresh weights. TC carries the fold number and replicate the run.
inline std::vector<ResponseRecord> kfold_cv(const std::vector<TileSample>& tiles, const KFoldConfig& cfg,
                                            const RecordCallback& on_record = {},
                                            const std::set<TreatmentKey>& done = {}) {
  if (cfg.k < 2) throw ConfigError("k-fold needs k >= 2");
  if (cfg.runs < 1) throw ConfigError("runs per fold must be >= 1");
  std::vector<float> labels(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) labels[i] = tiles[i].label;
  std::vector<ResponseRecord> out;
  int position = 0;
  for (int f = 1; f <= cfg.k; ++f) {
    bool needed = false;
    for (int r = 1; r <= cfg.runs; ++r) needed |= !done.count({f, r});
    if (!needed) {
      position += cfg.runs;
      continue;
    }
    const auto idx = split_indices(labels, cfg.sizes, derive_seed({cfg.seed, 0xf01du, static_cast<std::uint64_t>(f)}));
    const DatasetSplit split{to_labeled_set(tiles, idx.train, cfg.hyper.input, cfg.threads),
                             to_labeled_set(tiles, idx.validation, cfg.hyper.input, cfg.threads),
                             to_labeled_set(tiles, idx.test, cfg.hyper.input, cfg.threads)};
    for (int r = 1; r <= cfg.runs; ++r) {
      ++position;
      if (done.count({f, r})) continue;
      auto rec = run_treatment(cfg.hyper, split, cfg.epochs,
                               derive_seed({cfg.seed, static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(r)}),
                               cfg.threads);
      rec.tc = f;
      rec.replicate = r;
      rec.run_position = position;
      rec.factors = {{"g:k-Fold", std::to_string(f)}, {"g:Run", std::to_string(r)}};
      if (on_record) on_record(rec);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace grainscope::train
