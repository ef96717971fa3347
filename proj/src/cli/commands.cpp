#include "grainscope/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "grainscope/common/csv.hpp"
#include "grainscope/common/parallel.hpp"
#include "grainscope/doe/builtin.hpp"
#include "grainscope/doe/ccd.hpp"
#include "grainscope/doe/dsd.hpp"
#include "grainscope/ensemble/reassemble.hpp"
#include "grainscope/ensemble/report.hpp"
#include "grainscope/ensemble/tint.hpp"
#include "grainscope/imgprep/io.hpp"
#include "grainscope/imgprep/manifest.hpp"
#include "grainscope/imgprep/pipeline.hpp"
#include "grainscope/nn/checkpoint.hpp"
#include "grainscope/stats/report.hpp"
#include "grainscope/synthgrain/generate.hpp"
#include "grainscope/trainer/analysis.hpp"
#include "grainscope/trainer/experiment.hpp"
#include "grainscope/trainer/train.hpp"

namespace grainscope::cli {

namespace fs = std::filesystem;

namespace {

// Fixed streams split off the master seed.
constexpr std::uint64_t kSplitStream = 0x5b1175;
constexpr std::uint64_t kBalanceStream = 0xba1a;
constexpr std::uint64_t kSynthStream = 0x5e7;
constexpr std::uint64_t kCouponStream = 0xc0;
constexpr std::uint64_t kOrderStream = 0x0d0e;

void ensure_parent(const std::string& file) {
  if (const auto dir = fs::path(file).parent_path(); !dir.empty()) fs::create_directories(dir);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + p.string());
  f << text;
  if (!f) throw DataError("short write to " + p.string());
}

void save_manifest_at(const fs::path& p, const std::string& command, const RunConfig& cfg, const CommonOptions& o,
                      std::vector<std::string> inputs, std::vector<std::string> outputs) {
  RunManifest m;
  m.command = command;
  m.config_hash = cfg.hash();
  m.seed = o.seed;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.save(p.string());
}

std::vector<train::TileSample> load_training_tiles(const RunConfig& cfg, const CommonOptions& o,
                                                   const std::string& tiles_csv) {
  auto tiles = train::load_tiles(img::load_manifest(tiles_csv), o.threads);
  if (tiles.empty()) throw DataError(tiles_csv + " has no good or bad tiles");
  if (cfg.balance)
    tiles = train::balance_by_augmentation(std::move(tiles), cfg.split.total() / 2, cfg.augment,
                                           derive_seed({o.seed, kBalanceStream}));
  return tiles;
}

train::DatasetSplit load_split(const RunConfig& cfg, const CommonOptions& o, const std::string& tiles_csv) {
  const auto tiles = load_training_tiles(cfg, o, tiles_csv);
  return train::split_dataset(tiles, cfg.split, derive_seed({o.seed, kSplitStream}), cfg.hyper.input, o.threads);
}

/// Complete lines of an append-only CSV log; a torn final line is dropped.
CsvTable read_log(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot read " + p.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto end = text.rfind('\n');
  text.resize(end == std::string::npos ? 0 : end + 1);
  return parse_csv(text);
}

/// Resumable record log: rows already present are reported as done; new
/// records are appended and flushed one at a time.
class RecordLog {
 public:
  RecordLog(fs::path path, std::vector<std::string> header, bool resume) : path_(std::move(path)), header_(header) {
    if (resume && fs::exists(path_)) {
      const auto t = read_log(path_);
      if (!t.header.empty() && t.header != header_)
        throw DataError(path_.string() + " was written for a different design; remove it or drop --resume");
      const int tc = t.column("TC"), rep = t.column("replicate");
      for (const auto& row : t.rows) {
        if (row.size() != header_.size()) continue;
        const train::TreatmentKey key{static_cast<int>(parse_int(row[tc], "TC")),
                                      static_cast<int>(parse_int(row[rep], "replicate"))};
        if (done_.insert(key).second) rows_.push_back(row);
      }
      // rewrite without any torn tail so appends start on a fresh line
      CsvTable clean;
      clean.header = header_;
      clean.rows = rows_;
      write_text(path_, to_csv(clean));
    } else {
      write_text(path_, csv_join(header_) + "\n");
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw DataError("cannot append to " + path_.string());
  }

  const std::set<train::TreatmentKey>& done() const { return done_; }

  void append(const train::ResponseRecord& r) {
    auto row = train::response_row(r);
    out_ << csv_join(row) << '\n';
    out_.flush();
    rows_.push_back(std::move(row));
  }

  /// All rows sorted by (replicate, TC).
  CsvTable table() const {
    CsvTable t;
    t.header = header_;
    t.rows = rows_;
    const int tc = t.column("TC"), rep = t.column("replicate");
    std::sort(t.rows.begin(), t.rows.end(), [&](const auto& a, const auto& b) {
      return std::pair{parse_int(a[rep]), parse_int(a[tc])} < std::pair{parse_int(b[rep]), parse_int(b[tc])};
    });
    return t;
  }

 private:
  fs::path path_;
  std::vector<std::string> header_;
  std::set<train::TreatmentKey> done_;
  std::vector<std::vector<std::string>> rows_;
  std::ofstream out_;
};

void report_record(const train::ResponseRecord& r) {
  if (r.fault)
    std::fprintf(stderr, "TC %d rep %d: fault: %s\n", r.tc, r.replicate, r.note.c_str());
  else
    std::fprintf(stderr, "TC %d rep %d: tst_acc %.4f  %.2f min\n", r.tc, r.replicate, r.tst_acc, r.time_minutes);
}

std::string safe_name(const std::string& s) {
  std::string out = s;
  for (auto& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return out;
}

}  // namespace

std::string manifest_path_for(const std::string& output, bool is_dir) {
  return is_dir ? (fs::path(output) / "run_manifest.kv").string() : output + ".manifest.kv";
}

void cmd_prep(const CommonOptions& o, const PrepArgs& a) {
  const auto cfg = resolve_config(o.config);
  const auto label = img::parse_label(a.label);
  const auto images = img::list_images(a.input_dir);
  if (images.empty()) throw DataError("no images in " + a.input_dir);
  fs::create_directories(a.out_dir);

  img::TileManifest m;
  std::set<std::string> coupons;
  std::size_t failed = 0;
  for (const auto& path : images) {
    const std::string coupon = safe_name(path.stem().string());
    try {
      if (!coupons.insert(coupon).second) throw DataError("duplicate coupon name '" + coupon + "'");
      const auto p = img::prepare_coupon(img::read_image(path.string()), coupon, cfg.prep, static_cast<int>(o.threads));
      const auto recs = img::write_prepared(a.out_dir, p, label, cfg.prep);
      m.tiles.insert(m.tiles.end(), recs.begin(), recs.end());
      std::fprintf(stderr, "%s: %dx%d grid, %zu kept, %zu discarded\n", coupon.c_str(), p.grid.rows, p.grid.cols,
                   p.tiles.size(), p.discarded.size());
    } catch (const DataError& e) {
      ++failed;
      std::fprintf(stderr, "%s: %s\n", path.string().c_str(), e.what());
    }
  }
  if (failed == images.size()) throw DataError("all " + std::to_string(failed) + " inputs failed");
  const auto tiles_csv = (fs::path(a.out_dir) / "tiles.csv").string();
  img::save_manifest(tiles_csv, m);
  save_manifest_at(manifest_path_for(a.out_dir, true), "prep", cfg, o, {a.input_dir}, {tiles_csv});
  if (failed) std::fprintf(stderr, "warning: %zu of %zu inputs failed\n", failed, images.size());
}

void cmd_synth(const CommonOptions& o, const SynthArgs& a) {
  const auto cfg = resolve_config(o.config);
  const int per_class = a.per_class.value_or(static_cast<int>(cfg.split.total() / 2));
  if (per_class < 0) throw ConfigError("per-class count must be >= 0");
  if (a.coupons < 0 || a.coupon_rows < 1 || a.coupon_cols < 1) throw ConfigError("coupon grid must be positive");
  if (a.coupon_kind != "good" && a.coupon_kind != "bad" && a.coupon_kind != "mixed")
    throw ConfigError("coupon kind must be good, bad or mixed");
  const fs::path out(a.out_dir);
  fs::create_directories(out / "tiles");

  const std::size_t n = 2 * static_cast<std::size_t>(per_class);
  std::vector<grain::SyntheticTile> made(n);
  const std::uint64_t master = derive_seed({o.seed, kSynthStream});
  parallel_for(n, o.threads, [&](std::size_t i) {
    const auto want = i % 2 == 0 ? img::TileLabel::good : img::TileLabel::bad;
    made[i] = grain::synth_labeled(cfg.regime, want, master, i / 2);
  });

  img::TileManifest m;
  CsvTable truth;
  truth.header = {"path", "label", "mean_size", "seed_count", "attempts"};
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "tiles/%06zu.png", i);
    // same normalization prep applies to real tiles
    const auto g = cfg.prep.equalize ? img::hist_equalize(made[i].gray) : made[i].gray;
    img::write_png((out / name).string(), img::resize_bilinear(g, cfg.synth_store, cfg.synth_store));
    m.tiles.push_back({name, "synth", static_cast<int>(i), 0, made[i].label});
    truth.rows.push_back({name, img::to_string(made[i].label), format_double(made[i].mean_size, 8),
                          std::to_string(made[i].seed_count), std::to_string(made[i].attempt)});
  }
  const auto tiles_csv = (out / "tiles.csv").string();
  const auto truth_csv = (out / "grain_sizes.csv").string();
  img::save_manifest(tiles_csv, m);
  write_csv(truth_csv, truth);
  std::vector<std::string> outputs{tiles_csv, truth_csv};

  if (a.coupons > 0) {
    // Coupon cells match the prep tile, with seed counts scaled by area so
    // grain sizes stay in the same regimes.
    grain::RegimeSpec cell = cfg.regime;
    const double scale = static_cast<double>(cfg.prep.tile_w) * cfg.prep.tile_h /
                         (static_cast<double>(cfg.regime.field.width) * cfg.regime.field.height);
    cell.field.width = cfg.prep.tile_w;
    cell.field.height = cfg.prep.tile_h;
    cell.good_seeds = std::max(1, static_cast<int>(std::lround(cfg.regime.good_seeds * scale)));
    cell.bad_seeds = std::max(1, static_cast<int>(std::lround(cfg.regime.bad_seeds * scale)));
    fs::create_directories(out / "coupons");
    for (int k = 0; k < a.coupons; ++k) {
      const std::uint64_t cseed = derive_seed({o.seed, kCouponStream, static_cast<std::uint64_t>(k)});
      const int cells = a.coupon_rows * a.coupon_cols;
      std::vector<img::TileLabel> want(cells, img::TileLabel::good);
      Rng pick(cseed);
      for (auto& w : want)
        if (a.coupon_kind == "bad" || (a.coupon_kind == "mixed" && pick.uniform() < 0.25)) w = img::TileLabel::bad;
      std::vector<grain::SyntheticTile> parts(cells);
      parallel_for(cells, o.threads, [&](std::size_t i) { parts[i] = grain::synth_labeled(cell, want[i], cseed, i); });
      img::Raster coupon(a.coupon_cols * cell.field.width, a.coupon_rows * cell.field.height, 1);
      CsvTable ct;
      ct.header = {"row", "col", "label", "mean_size"};
      for (int i = 0; i < cells; ++i) {
        const int r = i / a.coupon_cols, c = i % a.coupon_cols;
        img::paste(coupon, parts[i].gray, c * cell.field.width, r * cell.field.height);
        ct.rows.push_back({std::to_string(r), std::to_string(c), img::to_string(parts[i].label),
                           format_double(parts[i].mean_size, 8)});
      }
      char stem[32];
      std::snprintf(stem, sizeof stem, "coupon_%03d", k + 1);
      const auto png = (out / "coupons" / (std::string(stem) + ".png")).string();
      const auto csv = (out / "coupons" / (std::string(stem) + "_truth.csv")).string();
      img::write_png(png, coupon);
      write_csv(csv, ct);
      outputs.push_back(png);
      outputs.push_back(csv);
    }
  }
  save_manifest_at(manifest_path_for(a.out_dir, true), "synth", cfg, o, {}, outputs);
}

void cmd_doe_gen(const CommonOptions& o, const DoeGenArgs& a) {
  const auto cfg = resolve_config(o.config);
  doe::DesignMatrix m;
  const auto names = doe::builtin_design_names();
  if (std::find(names.begin(), names.end(), a.design) != names.end()) {
    m = doe::builtin_design(a.design);
  } else if (a.design == "dsd") {
    m = doe::generate_dsd(doe::screening_factors());
    m.name = "dsd";
  } else if (a.design == "ccd") {
    doe::CcdSpec spec;
    spec.alpha_mode = doe::parse_alpha_mode(a.alpha);
    spec.center_points = a.center_points;
    spec.block = doe::optimizer_block();
    m = doe::generate_ccd(spec, doe::optimization_factors());
    m.name = "ccd";
  } else {
    std::string known;
    for (const auto& n : names) known += n + ", ";
    throw ConfigError("unknown design '" + a.design + "' (expected " + known + "dsd or ccd)");
  }
  if (a.randomize) m = doe::randomize_run_order(m, derive_seed({o.seed, kOrderStream}));
  m.validate();
  ensure_parent(a.out_csv);
  doe::save_design(a.out_csv, m);
  std::fprintf(stderr, "%s: %zu runs, %zu factors\n", m.name.c_str(), m.rows.size(), m.factors.size());
  save_manifest_at(manifest_path_for(a.out_csv, false), "doe-gen", cfg, o, {},
                   {a.out_csv, doe::sidecar_path(a.out_csv).string()});
}

void cmd_run_doe(const CommonOptions& o, const RunDoeArgs& a) {
  const auto cfg = resolve_config(o.config);
  const auto design = doe::load_design(a.design_csv);
  train::ExperimentConfig ec;
  ec.epochs = cfg.epochs;
  ec.replicates = a.replicates.value_or(cfg.replicates);
  ec.seed = o.seed;
  ec.base = cfg.hyper;
  ec.threads = o.threads;
  if (ec.replicates < 1) throw ConfigError("replicates must be >= 1");

  train::ResponseRecord proto;
  proto.factors = train::factor_columns(design, 0);
  ensure_parent(a.out_csv);
  RecordLog log(a.out_csv + ".log", train::response_header({proto}), o.resume);
  const auto expected = design.rows.size() * static_cast<std::size_t>(ec.replicates);
  if (log.done().size() < expected) {
    const auto split = load_split(cfg, o, a.tiles_csv);
    train::run_experiment(design, split, ec, log.done(), [&](const train::ResponseRecord& r) {
      report_record(r);
      log.append(r);
    });
  }
  write_csv(a.out_csv, log.table());
  save_manifest_at(manifest_path_for(a.out_csv, false), "run-doe", cfg, o, {a.design_csv, a.tiles_csv},
                   {a.out_csv});
}

void cmd_anova(const CommonOptions& o, const AnovaArgs& a) {
  const auto cfg = resolve_config(o.config);
  const auto d = train::load_response_data(read_csv(a.responses_csv));
  const std::string terms = a.terms.value_or(train::default_terms(d));
  std::vector<std::string> responses = a.responses;
  if (responses.empty())
    for (const auto& [name, v] : d.responses) responses.push_back(name);
  fs::create_directories(a.out_dir);

  std::vector<std::string> outputs;
  CsvTable means;
  means.header = {"response", "factor", "level", "n", "mean"};
  for (const auto& r : responses) {
    const auto an = train::analyze_response(d, r, terms);
    std::ostringstream text;
    text << stats::render_anova_text(an.table, "Analysis of Variance: " + r + " (terms: " + terms + ")");
    if (!d.imputed_rows.empty()) {
      text << "Imputed faulted rows:";
      for (auto i : d.imputed_rows) text << ' ' << i + 1;
      text << '\n';
    }
    if (d.has_groups) {
      const auto& v = d.responses.at(r);
      std::vector<double> finite;
      for (double x : v)
        if (std::isfinite(x)) finite.push_back(x);
      const auto s = stats::summarize_runs(finite);
      text << "Runs: " << s.n << "  mean " << stats::fixed(s.mean, 6) << "  sd " << stats::fixed(s.sd, 6) << "  se "
           << stats::fixed(s.se, 6) << '\n';
    }
    const auto base = fs::path(a.out_dir) / ("anova_" + safe_name(r));
    write_text(base.string() + ".txt", text.str());
    write_csv(base.string() + ".csv", stats::anova_to_csv(an.table));
    outputs.push_back(base.string() + ".txt");
    outputs.push_back(base.string() + ".csv");
    for (const auto& lm : an.level_means)
      means.rows.push_back({r, lm.factor, lm.level, std::to_string(lm.n), format_double(lm.mean, 10)});
  }
  const auto means_csv = (fs::path(a.out_dir) / "level_means.csv").string();
  write_csv(means_csv, means);
  outputs.push_back(means_csv);
  save_manifest_at(manifest_path_for(a.out_dir, true), "anova", cfg, o, {a.responses_csv}, outputs);
}

void cmd_train(const CommonOptions& o, const TrainArgs& a) {
  const auto cfg = resolve_config(o.config);
  const auto split = load_split(cfg, o, a.tiles_csv);
  const train::Net net(nn::build_model(cfg.hyper));
  train::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.hyper = cfg.hyper;
  tc.seed = derive_seed({o.seed, 2});
  tc.threads = o.threads;
  auto progress = [](const train::EpochRecord& e) {
    std::fprintf(stderr, "epoch %d: loss %.4f acc %.4f  val_loss %.4f val_acc %.4f\n", e.epoch, e.train_loss,
                 e.train_acc, e.val_loss, e.val_acc);
  };
  const auto res = a.fine_tune_from
                       ? train::fine_tune(net, nn::load_checkpoint<float>(*a.fine_tune_from, net.spec()), split.train,
                                          split.validation, tc, progress)
                       : train::train(net, nn::init_weights<float>(net.spec(), derive_seed({o.seed, 1})), split.train,
                                      split.validation, tc, progress);

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const auto weights = (out / "weights.bin").string();
  const auto model = (out / "model.kv").string();
  const auto history = (out / "history.csv").string();
  const auto metrics = (out / "metrics.txt").string();
  nn::save_checkpoint(weights, net.spec(), res.best);
  cfg.hyper.to_kv().save(model);

  CsvTable h;
  h.header = {"epoch", "train_loss", "train_acc", "val_loss", "val_acc"};
  for (const auto& e : res.epochs)
    h.rows.push_back({std::to_string(e.epoch), train::fmt(e.train_loss, 6), train::fmt(e.train_acc, 6),
                      train::fmt(e.val_loss, 6), train::fmt(e.val_acc, 6)});
  write_csv(history, h);

  const auto cm = train::evaluate(net, res.best, split.test, o.threads);
  const auto rates = train::confusion_metrics(cm);
  std::ostringstream m;
  m << "parameters " << net.spec().parameter_count() << '\n'
    << "trainable " << train::trainable_parameter_count(net.spec(), a.fine_tune_from.has_value()) << '\n'
    << "iterations_per_epoch " << res.iterations_per_epoch << '\n'
    << "best_epoch " << res.best_epoch << '\n'
    << "best_val_acc " << train::fmt(res.best_val_acc, 6) << '\n'
    << "tn " << cm.tn << " fp " << cm.fp << " fn " << cm.fn << " tp " << cm.tp << '\n'
    << "specificity " << rates.specificity.percent() << '\n'
    << "sensitivity " << rates.sensitivity.percent() << '\n'
    << "precision " << rates.precision.percent() << '\n'
    << "fpr " << rates.fpr.percent() << '\n'
    << "accuracy " << rates.accuracy.percent() << '\n';
  write_text(metrics, m.str());
  std::fputs(m.str().c_str(), stderr);

  std::vector<std::string> inputs{a.tiles_csv};
  if (a.fine_tune_from) inputs.push_back(*a.fine_tune_from);
  save_manifest_at(manifest_path_for(a.out_dir, true), a.fine_tune_from ? "train --fine-tune" : "train", cfg, o,
                   inputs, {weights, model, history, metrics});
}

void cmd_kfold(const CommonOptions& o, const KFoldArgs& a) {
  const auto cfg = resolve_config(o.config);
  train::KFoldConfig kc;
  kc.k = a.k;
  kc.runs = a.runs;
  kc.sizes = cfg.split;
  kc.epochs = cfg.epochs;
  kc.hyper = cfg.hyper;
  kc.seed = o.seed;
  kc.threads = o.threads;
  if (kc.k < 2 || kc.runs < 1) throw ConfigError("k-fold needs k >= 2 and runs >= 1");

  train::ResponseRecord proto;
  proto.factors = {{"g:k-Fold", ""}, {"g:Run", ""}};
  ensure_parent(a.out_csv);
  RecordLog log(a.out_csv + ".log", train::response_header({proto}), o.resume);
  if (log.done().size() < static_cast<std::size_t>(kc.k * kc.runs)) {
    const auto tiles = load_training_tiles(cfg, o, a.tiles_csv);
    train::kfold_cv(
        tiles, kc,
        [&](const train::ResponseRecord& r) {
          report_record(r);
          log.append(r);
        },
        log.done());
  }
  write_csv(a.out_csv, log.table());
  save_manifest_at(manifest_path_for(a.out_csv, false), "kfold", cfg, o, {a.tiles_csv}, {a.out_csv});
}

void cmd_reconstruct(const CommonOptions& o, const ReconstructArgs& a) {
  const auto cfg = resolve_config(o.config);
  if (!(a.threshold >= 0 && a.threshold <= 1)) throw ConfigError("threshold must be in [0, 1]");
  const fs::path model_kv = a.model_kv ? fs::path(*a.model_kv) : fs::path(a.weights).parent_path() / "model.kv";
  if (!fs::exists(model_kv)) throw DataError("model settings " + model_kv.string() + " not found (pass --model)");
  nn::Hyperparams h;
  const auto model_doc = KeyValueDoc::load(model_kv.string());
  for (const auto& [k, v] : model_doc.entries()) h.set(k, v);
  const train::Net net(nn::build_model(h));
  const auto weights = nn::load_checkpoint<float>(a.weights, net.spec());

  const auto manifest = img::load_manifest(a.tiles_csv);
  std::map<std::string, std::vector<const img::TileRecord*>> by_coupon;
  for (const auto& t : manifest.tiles) by_coupon[t.coupon].push_back(&t);
  if (by_coupon.empty()) throw DataError(a.tiles_csv + " lists no tiles");

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  std::vector<std::string> outputs;
  std::string verdicts;
  CsvTable report;
  report.header = {"coupon", "tiles", "bad", "bad_fraction", "min_p_good", "mean_p_good", "verdict", "threshold"};
  for (const auto& [coupon, recs] : by_coupon) {
    const auto grid_kv = manifest.root / coupon / "grid.kv";
    if (!fs::exists(grid_kv)) throw DataError("coupon '" + coupon + "' has no grid.kv; reconstruct needs prep output");
    const auto meta = img::GridMeta::from_kv(KeyValueDoc::load(grid_kv.string()));

    std::vector<train::TileSample> samples(recs.size());
    std::map<ensemble::Cell, img::Raster> plain;
    parallel_for(recs.size(), o.threads, [&](std::size_t i) {
      samples[i].image = img::read_image(manifest.resolve(*recs[i]).string());
    });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto color = manifest.root / "color" / coupon / (img::tile_name(recs[i]->row, recs[i]->col) + ".png");
      plain[{recs[i]->row, recs[i]->col}] = fs::exists(color) ? img::read_image(color.string()) : img::to_rgb(samples[i].image);
    }
    const auto set = train::to_labeled_set(samples, train::all_indices(samples.size()), net.spec().input, o.threads);
    const auto p = nn::predict_batched(net, weights, set.x, o.threads);

    std::vector<ensemble::TileClassification> cls;
    std::map<ensemble::Cell, img::Raster> tinted;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const double pg = std::clamp<double>(p[i], 0.0, 1.0);
      cls.push_back(ensemble::classify(recs[i]->row, recs[i]->col, pg));
      const ensemble::Cell cell{recs[i]->row, recs[i]->col};
      tinted[cell] = ensemble::tint_tile(plain.at(cell), pg, a.tint_gamma);
    }
    const auto layout = ensemble::layout_of(meta);
    const auto stem = out / safe_name(coupon);
    const std::string untinted_png = stem.string() + "_untinted.png", tinted_png = stem.string() + "_tinted.png",
                      tiles_out = stem.string() + "_tiles.csv";
    img::write_png(untinted_png, ensemble::reassemble(layout, plain));
    img::write_png(tinted_png, ensemble::reassemble(layout, tinted));
    write_csv(tiles_out, ensemble::classifications_to_csv(cls));
    const auto rep = ensemble::coupon_report(cls, a.threshold, coupon);
    verdicts += ensemble::verdict_line(rep) + "\n";
    std::fprintf(stderr, "%s\n", ensemble::verdict_line(rep).c_str());
    report.rows.push_back({coupon, std::to_string(rep.tiles), std::to_string(rep.bad), train::fmt(rep.bad_fraction, 6),
                           train::fmt(rep.min_p_good, 6), train::fmt(rep.mean_p_good, 6), to_string(rep.verdict),
                           format_double(rep.threshold, 10)});
    outputs.insert(outputs.end(), {untinted_png, tinted_png, tiles_out});
  }
  const auto verdict_txt = (out / "verdicts.txt").string(), report_csv = (out / "report.csv").string();
  write_text(verdict_txt, verdicts);
  write_csv(report_csv, report);
  outputs.push_back(verdict_txt);
  outputs.push_back(report_csv);
  save_manifest_at(manifest_path_for(a.out_dir, true), "reconstruct", cfg, o,
                   {a.weights, model_kv.string(), a.tiles_csv}, outputs);
}

}  // namespace grainscope::cli
