#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <new>

#include "grainscope/cli/commands.hpp"

using namespace grainscope;
using namespace grainscope::cli;

namespace {

int exit_code(ExitCode c) { return static_cast<int>(c); }

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--config", o.config.config_path, "Key-value settings file");
  sub->add_option("--profile", o.config.profile, "Size profile")->check(CLI::IsMember({"paper", "tiny"}));
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_training(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--epochs", o.config.epochs, "Training epochs");
  sub->add_option("--batch", o.config.batch, "Mini-batch size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grain-size classification pipeline: tiling, CNN training, designed experiments, ANOVA"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonOptions o;
  std::function<void()> run;

  PrepArgs prep;
  auto* s_prep = app.add_subcommand("prep", "Tile, grayscale, equalize and resize coupon images");
  s_prep->add_option("input_dir", prep.input_dir, "Directory of coupon images")->required();
  s_prep->add_option("out_dir", prep.out_dir, "Output directory")->required();
  s_prep->add_option("--label", prep.label, "Label for every tile")
      ->check(CLI::IsMember({"good", "bad", "neutral", "unlabeled"}));
  add_common(s_prep, o);
  s_prep->callback([&] { run = [&] { cmd_prep(o, prep); }; });

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate labeled synthetic grain tiles");
  s_synth->add_option("out_dir", synth.out_dir, "Output directory")->required();
  s_synth->add_option("--per-class", synth.per_class, "Tiles per class (default: half the split total)");
  s_synth->add_option("--coupons", synth.coupons, "Also write this many full coupon images");
  s_synth->add_option("--coupon-rows", synth.coupon_rows, "Coupon grid rows");
  s_synth->add_option("--coupon-cols", synth.coupon_cols, "Coupon grid columns");
  s_synth->add_option("--coupon-kind", synth.coupon_kind, "good, bad or mixed")
      ->check(CLI::IsMember({"good", "bad", "mixed"}));
  add_common(s_synth, o);
  s_synth->callback([&] { run = [&] { cmd_synth(o, synth); }; });

  DoeGenArgs gen;
  auto* s_gen = app.add_subcommand("doe-gen", "Write a design matrix CSV and its factor sidecar");
  s_gen->add_option("out_csv", gen.out_csv, "Design CSV path")->required();
  s_gen->add_option("--design", gen.design, "screening, screening-printed, optimization, regularization, dsd, ccd");
  s_gen->add_flag("--randomize", gen.randomize, "Seeded random run order");
  s_gen->add_option("--alpha", gen.alpha, "CCD axial distance: rotatable, face, inscribed");
  s_gen->add_option("--center-points", gen.center_points, "CCD center points per block");
  add_common(s_gen, o);
  s_gen->callback([&] { run = [&] { cmd_doe_gen(o, gen); }; });

  RunDoeArgs rd;
  auto* s_rd = app.add_subcommand("run-doe", "Train every treatment of a design and record responses");
  s_rd->add_option("design_csv", rd.design_csv, "Design CSV from doe-gen")->required();
  s_rd->add_option("tiles_csv", rd.tiles_csv, "Tile manifest")->required();
  s_rd->add_option("out_csv", rd.out_csv, "Response CSV")->required();
  s_rd->add_option("--replicates", rd.replicates, "Replicates of the whole design");
  s_rd->add_flag("--resume", o.resume, "Skip treatments already in the log");
  add_common(s_rd, o);
  add_training(s_rd, o);
  s_rd->callback([&] { run = [&] { cmd_run_doe(o, rd); }; });

  AnovaArgs an;
  auto* s_an = app.add_subcommand("anova", "ANOVA tables and level means for a response CSV");
  s_an->add_option("responses_csv", an.responses_csv, "Response CSV from run-doe or kfold")->required();
  s_an->add_option("out_dir", an.out_dir, "Output directory")->required();
  s_an->add_option("--terms", an.terms, "Model terms, e.g. \"@linear @quadratic\" or \"a b a*b\"");
  s_an->add_option("--response", an.responses, "Response column(s) to analyze");
  add_common(s_an, o);
  s_an->callback([&] { run = [&] { cmd_anova(o, an); }; });

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train one model and score it on the test split");
  s_tr->add_option("tiles_csv", tr.tiles_csv, "Tile manifest")->required();
  s_tr->add_option("out_dir", tr.out_dir, "Output directory")->required();
  s_tr->add_option("--fine-tune", tr.fine_tune_from, "Continue from these weights with conv1/conv2 frozen");
  add_common(s_tr, o);
  add_training(s_tr, o);
  s_tr->callback([&] { run = [&] { cmd_train(o, tr); }; });

  KFoldArgs kf;
  auto* s_kf = app.add_subcommand("kfold", "Repeated k-fold cross-validation");
  s_kf->add_option("tiles_csv", kf.tiles_csv, "Tile manifest")->required();
  s_kf->add_option("out_csv", kf.out_csv, "Response CSV")->required();
  s_kf->add_option("--k", kf.k, "Folds");
  s_kf->add_option("--runs", kf.runs, "Training runs per fold");
  s_kf->add_flag("--resume", o.resume, "Skip runs already in the log");
  add_common(s_kf, o);
  add_training(s_kf, o);
  s_kf->callback([&] { run = [&] { cmd_kfold(o, kf); }; });

  ReconstructArgs rc;
  auto* s_rc = app.add_subcommand("reconstruct", "Classify coupon tiles and write tinted ensemble images");
  s_rc->add_option("weights", rc.weights, "weights.bin from train")->required();
  s_rc->add_option("tiles_csv", rc.tiles_csv, "Tile manifest from prep")->required();
  s_rc->add_option("out_dir", rc.out_dir, "Output directory")->required();
  s_rc->add_option("--model", rc.model_kv, "Model settings (default: model.kv beside the weights)");
  s_rc->add_option("--threshold", rc.threshold, "Reject when the bad-tile fraction exceeds this");
  s_rc->add_option("--tint-gamma", rc.tint_gamma, "Tint strength exponent on 1 - p_good");
  add_common(s_rc, o);
  s_rc->callback([&] { run = [&] { cmd_reconstruct(o, rc); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_code = app.exit(e);
    return rc_code == 0 ? 0 : exit_code(ExitCode::usage);
  }

  try {
    run();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_code(ExitCode::config);
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return exit_code(ExitCode::data);
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return exit_code(ExitCode::data);
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "runtime error: out of memory\n");
    return exit_code(ExitCode::runtime);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return exit_code(ExitCode::runtime);
  }
  return exit_code(ExitCode::ok);
}
