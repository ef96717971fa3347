#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grainscope/cli/config.hpp"

namespace grainscope::cli {

/// Flags shared by every subcommand.
struct CommonOptions {
  ConfigFlags config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool resume = false;
};

struct PrepArgs {
  std::string input_dir;
  std::string out_dir;
  std::string label = "unlabeled";  // applied to every tile
};

struct SynthArgs {
  std::string out_dir;
  std::optional<int> per_class;  // default: half of the split total
  int coupons = 0;               // extra full-coupon images for prep/reconstruct
  int coupon_rows = 4, coupon_cols = 4;
  std::string coupon_kind = "mixed";  // good, bad or mixed
};

struct DoeGenArgs {
  std::string design = "screening";
  std::string out_csv;
  bool randomize = false;
  std::string alpha = "rotatable";  // generated CCDs only
  int center_points = 5;
};

struct RunDoeArgs {
  std::string design_csv;
  std::string tiles_csv;
  std::string out_csv;
  std::optional<int> replicates;
};

struct AnovaArgs {
  std::string responses_csv;
  std::string out_dir;
  std::optional<std::string> terms;
  std::vector<std::string> responses;  // empty: every response column present
};

struct TrainArgs {
  std::string tiles_csv;
  std::string out_dir;
  std::optional<std::string> fine_tune_from;
};

struct KFoldArgs {
  std::string tiles_csv;
  std::string out_csv;
  int k = 10;
  int runs = 5;
};

struct ReconstructArgs {
  std::string weights;
  std::string tiles_csv;  // manifest written by prep
  std::string out_dir;
  std::optional<std::string> model_kv;  // default: model.kv next to the weights
  double threshold = 0;
  double tint_gamma = 1;
};

// Each returns normally on success and throws ConfigError, DataError or
// another exception on failure; main maps those to exit codes.
void cmd_prep(const CommonOptions& o, const PrepArgs& a);
void cmd_synth(const CommonOptions& o, const SynthArgs& a);
void cmd_doe_gen(const CommonOptions& o, const DoeGenArgs& a);
void cmd_run_doe(const CommonOptions& o, const RunDoeArgs& a);
void cmd_anova(const CommonOptions& o, const AnovaArgs& a);
void cmd_train(const CommonOptions& o, const TrainArgs& a);
void cmd_kfold(const CommonOptions& o, const KFoldArgs& a);
void cmd_reconstruct(const CommonOptions& o, const ReconstructArgs& a);

/// Manifest location for an output: inside it when it is a directory,
/// `<file>.manifest.kv` otherwise.
std::string manifest_path_for(const std::string& output, bool is_dir);

}  // namespace grainscope::cli
