#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "grainscope/common/csv.hpp"
#include "grainscope/doe/design.hpp"
#include "grainscope/doe/factor.hpp"
#include "grainscope/imgprep/io.hpp"

namespace fs = std::filesystem;
using namespace grainscope;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("grainscope_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args) {
  const auto err = work() / "stderr.txt";
  const std::string cmd = "cd '" + work().string() + "' && '" GRAINSCOPE_BIN "' " + args + " 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  std::ifstream f(err);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(work() / p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvTable without_time(const fs::path& p) {
  auto t = read_csv((work() / p).string());
  const int c = t.require_column("time");
  t.header.erase(t.header.begin() + c);
  for (auto& r : t.rows) r.erase(r.begin() + c);
  return t;
}

// Shared small dataset: tiny profile, 40 tiles per class, short splits.
const std::string kTiny = "--profile tiny --config small.kv";

void ensure_dataset() {
  static bool done = false;
  if (done) return;
  std::ofstream(work() / "small.kv") << "split_train = 40\nsplit_validation = 20\nsplit_test = 20\nbatch = 16\n";
  ASSERT_EQ(run("synth syn " + kTiny + " --seed 1 --per-class 40 --coupons 1 --coupon-rows 2 --coupon-cols 3").code, 0);
  done = true;
}

void write_design(const std::string& name, std::vector<std::vector<double>> rows) {
  doe::DesignMatrix m;
  m.kind = doe::DesignKind::custom;
  m.name = name;
  m.factors = {doe::continuous_factor("dropD1", "dropD1", doe::FactorClass::training, {"0", "0.25", "0.5"}),
               doe::categorical_factor("optimizer", "optimizer", doe::FactorClass::training, "adam", "nadam")};
  m.rows = std::move(rows);
  doe::save_design(work() / (name + ".csv"), m);
}

}  // namespace

TEST(Cli, UsageAndUnknownDesign) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("nonsense").code, 1);
  EXPECT_EQ(run("doe-gen x.csv --design nope").code, 2);
  EXPECT_EQ(run("doe-gen d/screen.csv --design screening").code, 0);
  EXPECT_TRUE(fs::exists(work() / "d/screen.csv.manifest.kv"));
  EXPECT_EQ(read_csv((work() / "d/screen.csv").string()).rows.size(), 34u);
}

TEST(Cli, PrepEmptyDirectoryFailsWithoutManifest) {
  fs::create_directories(work() / "empty_in");
  const auto r = run("prep empty_in empty_out");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_FALSE(fs::exists(work() / "empty_out/run_manifest.kv"));
}

TEST(Cli, PrepGridManifestIsReproducible) {
  ensure_dataset();
  fs::create_directories(work() / "cin");
  fs::copy_file(work() / "syn/coupons/coupon_001.png", work() / "cin/coupon_001.png",
                fs::copy_options::overwrite_existing);
  std::ofstream(work() / "cin/broken.png") << "not an image";
  const auto r = run("prep cin p1 --profile tiny --label good");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("broken.png"), std::string::npos);
  const auto t = read_csv((work() / "p1/tiles.csv").string());
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.rows[5], (std::vector<std::string>{"coupon_001/1_2.jpg", "coupon_001", "1", "2", "good"}));
  ASSERT_EQ(run("prep cin p2 --profile tiny --label good").code, 0);
  EXPECT_EQ(slurp("p1/tiles.csv"), slurp("p2/tiles.csv"));
  ASSERT_EQ(run("prep cin p1 --profile tiny --label good").code, 0);
  const auto m1 = slurp("p1/run_manifest.kv");
  EXPECT_NE(m1.find("command = prep"), std::string::npos);
  ASSERT_EQ(run("prep cin p1 --profile tiny --label good").code, 0);
  EXPECT_EQ(slurp("p1/run_manifest.kv"), m1);

  fs::create_directories(work() / "bad_in");
  std::ofstream(work() / "bad_in/x.jpg") << "junk";
  EXPECT_EQ(run("prep bad_in bad_out").code, 3);
}

TEST(Cli, RunDoeIsOrderInvariantAndResumable) {
  ensure_dataset();
  write_design("three", {{-1, -1}, {0, 1}, {1, -1}});
  const std::string common = "syn/tiles.csv --epochs 2 --replicates 1 --seed 9 " + kTiny;
  ASSERT_EQ(run("run-doe three.csv " + common + " r/a.csv").code, 0);

  // same design, reversed run order
  auto m = doe::load_design(work() / "three.csv");
  m.run_order = {2, 1, 0};
  doe::save_design(work() / "three_rev.csv", m);
  ASSERT_EQ(run("run-doe three_rev.csv " + common + " r/b.csv").code, 0);
  const auto a = without_time("r/a.csv");
  EXPECT_EQ(a.rows.size(), 3u);
  EXPECT_EQ(to_csv(a), to_csv(without_time("r/b.csv")));

  // interrupted: one complete row plus a torn line survive in the log
  const auto log = slurp("r/a.csv.log");
  std::istringstream in(log);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  std::ofstream(work() / "r/c.csv.log", std::ios::binary) << header << '\n' << first << '\n' << second.substr(0, 7);
  const auto r = run("run-doe three.csv " + common + " r/c.csv --resume");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.find("TC " + first.substr(0, first.find(','))), std::string::npos) << "completed TC rerun";
  const auto c = without_time("r/c.csv");
  EXPECT_EQ(c.rows.size(), 3u);
  EXPECT_EQ(to_csv(c), to_csv(a));
  EXPECT_EQ(read_csv((work() / "r/c.csv.log").string()).rows.size(), 3u);

  write_design("one", {{0, -1}});
  ASSERT_EQ(run("run-doe one.csv " + common + " r/one.csv").code, 0);
  EXPECT_EQ(read_csv((work() / "r/one.csv").string()).rows.size(), 1u);

  std::ofstream(work() / "bad.csv") << slurp("one.csv") << "2,0.1,sgd,2\n";
  fs::copy_file(work() / "one.design.kv", work() / "bad.design.kv", fs::copy_options::overwrite_existing);
  const auto bad = run("run-doe bad.csv " + common + " r/bad.csv");
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("row 2"), std::string::npos) << bad.err;

  const auto an = run("anova r/a.csv an --terms dropD1");
  ASSERT_EQ(an.code, 0) << an.err;
  EXPECT_TRUE(fs::exists(work() / "an/anova_tst_acc.txt"));
  EXPECT_TRUE(fs::exists(work() / "an/level_means.csv"));
  EXPECT_EQ(run("anova r/a.csv an --terms nosuch").code, 2);
}

TEST(Cli, KFoldIsReproducible) {
  ensure_dataset();
  const std::string args = "kfold syn/tiles.csv --k 2 --runs 2 --epochs 1 --seed 4 " + kTiny;
  ASSERT_EQ(run(args + " k/a.csv").code, 0);
  ASSERT_EQ(run(args + " k/b.csv").code, 0);
  const auto a = without_time("k/a.csv");
  EXPECT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.header[2], "g:k-Fold");
  EXPECT_EQ(to_csv(a), to_csv(without_time("k/b.csv")));
}

TEST(Cli, TrainThenReconstruct) {
  ensure_dataset();
  auto r = run("train syn/tiles.csv model --epochs 3 --seed 2 " + kTiny);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"weights.bin", "model.kv", "history.csv", "metrics.txt", "run_manifest.kv"})
    EXPECT_TRUE(fs::exists(work() / "model" / f)) << f;

  fs::create_directories(work() / "cin2");
  fs::copy_file(work() / "syn/coupons/coupon_001.png", work() / "cin2/coupon_001.png",
                fs::copy_options::overwrite_existing);
  ASSERT_EQ(run("prep cin2 p3 --profile tiny").code, 0);
  r = run("reconstruct model/weights.bin p3/tiles.csv rec --threshold 1.0 " + kTiny);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp("rec/verdicts.txt").rfind("coupon_001 accept", 0), 0u);
  const auto tinted = img::read_image((work() / "rec/coupon_001_tinted.png").string());
  EXPECT_EQ(tinted.width, 3 * 64);
  EXPECT_EQ(tinted.height, 2 * 64);
  EXPECT_EQ(read_csv((work() / "rec/coupon_001_tiles.csv").string()).rows.size(), 6u);

  auto kv = slurp("model/model.kv");
  kv.replace(kv.find("dense_units = 64"), 16, "dense_units = 32");
  std::ofstream(work() / "other.kv") << kv;
  r = run("reconstruct model/weights.bin p3/tiles.csv rec2 --model other.kv");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("dense_1: kernel"), std::string::npos) << r.err;

  r = run("train syn/tiles.csv ft --fine-tune model/weights.bin --epochs 1 --seed 2 " + kTiny);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp("ft/metrics.txt").find("trainable"), std::string::npos);
}

namespace {

class CleanWorkDir : public ::testing::Environment {
 public:
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(work(), ec);
  }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new CleanWorkDir);

}  // namespace
