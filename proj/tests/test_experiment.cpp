#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "acosvm/experiment.hpp"

using namespace acosvm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

RunConfig small_run() {
  RunConfig cfg;
  cfg.data_path = ACOSVM_DATA_DIR "/wine.scale";
  cfg.aco.m = 2;
  cfg.aco.n_max = 3;
  cfg.aco.convergence_fraction = 1.0;
  cfg.seed = 4;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("acosvm_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ACOSVM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfigJson, RoundTrip) {
  RunConfig cfg = small_run();
  cfg.format = DataFormat::csv;
  cfg.csv_header = true;
  cfg.label_column = 3;
  cfg.aco.rho = 0.55;
  cfg.layout.sigma_high_power = -1;
  cfg.svm.kkt_tolerance = 1e-5;
  const Json j = to_json(cfg);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
  EXPECT_FALSE(j.contains("workers"));
  EXPECT_THROW(run_config_from_json(Json{{"cv_k", "five"}}), ConfigError);
  EXPECT_THROW(run_config_from_json(Json{{"format", "arff"}}), ConfigError);
}

TEST(PathString, RoundTrip) {
  const AntPath p{{0, 1, 8, 6, 1, 0, 6, 6, 4, 3}};
  EXPECT_EQ(path_string(p), "0186106643");
  EXPECT_EQ(path_from_string("0186106643"), p);
  EXPECT_THROW(path_from_string("01a"), DataError);
}

TEST(Experiment, ReportSerializationIsStable) {
  const auto report = run_experiment(small_run());
  const std::string text = dump_report(to_json(report));
  EXPECT_EQ(dump_report(Json::parse(text)), text);
  const Json j = Json::parse(text);
  EXPECT_EQ(j.at("dataset").at("train_size"), 90);
  EXPECT_EQ(j.at("dataset").at("test_size"), 88);
  EXPECT_EQ(j.at("iterations").size(), 3u);
  EXPECT_EQ(j.at("best").at("test_total"), 88);
}

TEST(Experiment, ReplayReproducesTheReport) {
  const auto first = run_experiment(small_run());
  const Json j = to_json(first);
  RunConfig again = run_config_from_json(j.at("config"));
  again.workers = 3;
  EXPECT_EQ(dump_report(to_json(run_experiment(again))), dump_report(j));
}

TEST(Experiment, EmitsTrailsFiles) {
  const auto report = run_experiment(small_run());
  const fs::path out = scratch("emit");
  emit_trails(report, out);
  const std::string trails = slurp(out / "trails.csv");
  EXPECT_EQ(line_count(trails), 1u + 3u * 2u * 10u);
  EXPECT_EQ(trails.substr(0, trails.find('\n')), "iteration,ant,x,y,fitness");
  EXPECT_EQ(line_count(slurp(out / "best_path.csv")), 1u + 10u);
  EXPECT_EQ(slurp(out / "report.json"), dump_report(to_json(report)));
  EXPECT_TRUE(fs::exists(out / "timing.json"));
  for (const auto& entry : fs::directory_iterator(out))
    EXPECT_NE(entry.path().filename().string().front(), '.') << entry.path();
  fs::remove_all(out);
}

TEST(Experiment, UnwritableDestinationLeavesNothing) {
  const auto report = run_experiment(small_run());
  const fs::path base = scratch("blocked");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  EXPECT_THROW(emit_trails(report, base / "file" / "sub"), DataError);
  EXPECT_FALSE(fs::exists(base / "file" / "sub"));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(base)) ++entries;
  EXPECT_EQ(entries, 1u);
  fs::remove_all(base);
}

TEST(Experiment, StageErrorsMapToExitCodes) {
  RunConfig cfg = small_run();
  cfg.data_path = "/nonexistent/wine.scale";
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.exit_code(), 3);
    EXPECT_EQ(e.stage(), "load");
  }
  cfg = small_run();
  cfg.train_count = 500;
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.exit_code(), 2);
    EXPECT_EQ(e.stage(), "split");
  }
  cfg = small_run();
  cfg.aco.q = -1.0;
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Experiment, EvaluatePointMatchesLibraryCalls) {
  const RunConfig cfg = small_run();
  const auto point = evaluate_point(cfg, 18.605, 0.6643);
  const Dataset data = load_dataset(cfg);
  const auto [train, test] = split_train_test(data, 90, cfg.seed);
  TrainConfig svm;
  svm.c = 18.605;
  svm.sigma = 0.6643;
  const auto cv = cross_validate(train, make_folds(train, 5, fold_seed(cfg.seed)), svm);
  EXPECT_EQ(point.cv.mean_accuracy, cv.mean_accuracy);
  EXPECT_EQ(point.test.right, holdout_score(train, test, svm, 18.605, 0.6643).right);
  EXPECT_THROW(evaluate_point(cfg, -1.0, 0.5), StageError);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli_missing");
  EXPECT_EQ(run_cli("tune --data /nonexistent/x.scale --out " + out.string()), 3);
  EXPECT_FALSE(fs::exists(out / "report.json"));
  EXPECT_EQ(run_cli("tune --data " ACOSVM_DATA_DIR "/wine.scale"), 2);
  EXPECT_EQ(run_cli("cv --data " ACOSVM_DATA_DIR "/wine.scale --C -3 --sigma 1"), 2);
  EXPECT_EQ(run_cli("--bogus"), 2);
  EXPECT_EQ(run_cli("inspect --data " ACOSVM_DATA_DIR "/wine.scale"), 0);
  EXPECT_EQ(run_cli("inspect --data " ACOSVM_DATA_DIR "/wine.csv --format csv"), 0);
}

TEST(Cli, TuneWritesOutputsAndReplays) {
  const fs::path a = scratch("cli_a");
  const fs::path b = scratch("cli_b");
  const std::string common = "--data " ACOSVM_DATA_DIR "/wine.scale --ants 3 --iters 2 --seed 9";
  ASSERT_EQ(run_cli("tune " + common + " --workers 1 --out " + a.string()), 0);
  for (const char* f : {"report.json", "trails.csv", "best_path.csv", "timing.json"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  ASSERT_EQ(run_cli("tune --replay " + (a / "report.json").string() + " --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}
