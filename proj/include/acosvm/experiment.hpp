#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acosvm/aco.hpp"
#include "acosvm/crossval.hpp"
#include "acosvm/data.hpp"
#include "acosvm/error.hpp"
#include "acosvm/svm.hpp"

namespace acosvm {

using Json = nlohmann::ordered_json;

enum class DataFormat { libsvm, csv };

inline std::string to_string(DataFormat f) { return f == DataFormat::csv ? "csv" : "libsvm"; }

inline DataFormat parse_format(const std::string& s) {
  if (s == "libsvm") return DataFormat::libsvm;
  if (s == "csv") return DataFormat::csv;
  throw ConfigError("unknown data format '" + s + "' (expected libsvm or csv)");
}

/// Everything that determines an experiment's outcome. `workers` and
/// `out_dir` only affect how and where it runs, so they are not part of the
/// reproducibility record in report.json.
struct RunConfig {
  std::string data_path;
  DataFormat format = DataFormat::libsvm;
  bool csv_header = false;
  std::size_t label_column = 0;
  std::size_t train_count = 90;
  std::size_t cv_k = 5;
  AcoConfig aco;
  DigitLayout layout;
  TrainConfig svm;
  std::uint64_t seed = 0;

  std::size_t workers = 1;
  std::string out_dir;

  void validate() const {
    if (data_path.empty()) throw ConfigError("no dataset path given");
    if (cv_k < 2) throw ConfigError("cv_k must be >= 2");
    AcoConfig a = aco;
    a.seed = seed;
    a.validate();
    layout.validate();
    svm.validate();
  }
};

/// Failure of one named stage; `exit_code` follows the CLI contract
/// (2 config, 3 data, 4 solver).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }
  const char* kind() const noexcept {
    return exit_code_ == 2 ? "config" : exit_code_ == 3 ? "data" : "solver";
  }

 private:
  std::string stage_;
  int exit_code_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw StageError(stage, 2, e.what());
  } catch (const DataError& e) {
    throw StageError(stage, 3, e.what());
  } catch (const SolverError& e) {
    throw StageError(stage, 4, e.what());
  }
}

inline Dataset load_dataset(const std::string& path, DataFormat format, bool csv_header,
                            std::size_t label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (format == DataFormat::csv) return parse_csv(buf.str(), label_column, csv_header);
  return parse_libsvm(buf.str());
}

inline Dataset load_dataset(const RunConfig& cfg) {
  return load_dataset(cfg.data_path, cfg.format, cfg.csv_header, cfg.label_column);
}

struct TestScore {
  std::size_t right = 0;
  std::size_t total = 0;
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(total);
  }
};

inline TestScore score(const MulticlassModel& model, const Dataset& test) {
  TestScore s;
  for (const auto& sample : test.samples()) {
    s.right += predict(model, sample.features) == sample.label;
    ++s.total;
  }
  return s;
}

/// Trains on the whole training set at (c, sigma) and scores the test set.
inline TestScore holdout_score(const Dataset& train, const Dataset& test, TrainConfig cfg,
                               double c, double sigma) {
  cfg.c = c;
  cfg.sigma = sigma;
  return score(train_multiclass(train, cfg), test);
}

struct PhaseTimings {
  double load_seconds = 0.0;
  double optimize_seconds = 0.0;
  double final_seconds = 0.0;
};

struct OptimizationReport {
  RunConfig config;
  std::size_t samples = 0;
  std::size_t dimension = 0;
  std::vector<Label> classes;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool stratified_folds = false;

  AcoResult aco;
  TestScore converged_test;
  TestScore best_test;
  PhaseTimings timings;
};

/// split -> optimize -> final model at the converged (C, sigma) -> test score.
inline OptimizationReport run_experiment(const RunConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  run_stage("config", [&] { cfg.validate(); });
  OptimizationReport report;
  report.config = cfg;
  report.config.aco.seed = cfg.seed;

  auto t0 = Clock::now();
  const Dataset data = run_stage("load", [&] { return load_dataset(cfg); });
  report.samples = data.size();
  report.dimension = data.dimension();
  report.classes = data.classes();
  auto [train, test] =
      run_stage("split", [&] { return split_train_test(data, cfg.train_count, cfg.seed); });
  report.train_size = train.size();
  report.test_size = test.size();
  auto t1 = Clock::now();

  report.aco = run_stage("optimize", [&] {
    if (train.classes().size() < 2) throw DataError("training split holds a single class");
    const FoldPlan plan = make_folds(train, cfg.cv_k, fold_seed(cfg.seed));
    report.stratified_folds = plan.stratified;
    CvFitness fitness(train, plan, cfg.svm);
    return optimize(fitness, report.config.aco, cfg.layout, cfg.workers);
  });
  auto t2 = Clock::now();

  run_stage("final", [&] {
    const auto& conv = report.aco.converged_point;
    const auto& best = report.aco.best_point;
    report.converged_test = holdout_score(train, test, cfg.svm, conv.c, conv.sigma);
    report.best_test = holdout_score(train, test, cfg.svm, best.c, best.sigma);
  });
  auto t3 = Clock::now();
  report.timings = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string path_string(const AntPath& p) {
  std::string s;
  s.reserve(p.digits.size());
  for (int d : p.digits) s += static_cast<char>('0' + d);
  return s;
}

inline AntPath path_from_string(const std::string& s) {
  AntPath p;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw DataError("invalid digit path '" + s + "'");
    p.digits.push_back(ch - '0');
  }
  return p;
}

inline Json to_json(const RunConfig& c) {
  return Json{
      {"data", c.data_path},
      {"format", to_string(c.format)},
      {"csv_header", c.csv_header},
      {"label_column", c.label_column},
      {"train_count", c.train_count},
      {"cv_k", c.cv_k},
      {"seed", c.seed},
      {"aco",
       {{"ants", c.aco.m},
        {"iters", c.aco.n_max},
        {"rho", c.aco.rho},
        {"q", c.aco.q},
        {"alpha", c.aco.alpha},
        {"beta", c.aco.beta},
        {"eta", c.aco.eta},
        {"tau0", c.aco.tau0},
        {"tau_min_ratio", c.aco.tau_min_ratio},
        {"epsilon_acc", c.aco.epsilon_acc},
        {"convergence_fraction", c.aco.convergence_fraction}}},
      {"layout",
       {{"c_digits", c.layout.c_digits},
        {"c_high_power", c.layout.c_high_power},
        {"sigma_digits", c.layout.sigma_digits},
        {"sigma_high_power", c.layout.sigma_high_power}}},
      {"svm",
       {{"kkt_tolerance", c.svm.kkt_tolerance},
        {"max_passes", c.svm.max_passes},
        {"pass_cap", c.svm.pass_cap}}},
  };
}

/// Inverse of to_json(RunConfig); absent keys keep their defaults.
inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  try {
    c.data_path = j.value("data", c.data_path);
    c.format = parse_format(j.value("format", to_string(c.format)));
    c.csv_header = j.value("csv_header", c.csv_header);
    c.label_column = j.value("label_column", c.label_column);
    c.train_count = j.value("train_count", c.train_count);
    c.cv_k = j.value("cv_k", c.cv_k);
    c.seed = j.value("seed", c.seed);
    if (j.contains("aco")) {
      const auto& a = j.at("aco");
      c.aco.m = a.value("ants", c.aco.m);
      c.aco.n_max = a.value("iters", c.aco.n_max);
      c.aco.rho = a.value("rho", c.aco.rho);
      c.aco.q = a.value("q", c.aco.q);
      c.aco.alpha = a.value("alpha", c.aco.alpha);
      c.aco.beta = a.value("beta", c.aco.beta);
      c.aco.eta = a.value("eta", c.aco.eta);
      c.aco.tau0 = a.value("tau0", c.aco.tau0);
      c.aco.tau_min_ratio = a.value("tau_min_ratio", c.aco.tau_min_ratio);
      c.aco.epsilon_acc = a.value("epsilon_acc", c.aco.epsilon_acc);
      c.aco.convergence_fraction = a.value("convergence_fraction", c.aco.convergence_fraction);
    }
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      c.layout.c_digits = l.value("c_digits", c.layout.c_digits);
      c.layout.c_high_power = l.value("c_high_power", c.layout.c_high_power);
      c.layout.sigma_digits = l.value("sigma_digits", c.layout.sigma_digits);
      c.layout.sigma_high_power = l.value("sigma_high_power", c.layout.sigma_high_power);
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      c.svm.kkt_tolerance = s.value("kkt_tolerance", c.svm.kkt_tolerance);
      c.svm.max_passes = s.value("max_passes", c.svm.max_passes);
      c.svm.pass_cap = s.value("pass_cap", c.svm.pass_cap);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.aco.seed = c.seed;
  return c;
}

inline Json to_json(const OptimizationReport& r) {
  const AcoResult& a = r.aco;
  Json iterations = Json::array();
  for (const auto& rec : a.history) {
    Json paths = Json::array();
    for (const auto& p : rec.paths) paths.push_back(path_string(p));
    iterations.push_back({{"iteration", rec.iteration},
                          {"paths", std::move(paths)},
                          {"fitnesses", rec.fitnesses},
                          {"modal_fraction", rec.modal_fraction},
                          {"best_so_far", rec.best_so_far}});
  }
  return Json{
      {"config", to_json(r.config)},
      {"dataset",
       {{"samples", r.samples},
        {"dimension", r.dimension},
        {"classes", r.classes},
        {"train_size", r.train_size},
        {"test_size", r.test_size},
        {"feature_scaling", "none"},
        {"stratified_folds", r.stratified_folds}}},
      {"best",
       {{"path", path_string(a.best_path)},
        {"c", a.best_point.c},
        {"sigma", a.best_point.sigma},
        {"cv_accuracy", a.best_fitness},
        {"iteration", a.best_iteration},
        {"ant", a.best_ant},
        {"test_accuracy", r.best_test.accuracy()},
        {"test_right", r.best_test.right},
        {"test_total", r.best_test.total}}},
      {"converged",
       {{"path", path_string(a.converged_path)},
        {"c", a.converged_point.c},
        {"sigma", a.converged_point.sigma},
        {"cv_accuracy", a.converged_fitness},
        {"converged", a.converged},
        {"test_accuracy", r.converged_test.accuracy()},
        {"test_right", r.converged_test.right},
        {"test_total", r.converged_test.total}}},
      {"iterations_run", a.iterations},
      {"evaluations", a.evaluations},
      {"flags",
       {{"c_clamps", a.flags.c_clamps},
        {"sigma_clamps", a.flags.sigma_clamps},
        {"guarded_deposits", a.flags.guarded_deposits},
        {"degenerate_folds", a.flags.degenerate_folds}}},
      {"iterations", std::move(iterations)},
  };
}

inline std::string dump_report(const Json& j) { return j.dump(1) + "\n"; }

// ---------------------------------------------------------------------------
// Output files

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

inline std::string trails_csv(const OptimizationReport& r) {
  std::string out = "iteration,ant,x,y,fitness\n";
  for (const auto& rec : r.aco.history) {
    for (std::size_t k = 0; k < rec.paths.size(); ++k) {
      const std::string tail = "," + fmt(rec.fitnesses[k]) + "\n";
      const std::string head = std::to_string(rec.iteration) + "," + std::to_string(k) + ",";
      const auto& digits = rec.paths[k].digits;
      for (std::size_t x = 0; x < digits.size(); ++x)
        out += head + std::to_string(x) + "," + std::to_string(digits[x]) + tail;
    }
  }
  return out;
}

inline std::string best_path_csv(const OptimizationReport& r) {
  std::string out = "x,y\n";
  const auto& digits = r.aco.best_path.digits;
  for (std::size_t x = 0; x < digits.size(); ++x)
    out += std::to_string(x) + "," + std::to_string(digits[x]) + "\n";
  return out;
}

inline std::string timing_json(const OptimizationReport& r) {
  return Json{{"load_seconds", r.timings.load_seconds},
              {"optimize_seconds", r.timings.optimize_seconds},
              {"final_seconds", r.timings.final_seconds}}
             .dump(1) +
         "\n";
}

}  // namespace detail

/// Writes report.json, trails.csv, best_path.csv (and timing.json) into
/// `out`. Files are staged under temporary names and renamed only once all
/// of them are written, so a failure leaves no partial outputs behind.
inline void emit_trails(const OptimizationReport& r, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw DataError("cannot create output directory '" + out.string() + "'");

  const std::vector<std::pair<std::string, std::string>> files = {
      {"report.json", dump_report(to_json(r))},
      {"trails.csv", detail::trails_csv(r)},
      {"best_path.csv", detail::best_path_csv(r)},
      {"timing.json", detail::timing_json(r)},
  };

  std::vector<fs::path> staged;
  const auto discard = [&] {
    for (const auto& p : staged) fs::remove(p, ec);
  };
  for (const auto& [name, body] : files) {
    const fs::path tmp = out / ("." + name + ".tmp");
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    staged.push_back(tmp);
    if (!(f << body) || !(f.flush())) {
      discard();
      throw DataError("cannot write '" + (out / name).string() + "'");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(staged[i], out / files[i].first, ec);
    if (ec) {
      for (std::size_t j = 0; j < i; ++j) fs::remove(out / files[j].first, ec);
      discard();
      throw DataError("cannot write '" + (out / files[i].first).string() + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Single-point evaluation

struct PointReport {
  double c = 0.0;
  double sigma = 0.0;
  CvResult cv;
  TestScore test;
};

/// CV accuracy on the training split and held-out accuracy at one (C, sigma).
inline PointReport evaluate_point(const RunConfig& cfg, double c, double sigma) {
  run_stage("config", [&] { cfg.validate(); });
  TrainConfig svm = cfg.svm;
  svm.c = c;
  svm.sigma = sigma;
  run_stage("config", [&] { svm.validate(); });
  const Dataset data = run_stage("load", [&] { return load_dataset(cfg); });
  auto [train, test] =
      run_stage("split", [&] { return split_train_test(data, cfg.train_count, cfg.seed); });
  PointReport out{c, sigma, {}, {}};
  out.cv = run_stage("cv", [&] {
    return cross_validate(train, make_folds(train, cfg.cv_k, fold_seed(cfg.seed)), svm,
                          cfg.workers);
  });
  out.test = run_stage("final", [&] { return holdout_score(train, test, svm, c, sigma); });
  return out;
}

inline Json to_json(const PointReport& p) {
  return Json{{"c", p.c},
              {"sigma", p.sigma},
              {"cv_mean_accuracy", p.cv.mean_accuracy},
              {"cv_fold_accuracies", p.cv.fold_accuracies},
              {"cv_right", p.cv.right},
              {"cv_error", p.cv.error},
              {"degenerate_folds", p.cv.degenerate_folds},
              {"stratified_folds", p.cv.stratified},
              {"test_accuracy", p.test.accuracy()},
              {"test_right", p.test.right},
              {"test_total", p.test.total}};
}

}  // namespace acosvm
