// acosvm: tune RBF-SVM (C, sigma) with the digit-grid ant colony.
//
//   acosvm tune    --data wine.scale --out run/        full experiment
//   acosvm cv      --data wine.scale --C 18.605 --sigma 0.6643
//   acosvm inspect --data wine.scale
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 solver failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "acosvm/acosvm.hpp"

namespace {

using acosvm::Json;

int fail(const std::string& stage, const char* kind, int code, const std::string& message) {
  std::cerr << Json{{"error", {{"stage", stage}, {"kind", kind}, {"message", message}}}}.dump()
            << "\n";
  return code;
}

Json inspect(const acosvm::Dataset& ds) {
  Json classes = Json::object();
  for (auto c : ds.classes()) classes[std::to_string(c)] = ds.count(c);
  Json features = Json::array();
  for (std::size_t j = 0; j < ds.dimension(); ++j) {
    double lo = ds[0].features[j];
    double hi = lo;
    double sum = 0.0;
    for (const auto& s : ds.samples()) {
      lo = std::min(lo, s.features[j]);
      hi = std::max(hi, s.features[j]);
      sum += s.features[j];
    }
    features.push_back({{"index", j + 1},
                        {"min", lo},
                        {"max", hi},
                        {"mean", sum / static_cast<double>(ds.size())}});
  }
  return Json{{"samples", ds.size()},
              {"dimension", ds.dimension()},
              {"classes", std::move(classes)},
              {"features", std::move(features)}};
}

}  // namespace

int main(int argc, char** argv) {
  acosvm::RunConfig cfg;
  cfg.workers = std::max(1u, std::thread::hardware_concurrency());
  std::string format = "libsvm";
  std::string replay;
  double point_c = 0.0;
  double point_sigma = 0.0;

  CLI::App app{"Ant colony selection of RBF-SVM hyperparameters (C, sigma)"};
  app.set_config("--config", "", "INI/TOML file with option defaults (flags take precedence)");
  app.require_subcommand(1);

  app.add_option("--data", cfg.data_path, "Dataset path");
  app.add_option("--format", format, "Dataset format")
      ->check(CLI::IsMember({"libsvm", "csv"}))
      ->capture_default_str();
  app.add_flag("--csv-header", cfg.csv_header, "Skip the first CSV row");
  app.add_option("--label-column", cfg.label_column, "0-based CSV label column")
      ->capture_default_str();
  app.add_option("--train-count", cfg.train_count, "Training split size")->capture_default_str();
  app.add_option("--cv-k", cfg.cv_k, "Cross-validation folds")->capture_default_str();
  app.add_option("--ants", cfg.aco.m, "Colony size m")->capture_default_str();
  app.add_option("--iters", cfg.aco.n_max, "Maximum iterations N_max")->capture_default_str();
  app.add_option("--rho", cfg.aco.rho, "Pheromone persistence")->capture_default_str();
  app.add_option("--q", cfg.aco.q, "Deposit constant Q")->capture_default_str();
  app.add_option("--alpha", cfg.aco.alpha, "Pheromone exponent")->capture_default_str();
  app.add_option("--beta", cfg.aco.beta, "Heuristic exponent")->capture_default_str();
  app.add_option("--eta", cfg.aco.eta, "Heuristic desirability")->capture_default_str();
  app.add_option("--tau0", cfg.aco.tau0, "Initial pheromone")->capture_default_str();
  app.add_option("--eps-acc", cfg.aco.epsilon_acc, "Deposit divergence guard")
      ->capture_default_str();
  app.add_option("--converge-frac", cfg.aco.convergence_fraction,
                 "Colony share on one path that counts as converged")
      ->capture_default_str();
  app.add_option("--c-digits", cfg.layout.c_digits, "Significant digits of C")
      ->capture_default_str();
  app.add_option("--c-high-power", cfg.layout.c_high_power, "Power of ten of C's leading digit")
      ->capture_default_str();
  app.add_option("--sigma-digits", cfg.layout.sigma_digits, "Significant digits of sigma")
      ->capture_default_str();
  app.add_option("--sigma-high-power", cfg.layout.sigma_high_power,
                 "Power of ten of sigma's leading digit")
      ->capture_default_str();
  app.add_option("--kkt-tol", cfg.svm.kkt_tolerance, "SMO KKT tolerance")->capture_default_str();
  app.add_option("--max-passes", cfg.svm.max_passes, "SMO clean passes before stopping")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Run seed (split, folds, colony)")->capture_default_str();
  app.add_option("--workers", cfg.workers, "Worker threads (results do not depend on it)")
      ->capture_default_str();

  auto* tune = app.add_subcommand("tune", "Split, optimize, evaluate; write report + trails");
  tune->fallthrough();
  tune->add_option("--out", cfg.out_dir, "Output directory")->required();
  tune->add_option("--replay", replay, "Re-run the configuration embedded in a report.json");

  auto* cv = app.add_subcommand("cv", "Cross-validate and test one (C, sigma)");
  cv->fallthrough();
  cv->add_option("--C", point_c, "Box constraint C")->required();
  cv->add_option("--sigma", point_sigma, "RBF width sigma")->required();

  auto* ins = app.add_subcommand("inspect", "Print dataset statistics");
  ins->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("arguments", "config", 2, e.what());
  }

  try {
    cfg.format = acosvm::parse_format(format);
    if (!replay.empty()) {
      std::ifstream in(replay);
      if (!in) return fail("config", "config", 2, "cannot open '" + replay + "'");
      Json j;
      try {
        j = Json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        return fail("config", "config", 2, e.what());
      }
      auto replayed = acosvm::run_config_from_json(j.contains("config") ? j.at("config") : j);
      replayed.workers = cfg.workers;
      replayed.out_dir = cfg.out_dir;
      cfg = std::move(replayed);
    }
    cfg.aco.seed = cfg.seed;

    if (*ins) {
      const auto ds =
          acosvm::run_stage("load", [&] { return acosvm::load_dataset(cfg); });
      std::cout << inspect(ds).dump(1) << "\n";
      return 0;
    }
    if (*cv) {
      const auto point = acosvm::evaluate_point(cfg, point_c, point_sigma);
      std::cout << acosvm::to_json(point).dump(1) << "\n";
      return 0;
    }

    const auto report = acosvm::run_experiment(cfg);
    acosvm::run_stage("write", [&] { acosvm::emit_trails(report, cfg.out_dir); });
    const Json full = acosvm::to_json(report);
    std::cout << Json{{"best", full.at("best")},
                      {"converged", full.at("converged")},
                      {"iterations_run", full.at("iterations_run")},
                      {"evaluations", full.at("evaluations")},
                      {"flags", full.at("flags")},
                      {"out", cfg.out_dir}}
                     .dump(1)
              << "\n";
    return 0;
  } catch (const acosvm::StageError& e) {
    return fail(e.stage(), e.kind(), e.exit_code(), e.what());
  } catch (const acosvm::ConfigError& e) {
    return fail("config", "config", 2, e.what());
  } catch (const acosvm::DataError& e) {
    return fail("data", "data", 3, e.what());
  } catch (const acosvm::SolverError& e) {
    return fail("solver", "solver", 4, e.what());
  }
}
