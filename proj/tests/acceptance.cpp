// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>

#include "acosvm/acosvm.hpp"
#include "planted.hpp"
#include "qp_oracle.hpp"
#include "test_util.hpp"

using namespace acosvm;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << detail
            << std::endl;
}

std::string pct(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::fixed << 100.0 * v << "%";
  return s.str();
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Shell {
  int status;
  std::string out;
};

Shell shell(const std::string& cmd) {
  Shell r{-1, {}};
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kWine = ACOSVM_DATA_DIR "/wine.scale";

// 1. Five seeded full runs on wine with the default constants.
void wine_reproduction() {
  double best_test = 0.0;
  int converged_ok = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig cfg;
    cfg.data_path = kWine;
    cfg.seed = seed;
    cfg.workers = workers();
    const auto r = run_experiment(cfg);
    best_test = std::max(best_test, r.best_test.accuracy());
    converged_ok += r.converged_test.accuracy() >= 0.80;
    per_seed << " [seed " << seed << ": best " << pct(r.best_test.accuracy()) << ", converged "
             << pct(r.converged_test.accuracy()) << ", iters " << r.aco.iterations << "]";
  }
  verdict(1, "wine reproduction", best_test >= 0.90 && converged_ok >= 4,
          "max best-point test " + pct(best_test) + " (need >= 90%), converged-path test >= 80% in " +
              std::to_string(converged_ok) + "/5 (need 4)" + per_seed.str());
}

// 2. `cv` subcommand at (C, sigma) = (18.605, 0.6643) over five seeds.
void single_point() {
  bool cv_ok = true;
  bool ran = true;
  double test_sum = 0.0;
  std::ostringstream per_seed;
  for (int seed = 0; seed < 5; ++seed) {
    const auto r = shell(std::string(ACOSVM_CLI) + " cv --data " + kWine +
                         " --C 18.605 --sigma 0.6643 --seed " + std::to_string(seed));
    if (r.status != 0) {
      ran = false;
      break;
    }
    const Json j = Json::parse(r.out);
    const double cv = j.at("cv_mean_accuracy").get<double>();
    const double test = j.at("test_accuracy").get<double>();
    cv_ok = cv_ok && cv >= 0.80;
    test_sum += test;
    per_seed << " [seed " << seed << ": cv " << pct(cv) << ", test " << pct(test) << "]";
  }
  if (!ran) {
    verdict(2, "single-point check", false, "cv subcommand failed");
    return;
  }
  const double mean_test = test_sum / 5.0;
  const bool in_band = std::abs(mean_test - 76.0 / 88.0) <= 0.07;
  verdict(2, "single-point check", cv_ok && in_band,
          std::string("cv >= 80% on every seed: ") + (cv_ok ? "yes" : "no") + "; mean test " +
              pct(mean_test) + " vs band [79.36%, 93.36%]" + per_seed.str());
}

// 3. Dual objective against the exact QP oracles, plus the two-point closed form.
void dual_oracle() {
  std::mt19937_64 rng(20240);
  std::uniform_real_distribution<double> logc(-1.0, 1.5), sig(0.3, 3.0);
  double worst = 0.0;
  double worst_lattice = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const Dataset ds = testutil::random_binary(rng, n, 2);
    TrainConfig cfg;
    cfg.c = std::pow(10.0, logc(rng));
    cfg.sigma = sig(rng);
    cfg.kkt_tolerance = 1e-6;
    const BinaryView view(ds, 1, -1);
    const auto m = train_binary(view, cfg);
    const auto p = testutil::to_problem(view, cfg.c, cfg.sigma);
    const double exact = oracle::enumerate_active_sets(p);
    worst = std::max(worst, std::abs(testutil::model_dual(p, m) - exact));
    if (n <= 4) worst_lattice = std::max(worst_lattice, std::abs(oracle::lattice_search(p) - exact));
  }
  const Dataset two = testutil::make_dataset({{0.0}, {2.0}}, {1, -1});
  TrainConfig cfg;
  cfg.c = 10.0;
  cfg.sigma = 1.0;
  const auto m = train_binary(BinaryView(two, 1, -1), cfg);
  const double closed = 1.0 / (1.0 - std::exp(-4.0 / 2.0));
  const double closed_err =
      std::max(std::abs(m.alphas[0] - closed), std::abs(m.alphas[1] - closed));
  std::ostringstream d;
  d << "max |dual - oracle| " << worst << " (need <= 1e-4), lattice vs enumeration " << worst_lattice
    << ", two-point |alpha - 1/(1-k)| " << closed_err << " (need <= 1e-6)";
  verdict(3, "dual-solver oracle", worst <= 1e-4 && worst_lattice <= 1e-4 && closed_err <= 1e-6,
          d.str());
}

// 4. KKT conditions on 50 random (C, sigma, dataset) triples.
void kkt_suite() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> logc(-1.0, 3.0), logs(-0.5, 0.7);
  int bad = 0;
  std::size_t unbounded = 0;
  double worst_margin = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng() % 50;
    const std::size_t dim = 1 + rng() % 4;
    const Dataset ds = trial % 2 ? testutil::random_binary(rng, n, dim)
                                 : testutil::blobs(rng, n / 2, 1.0 + static_cast<double>(rng() % 4));
    TrainConfig cfg;
    cfg.c = std::pow(10.0, logc(rng));
    cfg.sigma = std::pow(10.0, logs(rng));
    const double tol = cfg.kkt_tolerance;
    const BinaryView view(ds, ds.classes().back(), ds.classes().front());
    const auto m = train_binary(view, cfg);
    double balance = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < view.size(); ++i) {
      const double a = m.alphas[i];
      ok = ok && a >= 0.0 && a <= cfg.c + tol;
      balance += a * view.label(i);
      if (a > 0.0 && a < cfg.c) {
        ++unbounded;
        const double gap = std::abs(view.label(i) * decision_value(m, view.features(i)) - 1.0);
        worst_margin = std::max(worst_margin, gap);
        ok = ok && gap <= 10.0 * tol;
      }
    }
    ok = ok && std::abs(balance) <= tol;
    bad += !ok;
  }
  std::ostringstream d;
  d << (50 - bad) << "/50 models satisfy all conditions; " << unbounded
    << " unbounded SVs checked, worst |y f(x) - 1| " << worst_margin << " (limit 1e-2)";
  verdict(4, "KKT suite", bad == 0, d.str());
}

// 5. Transition normalization and hand-computed pheromone updates.
void aco_formulas() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> log_tau(-6.0, 6.0), expo(0.0, 3.0);
  double worst = 0.0;
  bool nonneg = true;
  for (int trial = 0; trial < 1000; ++trial) {
    PheromoneGrid grid(10, 1.0);
    for (std::size_t x = 0; x < 10; ++x)
      for (auto& t : grid.column(x)) t = std::pow(10.0, log_tau(rng));
    AcoConfig cfg;
    cfg.alpha = expo(rng);
    cfg.beta = expo(rng);
    for (std::size_t x = 0; x < 10; ++x) {
      const auto d = transition_distribution(grid, x, cfg);
      nonneg = nonneg && std::all_of(d.begin(), d.end(), [](double p) { return p >= 0.0; });
      worst = std::max(worst, std::abs(std::accumulate(d.begin(), d.end(), 0.0) - 1.0));
    }
  }

  const AcoConfig cfg;
  const PheromoneGrid grid(1, 1.0);
  const auto one = update_pheromone(grid, ColonyState{{AntPath{{4}}}, {0.9}, 0}, cfg).grid;
  const auto two =
      update_pheromone(grid, ColonyState{{AntPath{{4}}, AntPath{{4}}}, {0.5, 0.8}, 0}, cfg).grid;
  const auto none = update_pheromone(grid, ColonyState{}, cfg).grid;
  const bool exact = one.at(0, 4) == 0.7 * 1.0 + 100.0 / (1.0 - 0.9) &&
                     std::abs(one.at(0, 4) - 1000.7) <= 1e-9 && one.at(0, 3) == 0.7 &&
                     two.at(0, 4) == 0.7 + 100.0 / 0.5 + 100.0 / (1.0 - 0.8) &&
                     std::abs(two.at(0, 4) - 700.7) <= 1e-9 && none.at(0, 0) == 0.7 &&
                     deposit_amount(1.0, cfg).amount == cfg.q / cfg.epsilon_acc;
  std::ostringstream d;
  d << "max |sum P - 1| over 10000 columns " << worst << " (need <= 1e-12); update "
    << one.at(0, 4) << " / " << two.at(0, 4) << " vs 1000.7 / 700.7";
  verdict(5, "ACO unit formulas", worst <= 1e-12 && nonneg && exact, d.str());
}

// 6. Planted optimum on the default layout with the default constants.
void planted_optimum() {
  const planted::Bump bump;
  const auto argmax = planted::brute_force(bump);
  int found = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AcoConfig cfg;
    cfg.seed = seed;
    cfg.n_max = 100;
    const auto r = optimize(bump, cfg, bump.layout, workers());
    const bool hit = r.best_point.c == argmax.c && r.best_point.sigma == argmax.sigma;
    found += hit;
    per_seed << " [" << seed << ": " << path_string(r.best_path) << (hit ? " hit" : "") << "]";
  }
  std::ostringstream d;
  d << "optimum C=" << argmax.c << " sigma=" << argmax.sigma << " found in " << found
    << "/10 runs (need 9)" << per_seed.str();
  verdict(6, "planted-optimum search", found >= 9, d.str());
}

// 7. report.json byte-identical for --workers 1 and --workers 8.
void determinism() {
  const fs::path base = fs::temp_directory_path() / "acosvm_acceptance_determinism";
  fs::remove_all(base);
  const std::string common = std::string(ACOSVM_CLI) + " tune --data " + kWine +
                             " --iters 30 --seed 7 --out " + base.string();
  const auto a = shell(common + "/w1 --workers 1");
  const auto b = shell(common + "/w8 --workers 8");
  const auto c = shell(common + "/w1b --workers 1");
  const std::string ra = slurp(base / "w1" / "report.json");
  const bool ok = a.status == 0 && b.status == 0 && c.status == 0 && !ra.empty() &&
                  ra == slurp(base / "w8" / "report.json") &&
                  ra == slurp(base / "w1b" / "report.json");
  verdict(7, "determinism / parallel equivalence", ok,
          "report.json (" + std::to_string(ra.size()) + " bytes) " +
              (ok ? "identical" : "differs or run failed") + " across workers 1, 8 and a rerun");
  fs::remove_all(base);
}

// 8. Chi-square goodness of fit of 100,000 uniform roulette draws.
void roulette_chi_square() {
  std::array<double, 10> uniform;
  uniform.fill(0.1);
  CounterRng rng{2024, 8};
  std::array<double, 10> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(roulette_select(uniform, rng))];
  double stat = 0.0;
  for (double c : counts) stat += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
  const double critical = 27.877;  // chi-square, 9 dof, upper 0.001
  std::ostringstream d;
  d << "statistic " << stat << " vs critical " << critical;
  verdict(8, "roulette chi-square", stat < critical, d.str());
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria = {wine_reproduction, single_point, dual_oracle,
                                            kkt_suite,         aco_formulas, planted_optimum,
                                            determinism,       roulette_chi_square};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      verdict(static_cast<int>(i + 1), "exception", false, e.what());
    }
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
