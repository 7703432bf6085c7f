#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acosvm/crossval.hpp"
#include "acosvm/data.hpp"
#include "acosvm/error.hpp"
#include "acosvm/parallel.hpp"
#include "acosvm/rng.hpp"
#include "acosvm/svm.hpp"

namespace acosvm {

inline constexpr std::size_t kDigits = 10;

/// Column layout of an ant path: the first `c_digits` columns are the
/// significant digits of C starting at 10^c_high_power, the remaining
/// `sigma_digits` those of sigma starting at 10^sigma_high_power.
struct DigitLayout {
  int c_digits = 5;
  int c_high_power = 2;
  int sigma_digits = 5;
  int sigma_high_power = 0;

  std::size_t columns() const noexcept {
    return static_cast<std::size_t>(c_digits + sigma_digits);
  }
  double c_unit() const { return std::pow(10.0, c_high_power - c_digits + 1); }
  double sigma_unit() const { return std::pow(10.0, sigma_high_power - sigma_digits + 1); }

  void validate() const {
    if (c_digits < 1 || sigma_digits < 1) throw ConfigError("each parameter needs >= 1 digit");
    if (c_digits > 15 || sigma_digits > 15) throw ConfigError("at most 15 digits per parameter");
    if (std::abs(c_high_power) > 30 || std::abs(sigma_high_power) > 30)
      throw ConfigError("leading digit power out of range");
  }
};

struct AntPath {
  std::vector<int> digits;

  friend auto operator<=>(const AntPath&, const AntPath&) = default;
  friend bool operator==(const AntPath&, const AntPath&) = default;
};

struct ParamPoint {
  double c = 0.0;
  double sigma = 0.0;
  bool c_clamped = false;
  bool sigma_clamped = false;
};

namespace detail {

// sum_i digits[i] * 10^(high - i), accumulated as an integer and scaled once
// so that e.g. [0,6,6,4,3] at high=0 is the double nearest 0.6643.
inline double decode_digits(std::span<const int> digits, int high_power) {
  std::int64_t mantissa = 0;
  for (int d : digits) mantissa = mantissa * 10 + d;
  const int low_power = high_power - static_cast<int>(digits.size()) + 1;
  const double m = static_cast<double>(mantissa);
  return low_power >= 0 ? m * std::pow(10.0, low_power) : m / std::pow(10.0, -low_power);
}

}  // namespace detail

/// Maps a path to (C, sigma). A parameter that decodes to 0 is raised to one
/// unit of its smallest place and flagged.
inline ParamPoint decode_path(const AntPath& path, const DigitLayout& layout) {
  if (path.digits.size() != layout.columns())
    throw ConfigError("path has " + std::to_string(path.digits.size()) + " digits, layout needs " +
                      std::to_string(layout.columns()));
  const std::span<const int> all(path.digits);
  const auto c_part = all.first(static_cast<std::size_t>(layout.c_digits));
  const auto s_part = all.subspan(static_cast<std::size_t>(layout.c_digits));
  ParamPoint p;
  p.c = detail::decode_digits(c_part, layout.c_high_power);
  p.sigma = detail::decode_digits(s_part, layout.sigma_high_power);
  if (p.c == 0.0) {
    p.c = layout.c_unit();
    p.c_clamped = true;
  }
  if (p.sigma == 0.0) {
    p.sigma = layout.sigma_unit();
    p.sigma_clamped = true;
  }
  return p;
}

struct AcoConfig {
  std::size_t m = 30;
  std::size_t n_max = 500;
  double rho = 0.7;   // persistence: tau <- rho * tau + deposits
  double q = 100.0;
  double alpha = 1.0;
  double beta = 1.0;
  double eta = 1.0;
  double tau0 = 1.0;
  double epsilon_acc = 1e-3;
  double convergence_fraction = 0.9;
  double tau_min_ratio = 1e-6;  // floor = tau_min_ratio * tau0
  std::uint64_t seed = 0;

  double tau_min() const noexcept { return tau_min_ratio * tau0; }

  void validate() const {
    if (m < 1) throw ConfigError("colony size m must be >= 1");
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must be in (0, 1]");
    if (!(q > 0.0)) throw ConfigError("Q must be positive");
    if (!std::isfinite(alpha) || !std::isfinite(beta)) throw ConfigError("alpha/beta must be finite");
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ConfigError("tau0 must be positive");
    if (!(epsilon_acc > 0.0)) throw ConfigError("epsilon_acc must be positive");
    if (!(convergence_fraction > 0.0 && convergence_fraction <= 1.0))
      throw ConfigError("convergence_fraction must be in (0, 1]");
    if (!(tau_min_ratio > 0.0)) throw ConfigError("tau_min_ratio must be positive");
  }
};

/// n x 10 pheromone matrix; row x is a path column, entry y a digit.
class PheromoneGrid {
 public:
  PheromoneGrid(std::size_t columns, double tau0) : columns_(columns), tau0_(tau0) {
    if (columns == 0) throw ConfigError("pheromone grid needs at least one column");
    if (!(tau0 > 0.0)) throw ConfigError("tau0 must be positive");
    tau_.assign(columns * kDigits, tau0);
  }

  std::size_t columns() const noexcept { return columns_; }
  double tau0() const noexcept { return tau0_; }
  double& at(std::size_t x, std::size_t y) { return tau_.at(x * kDigits + y); }
  double at(std::size_t x, std::size_t y) const { return tau_.at(x * kDigits + y); }
  std::span<const double> column(std::size_t x) const {
    return std::span<const double>(tau_).subspan(x * kDigits, kDigits);
  }
  std::span<double> column(std::size_t x) {
    return std::span<double>(tau_).subspan(x * kDigits, kDigits);
  }
  double min() const { return *std::min_element(tau_.begin(), tau_.end()); }

  friend bool operator==(const PheromoneGrid&, const PheromoneGrid&) = default;

 private:
  std::size_t columns_;
  double tau0_;
  std::vector<double> tau_;
};

using DigitDistribution = std::array<double, kDigits>;

/// P(y) = tau(x,y)^alpha eta^beta / sum_j tau(x,j)^alpha eta^beta.
inline DigitDistribution transition_distribution(const PheromoneGrid& grid, std::size_t column,
                                                 const AcoConfig& cfg) {
  if (column >= grid.columns()) throw ConfigError("column out of range");
  const double heuristic = std::pow(cfg.eta, cfg.beta);
  DigitDistribution w{};
  double sum = 0.0;
  const auto tau = grid.column(column);
  for (std::size_t y = 0; y < kDigits; ++y) {
    w[y] = (cfg.alpha == 1.0 ? tau[y] : std::pow(tau[y], cfg.alpha)) * heuristic;
    sum += w[y];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    w.fill(1.0 / static_cast<double>(kDigits));
    return w;
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Cumulative-sum threshold scan against u * total, u in (0, 1]. Entries of
/// zero probability are never returned.
inline int roulette_select(std::span<const double> dist, double u) {
  double total = 0.0;
  for (double p : dist) total += p;
  const double threshold = u * total;
  std::size_t j = 0;
  double acc = dist[0];
  while (acc < threshold && j + 1 < dist.size()) acc += dist[++j];
  while (dist[j] <= 0.0 && j > 0) --j;  // rounding fell off the end
  return static_cast<int>(j);
}

inline int roulette_select(std::span<const double> dist, CounterRng& rng) {
  return roulette_select(dist, rng.uniform_open_closed());
}

namespace detail {
constexpr std::uint64_t kAntStream = 0x616e74ULL;  // "ant"
}

/// Builds m paths column by column. The draw for (ant k, column x) comes
/// from the stream keyed by (seed, iteration, k, x), so the result does not
/// depend on `workers` or scheduling.
inline std::vector<AntPath> construct_colony(const PheromoneGrid& grid, const AcoConfig& cfg,
                                             std::size_t iteration, std::size_t workers = 1) {
  std::vector<DigitDistribution> choice(grid.columns());
  for (std::size_t x = 0; x < grid.columns(); ++x) choice[x] = transition_distribution(grid, x, cfg);

  std::vector<AntPath> paths(cfg.m);
  parallel_for(cfg.m, workers, [&](std::size_t k) {
    AntPath& path = paths[k];
    path.digits.resize(grid.columns());
    for (std::size_t x = 0; x < grid.columns(); ++x) {
      CounterRng rng{cfg.seed, detail::kAntStream, iteration, k, x};
      path.digits[x] = roulette_select(choice[x], rng);
    }
  });
  return paths;
}

struct Deposit {
  double amount = 0.0;
  bool guarded = false;  // 1 - acc fell below epsilon_acc
};

/// Q / max(1 - acc, epsilon_acc).
inline Deposit deposit_amount(double acc, const AcoConfig& cfg) {
  const double miss = 1.0 - acc;
  if (miss < cfg.epsilon_acc) return {cfg.q / cfg.epsilon_acc, true};
  return {cfg.q / miss, false};
}

struct ColonyState {
  std::vector<AntPath> paths;
  std::vector<double> fitnesses;
  std::size_t iteration = 0;
};

struct PheromoneUpdate {
  PheromoneGrid grid;
  std::size_t guarded_deposits = 0;
};

/// tau <- rho * tau + sum_k deposit(Acc_k) over the cells ant k visited,
/// then every cell is floored at tau_min.
inline PheromoneUpdate update_pheromone(const PheromoneGrid& grid, const ColonyState& colony,
                                        const AcoConfig& cfg) {
  if (colony.paths.size() != colony.fitnesses.size())
    throw ConfigError("colony paths and fitnesses differ in length");
  PheromoneUpdate out{grid, 0};
  for (std::size_t x = 0; x < grid.columns(); ++x)
    for (double& t : out.grid.column(x)) t *= cfg.rho;
  for (std::size_t k = 0; k < colony.paths.size(); ++k) {
    const auto& digits = colony.paths[k].digits;
    if (digits.size() != grid.columns()) throw ConfigError("path length does not match grid");
    const Deposit d = deposit_amount(colony.fitnesses[k], cfg);
    if (d.guarded) ++out.guarded_deposits;
    for (std::size_t x = 0; x < digits.size(); ++x)
      out.grid.at(x, static_cast<std::size_t>(digits[x])) += d.amount;
  }
  const double floor = cfg.tau_min();
  for (std::size_t x = 0; x < grid.columns(); ++x)
    for (double& t : out.grid.column(x)) t = std::max(t, floor);
  return out;
}

struct ModalPath {
  AntPath path;
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Most frequent path; ties go to the lexicographically smallest.
inline ModalPath modal_path(std::span<const AntPath> paths) {
  std::map<AntPath, std::size_t> counts;
  for (const auto& p : paths) ++counts[p];
  ModalPath out;
  for (const auto& [p, n] : counts)
    if (n > out.count) out = {p, n, 0.0};
  if (!paths.empty())
    out.fraction = static_cast<double>(out.count) / static_cast<double>(paths.size());
  return out;
}

inline bool has_converged(const ColonyState& colony, const AcoConfig& cfg) {
  if (colony.paths.empty()) return false;
  const auto modal = modal_path(colony.paths);
  return static_cast<double>(modal.count) >=
         cfg.convergence_fraction * static_cast<double>(colony.paths.size());
}

/// Fitness of one (C, sigma) candidate.
struct Fitness {
  double accuracy = 0.0;
  std::size_t degenerate_folds = 0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<AntPath> paths;
  std::vector<ParamPoint> points;
  std::vector<double> fitnesses;
  double modal_fraction = 0.0;
  double best_so_far = 0.0;
};

struct AcoFlags {
  std::size_t c_clamps = 0;
  std::size_t sigma_clamps = 0;
  std::size_t guarded_deposits = 0;
  std::size_t degenerate_folds = 0;
};

struct AcoResult {
  AntPath best_path;
  ParamPoint best_point;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::size_t best_iteration = 0;
  std::size_t best_ant = 0;

  AntPath converged_path;  // modal path of the final iteration
  ParamPoint converged_point;
  double converged_fitness = 0.0;
  bool converged = false;

  std::size_t iterations = 0;
  std::size_t evaluations = 0;  // distinct (C, sigma) points scored
  std::vector<IterationRecord> history;
  AcoFlags flags;
};

/// Digit-grid ant colony search. `evaluate(ParamPoint) -> Fitness` must be a
/// pure function of its argument: it is memoised per decoded point and may
/// run on up to `workers` threads.
template <typename Evaluate>
AcoResult optimize(Evaluate&& evaluate, const AcoConfig& cfg, const DigitLayout& layout,
                   std::size_t workers = 1) {
  cfg.validate();
  layout.validate();

  PheromoneGrid grid(layout.columns(), cfg.tau0);
  std::map<std::pair<double, double>, Fitness> cache;
  AcoResult result;

  for (std::size_t iter = 0; iter < cfg.n_max; ++iter) {
    ColonyState colony{construct_colony(grid, cfg, iter, workers), {}, iter};

    IterationRecord record;
    record.iteration = iter;
    record.points.reserve(cfg.m);
    std::vector<std::pair<double, double>> pending;
    for (const auto& path : colony.paths) {
      const ParamPoint p = decode_path(path, layout);
      result.flags.c_clamps += p.c_clamped;
      result.flags.sigma_clamps += p.sigma_clamped;
      record.points.push_back(p);
      const std::pair key{p.c, p.sigma};
      if (!cache.contains(key) && std::find(pending.begin(), pending.end(), key) == pending.end())
        pending.push_back(key);
    }

    std::vector<Fitness> scored(pending.size());
    parallel_for(pending.size(), workers, [&](std::size_t i) {
      const auto& key = pending[i];
      const auto ant = static_cast<std::size_t>(
          std::find_if(record.points.begin(), record.points.end(),
                       [&](const ParamPoint& p) { return p.c == key.first && p.sigma == key.second; }) -
          record.points.begin());
      try {
        scored[i] = evaluate(record.points[ant]);
      } catch (const SolverError& e) {
        throw SolverError("iteration " + std::to_string(iter) + ", ant " + std::to_string(ant) +
                          ": " + e.what());
      } catch (const DataError& e) {
        throw DataError("iteration " + std::to_string(iter) + ", ant " + std::to_string(ant) +
                        ": " + e.what());
      }
    });
    for (std::size_t i = 0; i < pending.size(); ++i) {
      cache.emplace(pending[i], scored[i]);
      result.flags.degenerate_folds += scored[i].degenerate_folds;
    }
    result.evaluations = cache.size();

    colony.fitnesses.reserve(cfg.m);
    for (std::size_t k = 0; k < cfg.m; ++k) {
      const ParamPoint& p = record.points[k];
      const double acc = cache.at({p.c, p.sigma}).accuracy;
      colony.fitnesses.push_back(acc);
      if (acc > result.best_fitness) {
        result.best_fitness = acc;
        result.best_path = colony.paths[k];
        result.best_point = p;
        result.best_iteration = iter;
        result.best_ant = k;
      }
    }

    auto update = update_pheromone(grid, colony, cfg);
    grid = std::move(update.grid);
    result.flags.guarded_deposits += update.guarded_deposits;

    const ModalPath modal = modal_path(colony.paths);
    record.paths = colony.paths;
    record.fitnesses = colony.fitnesses;
    record.modal_fraction = modal.fraction;
    record.best_so_far = result.best_fitness;
    result.history.push_back(std::move(record));
    result.iterations = iter + 1;

    result.converged_path = modal.path;
    result.converged_point = decode_path(modal.path, layout);
    result.converged_fitness =
        cache.at({result.converged_point.c, result.converged_point.sigma}).accuracy;
    if (has_converged(colony, cfg)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// k-fold CV accuracy on a fixed fold plan; the fitness the optimizer uses
/// for real data.
class CvFitness {
 public:
  CvFitness(const Dataset& train, FoldPlan plan, TrainConfig base)
      : train_(&train), plan_(std::move(plan)), base_(base) {}

  Fitness operator()(const ParamPoint& p) const {
    TrainConfig cfg = base_;
    cfg.c = p.c;
    cfg.sigma = p.sigma;
    const CvResult cv = cross_validate(*train_, plan_, cfg, 1);
    return {cv.mean_accuracy, cv.degenerate_folds.size()};
  }

  const FoldPlan& plan() const noexcept { return plan_; }

 private:
  const Dataset* train_;
  FoldPlan plan_;
  TrainConfig base_;
};

/// Fold seed shared by every ant of a run.
inline std::uint64_t fold_seed(std::uint64_t run_seed) {
  return derive_key({run_seed, 0x637666ULL /* "cvf" */});
}

inline AcoResult optimize(const Dataset& train, std::size_t k, const AcoConfig& cfg,
                          const DigitLayout& layout, const TrainConfig& svm_base,
                          std::size_t workers = 1) {
  if (train.classes().size() < 2) throw DataError("training set needs at least two classes");
  CvFitness fitness(train, make_folds(train, k, fold_seed(cfg.seed)), svm_base);
  return optimize(fitness, cfg, layout, workers);
}

}  // namespace acosvm
