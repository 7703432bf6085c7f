#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acosvm/data.hpp"
#include "acosvm/error.hpp"

namespace acosvm {

/// exp(-||x1 - x2||^2 / (2 sigma^2)).
inline double rbf_kernel(std::span<const double> x1, std::span<const double> x2, double sigma) {
  if (x1.size() != x2.size())
    throw DataError("rbf_kernel: vectors of length " + std::to_string(x1.size()) + " and " +
                    std::to_string(x2.size()));
  double sq = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double d = x1[i] - x2[i];
    sq += d * d;
  }
  return std::exp(-sq / (2.0 * sigma * sigma));
}

struct TrainConfig {
  double c = 1.0;
  double sigma = 1.0;
  double kkt_tolerance = 1e-3;
  // Consecutive passes without a successful pair update before halting.
  int max_passes = 10;
  // Absolute pass limit; reaching it sets SvmModel::hit_pass_cap.
  int pass_cap = 10000;
  // Kernel matrix is cached when the training set has at most this many samples.
  std::size_t cache_limit = 2000;

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("C must be positive and finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw ConfigError("sigma must be positive and finite");
    if (!(kkt_tolerance > 0.0)) throw ConfigError("kkt_tolerance must be positive");
    if (max_passes < 1) throw ConfigError("max_passes must be >= 1");
    if (pass_cap < max_passes) throw ConfigError("pass_cap must be >= max_passes");
  }
};

/// Trained binary machine. `alphas` has one entry per training sample of
/// the view it was trained on; only samples with alpha > 0 are retained in
/// `support`.
struct SvmModel {
  std::vector<double> alphas;
  double bias = 0.0;
  std::vector<std::vector<double>> support;
  std::vector<double> support_alphas;
  std::vector<double> support_labels;  // +1 / -1
  TrainConfig config;
  std::size_t dimension = 0;
  Label positive_class = +1;
  Label negative_class = -1;

  double dual_objective = 0.0;
  std::vector<double> dual_history;  // objective after each solver pass
  int passes = 0;
  bool hit_pass_cap = false;
};

/// sum_i alpha_i y_i k(x_i, x) + b.
inline double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dimension)
    throw DataError("decision_value: expected dimension " + std::to_string(model.dimension) +
                    ", got " + std::to_string(x.size()));
  double f = model.bias;
  for (std::size_t i = 0; i < model.support.size(); ++i)
    f += model.support_alphas[i] * model.support_labels[i] *
         rbf_kernel(model.support[i], x, model.config.sigma);
  return f;
}

/// f(x) == 0 resolves to the positive class.
inline Label predict(const SvmModel& model, std::span<const double> x) {
  return decision_value(model, x) >= 0.0 ? model.positive_class : model.negative_class;
}

namespace detail {

class SmoSolver {
 public:
  SmoSolver(const BinaryView& view, const TrainConfig& cfg)
      : view_(view), cfg_(cfg), n_(view.size()), y_(view.labels()) {
    alpha_.assign(n_, 0.0);
    grad_.assign(n_, 0.0);
    cached_ = n_ <= cfg.cache_limit;
    if (cached_) {
      kernel_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        kernel_[i * n_ + i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
          const double k = compute_kernel(i, j);
          kernel_[i * n_ + j] = k;
          kernel_[j * n_ + i] = k;
        }
      }
    }
  }

  void run(SvmModel& out) {
    int clean = 0;
    int pass = 0;
    while (pass < cfg_.pass_cap) {
      ++pass;
      std::size_t changed = 0;
      Thresholds t = thresholds();
      for (std::size_t i = 0; i < n_; ++i) {
        if (examine(i, t)) {
          ++changed;
          t = thresholds();
        }
      }
      out.dual_history.push_back(dual_objective());
      if (changed != 0) {
        clean = 0;
      } else if (++clean >= cfg_.max_passes) {
        break;
      }
    }
    out.passes = pass;
    out.hit_pass_cap = clean < cfg_.max_passes;
    const Thresholds t = thresholds();
    if (std::isinf(t.up))
      bias_ = -t.low;
    else if (std::isinf(t.low))
      bias_ = -t.up;
    else
      bias_ = -0.5 * (t.up + t.low);
  }

  const std::vector<double>& alphas() const noexcept { return alpha_; }
  double bias() const noexcept { return bias_; }

  double dual_objective() const {
    double sum_alpha = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      sum_alpha += alpha_[i];
      quad += alpha_[i] * y_[i] * grad_[i];
    }
    return sum_alpha - 0.5 * quad;
  }

 private:
  double compute_kernel(std::size_t i, std::size_t j) const {
    const double k = rbf_kernel(view_.features(i), view_.features(j), cfg_.sigma);
    if (!std::isfinite(k)) throw SolverError("non-finite kernel value");
    return k;
  }

  double kernel(std::size_t i, std::size_t j) const {
    return cached_ ? kernel_[i * n_ + j] : (i == j ? 1.0 : compute_kernel(i, j));
  }

  // Bias-free error: f(x_i) - b - y_i, with grad_[i] = sum_j alpha_j y_j K_ij.
  double error(std::size_t i) const { return grad_[i] - y_[i]; }

  // i may move so that y_i f(x_i) decreases / increases.
  bool in_up(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] < cfg_.c : alpha_[i] > 0.0;
  }
  bool in_low(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] > 0.0 : alpha_[i] < cfg_.c;
  }

  // Optimality holds iff low <= up + 2 tol; the bias then lies in [up, low]
  // up to sign, and every free vector satisfies |y f(x) - 1| <= tol.
  struct Thresholds {
    double up = std::numeric_limits<double>::infinity();
    double low = -std::numeric_limits<double>::infinity();
    std::size_t up_index = 0;
    std::size_t low_index = 0;
  };

  Thresholds thresholds() const {
    Thresholds t;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = error(i);
      if (in_up(i) && e < t.up) {
        t.up = e;
        t.up_index = i;
      }
      if (in_low(i) && e > t.low) {
        t.low = e;
        t.low_index = i;
      }
    }
    return t;
  }

  bool violates(std::size_t i, const Thresholds& t) const {
    const double e = error(i);
    const double gap = 2.0 * cfg_.kkt_tolerance;
    return (in_up(i) && e < t.low - gap) || (in_low(i) && e > t.up + gap);
  }

  bool examine(std::size_t i, const Thresholds& t) {
    if (!violates(i, t)) return false;
    // Partner: the vector that sets the opposite threshold, i.e. the one
    // maximising |E_i - E_j| on the side i violates against.
    const bool up_side = in_up(i) && error(i) < t.low - 2.0 * cfg_.kkt_tolerance;
    const std::size_t best = up_side ? t.low_index : t.up_index;
    if (best != i && take_step(i, best)) return true;
    for (std::size_t s = 1; s < n_; ++s) {
      const std::size_t j = (i + s) % n_;
      if (j != best && take_step(i, j)) return true;
    }
    return false;
  }

  bool take_step(std::size_t i, std::size_t j) {
    const double c = cfg_.c;
    const double ai = alpha_[i];
    const double aj = alpha_[j];
    const double yi = y_[i];
    const double yj = y_[j];
    const double ei = error(i);
    const double ej = error(j);

    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(c, c + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - c);
      hi = std::min(c, ai + aj);
    }
    if (hi - lo <= 1e-15 * c) return false;

    const double kii = kernel(i, i);
    const double kjj = kernel(j, j);
    const double kij = kernel(i, j);
    const double eta = kii + kjj - 2.0 * kij;
    if (eta <= 1e-12) return false;

    double aj_new = std::clamp(aj + yj * (ei - ej) / eta, lo, hi);
    if (std::abs(aj_new - aj) <= 1e-14 * std::max(1.0, c)) return false;
    double ai_new = ai + yi * yj * (aj - aj_new);

    // Snap to the box so bounded multipliers compare exactly.
    const double snap = 1e-12 * c;
    const auto to_box = [&](double a) {
      if (a < snap) return 0.0;
      if (a > c - snap) return c;
      return a;
    };
    ai_new = to_box(ai_new);
    aj_new = to_box(aj_new);

    const double di = ai_new - ai;
    const double dj = aj_new - aj;
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;

    for (std::size_t k = 0; k < n_; ++k)
      grad_[k] += yi * di * kernel(i, k) + yj * dj * kernel(j, k);
    return true;
  }

  const BinaryView& view_;
  const TrainConfig& cfg_;
  std::size_t n_;
  const std::vector<double>& y_;
  bool cached_ = false;
  std::vector<double> kernel_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  double bias_ = 0.0;
};

}  // namespace detail

/// Solves the soft-margin RBF dual
///   max  sum a_i - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
///   s.t. 0 <= a_i <= C,  sum a_i y_i = 0
/// by two-variable (SMO) updates.
inline SvmModel train_binary(const BinaryView& train, const TrainConfig& cfg) {
  cfg.validate();
  bool has_pos = false;
  bool has_neg = false;
  for (double y : train.labels()) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("train_binary needs samples of both classes");

  detail::SmoSolver solver(train, cfg);
  SvmModel model;
  model.config = cfg;
  model.positive_class = train.positive_class();
  model.negative_class = train.negative_class();
  model.dimension = train.dimension();
  solver.run(model);

  model.alphas = solver.alphas();
  model.bias = solver.bias();
  model.dual_objective = solver.dual_objective();
  if (!std::isfinite(model.bias) || !std::isfinite(model.dual_objective))
    throw SolverError("solver produced a non-finite result");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (model.alphas[i] > 0.0) {
      const auto x = train.features(i);
      model.support.emplace_back(x.begin(), x.end());
      model.support_alphas.push_back(model.alphas[i]);
      model.support_labels.push_back(train.label(i));
    }
  }
  return model;
}

/// One-vs-one ensemble keyed by (smaller class, larger class); the smaller
/// id is the positive side of each machine.
struct MulticlassModel {
  std::vector<Label> classes;
  std::map<std::pair<Label, Label>, SvmModel> pairwise;
  std::size_t dimension = 0;
};

inline MulticlassModel train_multiclass(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const auto& classes = ds.classes();
  if (classes.size() < 2) throw DataError("train_multiclass needs at least two classes");
  MulticlassModel out;
  out.classes = classes;
  out.dimension = ds.dimension();
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      try {
        out.pairwise.emplace(std::pair{classes[a], classes[b]},
                             train_binary(BinaryView(ds, classes[a], classes[b]), cfg));
      } catch (const SolverError& e) {
        throw SolverError("classes (" + std::to_string(classes[a]) + ", " +
                          std::to_string(classes[b]) + "): " + e.what());
      } catch (const DataError& e) {
        throw DataError("classes (" + std::to_string(classes[a]) + ", " +
                        std::to_string(classes[b]) + "): " + e.what());
      }
    }
  }
  return out;
}

/// Majority vote over the pairwise machines; ties go to the smallest id.
inline Label predict(const MulticlassModel& model, std::span<const double> x) {
  if (x.size() != model.dimension)
    throw DataError("predict: expected dimension " + std::to_string(model.dimension) +
                    ", got " + std::to_string(x.size()));
  std::map<Label, int> votes;
  for (const auto& [pair, machine] : model.pairwise) ++votes[predict(machine, x)];
  Label best = model.classes.front();
  int best_votes = -1;
  for (Label c : model.classes) {
    const int v = votes[c];
    if (v > best_votes) {
      best_votes = v;
      best = c;
    }
  }
  return best;
}

}  // namespace acosvm
