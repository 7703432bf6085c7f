#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "acosvm/data.hpp"
#include "acosvm/error.hpp"
#include "acosvm/parallel.hpp"
#include "acosvm/rng.hpp"
#include "acosvm/svm.hpp"

namespace acosvm {

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;  // fold index per sample
  bool stratified = false;

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

namespace detail {

inline void check_fold_count(std::size_t n, std::size_t k) {
  if (k < 2 || k > n)
    throw ConfigError("k must be in [2, " + std::to_string(n) + "], got " + std::to_string(k));
}

// Deals `order` round-robin into k folds: sizes differ by at most one.
inline FoldPlan deal(const std::vector<std::size_t>& order, std::size_t k) {
  FoldPlan plan{k, std::vector<std::size_t>(order.size()), false};
  for (std::size_t pos = 0; pos < order.size(); ++pos) plan.assignments[order[pos]] = pos % k;
  return plan;
}

constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;  // "folds"

}  // namespace detail

/// Plain seeded k-fold assignment for n samples.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  detail::check_fold_count(n, k);
  CounterRng rng{seed, detail::kFoldStream};
  return detail::deal(seeded_permutation(n, rng), k);
}

/// Class-stratified when every class has at least k members, otherwise the
/// plain assignment (with `stratified` left false).
inline FoldPlan make_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  detail::check_fold_count(ds.size(), k);
  for (Label c : ds.classes())
    if (ds.count(c) < k) return make_folds(ds.size(), k, seed);

  CounterRng rng{seed, detail::kFoldStream};
  std::vector<std::size_t> order;
  order.reserve(ds.size());
  for (Label c : ds.classes()) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds[i].label == c) members.push_back(i);
    shuffle(std::span<std::size_t>(members), rng);
    order.insert(order.end(), members.begin(), members.end());
  }
  FoldPlan plan = detail::deal(order, k);
  plan.stratified = true;
  return plan;
}

struct FoldOutcome {
  std::size_t right = 0;
  std::size_t error = 0;
  // Training part held a single class; the fold scores 0.
  bool degenerate = false;

  double accuracy() const {
    const std::size_t total = right + error;
    return total == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(total);
  }
};

/// Trains on every fold but `held_out` and counts exact-label matches on it.
inline FoldOutcome fold_accuracy(const Dataset& ds, const FoldPlan& plan, std::size_t held_out,
                                 const TrainConfig& cfg) {
  if (held_out >= plan.k) throw ConfigError("held-out fold index out of range");
  if (plan.assignments.size() != ds.size())
    throw ConfigError("fold plan does not match the dataset size");
  const auto test_idx = plan.members(held_out);
  const auto train_idx = plan.complement(held_out);

  FoldOutcome out;
  const Dataset train = ds.subset(train_idx);
  if (train.classes().size() < 2) {
    out.error = test_idx.size();
    out.degenerate = true;
    return out;
  }
  const MulticlassModel model = train_multiclass(train, cfg);
  for (std::size_t i : test_idx) {
    if (predict(model, ds[i].features) == ds[i].label)
      ++out.right;
    else
      ++out.error;
  }
  return out;
}

struct CvResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::size_t right = 0;
  std::size_t error = 0;
  std::vector<std::size_t> degenerate_folds;
  bool stratified = false;
};

/// Mean held-out accuracy over the folds of `plan`. Folds run on up to
/// `workers` threads; results are combined by fold index.
inline CvResult cross_validate(const Dataset& ds, const FoldPlan& plan, const TrainConfig& cfg,
                               std::size_t workers = 1) {
  std::vector<FoldOutcome> folds(plan.k);
  parallel_for(plan.k, workers, [&](std::size_t f) {
    try {
      folds[f] = fold_accuracy(ds, plan, f, cfg);
    } catch (const SolverError& e) {
      throw SolverError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("fold " + std::to_string(f) + ": " + e.what());
    }
  });

  CvResult out;
  out.stratified = plan.stratified;
  double sum = 0.0;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const double acc = folds[f].accuracy();
    out.fold_accuracies.push_back(acc);
    sum += acc;
    out.right += folds[f].right;
    out.error += folds[f].error;
    if (folds[f].degenerate) out.degenerate_folds.push_back(f);
  }
  out.mean_accuracy = sum / static_cast<double>(plan.k);
  return out;
}

inline CvResult cross_validate(const Dataset& ds, std::size_t k, const TrainConfig& cfg,
                               std::uint64_t seed, std::size_t workers = 1) {
  return cross_validate(ds, make_folds(ds, k, seed), cfg, workers);
}

}  // namespace acosvm
