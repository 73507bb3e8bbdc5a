#include "rvae/splits.hpp"

#include <algorithm>

#include "rvae/error.hpp"
#include "rvae/rng.hpp"

namespace rvae {

std::vector<std::size_t> SplitPlan::development() const {
  std::vector<std::size_t> d = train;
  d.insert(d.end(), validation.begin(), validation.end());
  std::sort(d.begin(), d.end());
  return d;
}

std::vector<std::vector<std::size_t>> assign_folds(const Cohort& cohort, std::span<const std::size_t> indices,
                                                   std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("assign_folds: k must be at least 2");
  if (indices.size() < k) throw ValidationError("assign_folds: fewer subjects than folds");
  Rng rng(seed);
  std::vector<std::size_t> female, male;
  for (std::size_t i : indices) {
    if (i >= cohort.size()) throw ValidationError("assign_folds: index out of range");
    (cohort[i].gender == Gender::Male ? male : female).push_back(i);
  }
  rng.shuffle(female);
  rng.shuffle(male);
  std::vector<std::size_t> order = female;
  order.insert(order.end(), male.begin(), male.end());

  // Dealing order puts the first leftover subjects into the first fold,
  // then the last, then the second to last, which keeps a 3/1/1 grouping of
  // five folds within one subject of 60/20/20.
  std::vector<std::size_t> deal;
  deal.push_back(0);
  for (std::size_t f = k - 1; f >= 1; --f) {
    if (deal.size() < 3) deal.push_back(f);
    else break;
  }
  for (std::size_t f = 1; f < k; ++f) {
    if (std::find(deal.begin(), deal.end(), f) == deal.end()) deal.push_back(f);
  }

  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < order.size(); ++p) folds[deal[p % k]].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> merge_except(const std::vector<std::vector<std::size_t>>& folds, std::size_t held_out) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != held_out) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitPlan make_splits(const Cohort& cohort, std::uint64_t seed, std::size_t k) {
  if (k < 3) throw ValidationError("make_splits: k must be at least 3");
  if (cohort.size() < 10 * k) {
    throw ValidationError("make_splits: cohort of " + std::to_string(cohort.size()) +
                          " subjects is too small for " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> all(cohort.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  SplitPlan plan;
  plan.seed = seed;
  plan.folds = assign_folds(cohort, all, k, seed);
  plan.test = plan.folds[k - 1];
  plan.validation = plan.folds[k - 2];
  for (std::size_t f = 0; f + 2 < k; ++f) {
    plan.train.insert(plan.train.end(), plan.folds[f].begin(), plan.folds[f].end());
  }
  std::sort(plan.train.begin(), plan.train.end());
  return plan;
}

}  // namespace rvae
