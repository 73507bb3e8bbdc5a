#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rvae/cohort.hpp"

namespace rvae {

/// Stratified k-fold partition of a cohort plus the train/validation/test
/// split derived from it: the last fold is the test set, the one before it
/// the validation set, the rest training. For k = 5 that is 60/20/20.
struct SplitPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  /// train + validation, the pool used for cross-validated model selection.
  std::vector<std::size_t> development() const;
};

/// Throws ValidationError when the cohort has fewer than 10*k subjects or
/// k < 3.
SplitPlan make_splits(const Cohort& cohort, std::uint64_t seed, std::size_t k = 5);

/// Stratified (by gender) k-fold partition of `indices` into cohort subjects.
/// Fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> assign_folds(const Cohort& cohort, std::span<const std::size_t> indices,
                                                   std::size_t k, std::uint64_t seed);

/// Complement of fold `held_out` within `folds`, in ascending index order.
std::vector<std::size_t> merge_except(const std::vector<std::vector<std::size_t>>& folds, std::size_t held_out);

}  // namespace rvae
