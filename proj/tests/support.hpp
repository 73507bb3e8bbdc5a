#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rvae/cohort.hpp"
#include "rvae/matrix.hpp"
#include "rvae/rng.hpp"

namespace rvae::test {

// Hand-rolled generators for property tests. Each draws from an Rng so a
// failing case is reproducible from its seed.

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal(0.0, scale);
  return m;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, scale);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Small cohort with a single clean linear signal, for fast training tests.
inline Cohort small_cohort(std::uint64_t seed, std::size_t n = 300) {
  CohortSpec spec;
  spec.n_subjects = n;
  spec.seed = seed;
  return generate_synthetic(spec).subjects;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rvae_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace rvae::test
