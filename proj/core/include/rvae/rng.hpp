#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace rvae {

/// Counter-based SplitMix64 stream.
///
/// The n-th output is mix64(seed + n * golden_gamma), so a stream is fully
/// described by (seed, counter) and reproduces bit-for-bit on any platform.
/// Gaussian draws use Box-Muller on our own uniforms rather than
/// std::normal_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  /// Independent stream keyed by a parent seed and a list of tags
  /// (cell index, fold index, tree index, ...).
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);
  static std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

/// n draws from N(mean, std^2). Throws std::invalid_argument for std < 0.
std::vector<double> gaussian_sample(Rng& rng, double mean, double std, std::size_t n);

}  // namespace rvae
