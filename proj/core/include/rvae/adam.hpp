#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rvae {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments, one slot per flattened parameter.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  /// In-place update of `params`. A non-finite gradient throws NumericError
  /// naming the offending slot; params and moments are left untouched.
  void update(std::span<double> params, std::span<const double> grads);

  /// Per-slot learning-rate multipliers (default 1). Adam's step is roughly
  /// lr in parameter units, so slots living on a larger scale than the
  /// rest need a proportionally larger rate.
  void set_lr_scale(std::vector<double> scale);
  std::span<const double> lr_scale() const { return lr_scale_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<double> lr_scale_;
  std::uint64_t step_ = 0;
};

inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  state.update(params, grads);
}

}  // namespace rvae
