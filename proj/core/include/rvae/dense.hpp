#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rvae/matrix.hpp"
#include "rvae/rng.hpp"

namespace rvae {

enum class Activation { ReLU, Identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct DenseGradients {
  Matrix input;    // dL/d(input), batch x in
  Matrix weights;  // dL/dW, out x in
  std::vector<double> bias;
};

/// Fully connected layer y = act(W x + b) over a batch of row vectors.
///
/// forward() caches the input and pre-activation for the next backward();
/// apply() is the const, cache-free path used for inference.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act);
  DenseLayer(Matrix weights, std::vector<double> bias, Activation act);

  std::size_t in_dim() const { return weights_.cols(); }
  std::size_t out_dim() const { return weights_.rows(); }
  Activation activation() const { return activation_; }

  Matrix& weights() { return weights_; }
  const Matrix& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  /// He-uniform for ReLU layers, Glorot-uniform otherwise; bias zero.
  void initialize(Rng& rng);

  Matrix forward(const Matrix& input);
  std::vector<double> forward(std::span<const double> input);
  Matrix apply(const Matrix& input) const;

  /// Gradients for the input cached by the last forward(). Consumes the
  /// cache, so a second backward() without a fresh forward() is an error.
  DenseGradients backward(const Matrix& upstream);

  std::size_t parameter_count() const { return weights_.size() + bias_.size(); }

 private:
  Matrix preactivate(const Matrix& input) const;
  void check_input(std::size_t cols) const;

  Matrix weights_;
  std::vector<double> bias_;
  Activation activation_ = Activation::Identity;
  std::optional<Matrix> cached_input_;
  Matrix cached_pre_;
};

}  // namespace rvae
