#include "rvae/dense.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "rvae/error.hpp"

namespace rvae {

std::string_view to_string(Activation a) {
  return a == Activation::ReLU ? "relu" : "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : weights_(out, in), bias_(out, 0.0), activation_(act) {
  if (in == 0 || out == 0) throw ConfigError("DenseLayer: dimensions must be positive");
}

DenseLayer::DenseLayer(Matrix weights, std::vector<double> bias, Activation act)
    : weights_(std::move(weights)), bias_(std::move(bias)), activation_(act) {
  if (bias_.size() != weights_.rows()) {
    throw ConfigError("DenseLayer: bias length must equal weight rows");
  }
}

void DenseLayer::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(in_dim());
  const double fan_out = static_cast<double>(out_dim());
  const double limit = activation_ == Activation::ReLU ? std::sqrt(6.0 / fan_in)
                                                       : std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : weights_.data()) w = rng.uniform(-limit, limit);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

void DenseLayer::check_input(std::size_t cols) const {
  if (cols != in_dim()) {
    throw ConfigError("DenseLayer: input has " + std::to_string(cols) + " features, expected " +
                      std::to_string(in_dim()));
  }
}

Matrix DenseLayer::preactivate(const Matrix& input) const {
  check_input(input.cols());
  Matrix pre = matmul_transposed(input, weights_);
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += bias_[c];
  }
  return pre;
}

Matrix DenseLayer::apply(const Matrix& input) const {
  Matrix out = preactivate(input);
  if (activation_ == Activation::ReLU) {
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  }
  return out;
}

Matrix DenseLayer::forward(const Matrix& input) {
  cached_pre_ = preactivate(input);
  cached_input_ = input;
  Matrix out = cached_pre_;
  if (activation_ == Activation::ReLU) {
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  }
  return out;
}

std::vector<double> DenseLayer::forward(std::span<const double> input) {
  return forward(Matrix::row(input)).data();
}

DenseGradients DenseLayer::backward(const Matrix& upstream) {
  if (!cached_input_) throw UsageError("DenseLayer::backward called without a prior forward");
  const Matrix& input = *cached_input_;
  if (upstream.rows() != input.rows() || upstream.cols() != out_dim()) {
    throw ConfigError("DenseLayer::backward: upstream gradient has wrong shape");
  }
  Matrix delta = upstream;
  if (activation_ == Activation::ReLU) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      if (!(cached_pre_.data()[i] > 0.0)) delta.data()[i] = 0.0;
    }
  }
  DenseGradients g;
  g.weights = transposed_matmul(delta, input);
  g.bias.assign(out_dim(), 0.0);
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    for (std::size_t c = 0; c < delta.cols(); ++c) g.bias[c] += delta(r, c);
  }
  g.input = matmul(delta, weights_);
  cached_input_.reset();
  return g;
}

}  // namespace rvae
