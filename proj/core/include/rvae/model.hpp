#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rvae/biomarkers.hpp"
#include "rvae/dense.hpp"
#include "rvae/matrix.hpp"
#include "rvae/rng.hpp"
#include "rvae/standardize.hpp"

namespace rvae {

inline constexpr std::size_t kLatentDim = 2;
inline constexpr std::size_t kEncoderHidden1 = 8;
inline constexpr std::size_t kEncoderHidden2 = 4;

using Latent = std::array<double, kLatentDim>;

enum class Mode { Train, Eval };

/// How the 0/1 group indicator enters the latent regression.
///   Broadcast:     y = w^T (z + d*1) + b
///   SeparateDummy: y = w^T z + w_d * d + b
enum class RegressionForm { Broadcast, SeparateDummy };

enum class RegressionLossKind { MSE, Huber };

struct RegressionLoss {
  RegressionLossKind kind = RegressionLossKind::Huber;
  double delta = 9.0;  // mmHg, Huber only
};

std::string_view to_string(RegressionForm f);
RegressionForm regression_form_from_string(std::string_view s);
std::string_view to_string(RegressionLossKind k);
RegressionLossKind regression_loss_from_string(std::string_view s);

struct DummyEncoding {
  int female = 0;
  int male = 1;
  double value(Gender g) const { return g == Gender::Male ? male : female; }
};

struct RVaeHyperparams {
  double alpha = 0.3;
  double beta = 2.0;
  double dropout = 0.3;
  RegressionLoss regression;
  RegressionForm form = RegressionForm::Broadcast;
  DummyEncoding dummy;
};

struct LatentCode {
  Latent mu{};
  Latent log_var{};
  Latent z{};
  bool suspicious_input = false;  // some |x_i| > 50: input probably not standardized
};

struct LossBreakdown {
  double recon = 0.0;
  double kl = 0.0;
  double regression = 0.0;
  double total = 0.0;
};

inline double weighted_total(double recon, double kl, double regression, double alpha, double beta) {
  return recon + alpha * kl + beta * regression;
}

/// w0, w1, b, w_dummy: the tail of the flat parameter vector.
inline constexpr std::size_t kRegressorParameterCount = 4;

/// Where one dummy group sits in latent space on its training subjects:
/// the mean latent code and the direction the codes move per mmHg of
/// predicted SBP (w . per_mmhg == 1).
struct GroupLatentPath {
  Latent centroid{};
  Latent per_mmhg{};
};

struct Regressor {
  Latent w{};
  double b = 0.0;
  double w_dummy = 0.0;  // SeparateDummy form only
};

/// A mini-batch in model space: standardized biomarkers, SBP labels in
/// mmHg and dummy values.
struct Batch {
  Matrix x;
  std::vector<double> y;
  std::vector<double> dummy;

  std::size_t size() const { return x.rows(); }
};

/// Stochastic inputs of one forward pass, drawn up front so that a loss
/// evaluation is a pure function of the parameters.
struct NoiseFrame {
  Matrix eps;                          // batch x 2, reparameterization noise
  std::array<Matrix, 4> dropout_mask;  // enc h1, enc h2, dec h1, dec h2; empty = no dropout
};

/// z = mu + exp(log_var / 2) * eps, elementwise.
Latent reparameterize(const Latent& mu, const Latent& log_var, const Latent& eps);

// --- loss terms ---------------------------------------------------------------

/// -1/2 sum_j (1 + log_var_j - mu_j^2 - exp(log_var_j)) for one sample.
double kl_loss(std::span<const double> mu, std::span<const double> log_var);
/// Batch mean of the per-sample KL; rows are samples.
double kl_loss(const Matrix& mu, const Matrix& log_var);
/// Mean squared error over all entries.
double recon_loss(std::span<const double> x, std::span<const double> x_hat);
double recon_loss(const Matrix& x, const Matrix& x_hat);
/// MSE: mean r^2. Huber: mean of r^2/2 (|r| <= delta) or delta(|r| - delta/2).
double regression_loss(std::span<const double> y_true, std::span<const double> y_pred,
                       const RegressionLoss& loss);
/// Derivative of the per-sample regression loss with respect to the residual.
double regression_loss_derivative(double residual, const RegressionLoss& loss);

// --- model --------------------------------------------------------------------------

/// Regression-augmented VAE over the 13 standardized biomarkers.
///
/// Encoder 13 -> 8 -> 4 with ReLU, then linear heads 4 -> 2 for the latent
/// mean and log-variance. Decoder 2 -> 4 -> 8 -> 13, ReLU hidden, linear
/// output. Inverted dropout follows each hidden layer in train mode. The
/// regression head maps a latent code and the group dummy to SBP in mmHg.
class RVaeModel {
 public:
  RVaeModel() : RVaeModel(RVaeHyperparams{}) {}
  explicit RVaeModel(RVaeHyperparams hp);

  /// Random weights (He/Glorot); log-variance head scaled down so that the
  /// initial posterior std is near 1; regressor zeroed.
  void initialize(Rng& rng);

  const RVaeHyperparams& hyperparams() const { return hp_; }
  RVaeHyperparams& hyperparams() { return hp_; }

  // Inference. In eval mode z = mu and no randomness is drawn.
  LatentCode encode(std::span<const double> x, Mode mode = Mode::Eval, Rng* rng = nullptr) const;
  std::vector<double> decode(const Latent& z) const;
  double predict_sbp(const Latent& z, double dummy) const;
  /// Contribution of the dummy to the prediction: d * sum(w) or w_d * d.
  double dummy_offset(double dummy) const;

  NoiseFrame sample_noise(std::size_t batch, Mode mode, Rng& rng) const;
  static NoiseFrame frozen_eval_noise(std::size_t batch);

  /// Joint loss for a batch under frozen noise. When `grad` is non-null it
  /// receives dL/dparams in flat_parameters() order.
  LossBreakdown loss(const Batch& batch, const NoiseFrame& noise, double alpha, double beta,
                     std::vector<double>* grad = nullptr);
  LossBreakdown loss(const Batch& batch, const NoiseFrame& noise, double alpha, double beta) const;

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);

  // Layer access, in flat-parameter order.
  static constexpr std::size_t kLayerCount = 7;
  static constexpr std::array<std::string_view, kLayerCount> kLayerNames = {
      "encoder_hidden1", "encoder_hidden2", "encoder_mu", "encoder_log_var",
      "decoder_hidden1", "decoder_hidden2", "decoder_output"};
  DenseLayer& layer(std::size_t i) { return layers_[i]; }
  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }

  Regressor& regressor() { return regressor_; }
  const Regressor& regressor() const { return regressor_; }

  // Training-set context carried with the weights.
  FeatureScaler scaler = FeatureScaler::identity();
  std::uint64_t training_seed = 0;
  /// Training-set latent paths, [dummy == 0, dummy != 0]. Traversal and
  /// misprediction analysis anchor on these when present.
  std::optional<std::array<GroupLatentPath, 2>> latent_paths;

 private:
  RVaeHyperparams hp_;
  std::array<DenseLayer, kLayerCount> layers_;
  Regressor regressor_;
};

/// Draws noise from `rng` in the given mode and evaluates the joint loss.
LossBreakdown joint_loss(RVaeModel& model, const Batch& batch, double alpha, double beta, Rng& rng,
                         Mode mode = Mode::Train);

}  // namespace rvae
