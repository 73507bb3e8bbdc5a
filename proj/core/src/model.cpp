#include "rvae/model.hpp"

#include <cmath>
#include <string>

#include "rvae/error.hpp"

namespace rvae {

std::string_view to_string(RegressionForm f) {
  return f == RegressionForm::Broadcast ? "broadcast" : "separate_dummy";
}

RegressionForm regression_form_from_string(std::string_view s) {
  if (s == "broadcast") return RegressionForm::Broadcast;
  if (s == "separate_dummy") return RegressionForm::SeparateDummy;
  throw ConfigError("unknown regression form '" + std::string(s) + "'");
}

std::string_view to_string(RegressionLossKind k) { return k == RegressionLossKind::MSE ? "mse" : "huber"; }

RegressionLossKind regression_loss_from_string(std::string_view s) {
  if (s == "mse") return RegressionLossKind::MSE;
  if (s == "huber") return RegressionLossKind::Huber;
  throw ConfigError("unknown regression loss '" + std::string(s) + "'");
}

// --- loss terms ---------------------------------------------------------------

double kl_loss(std::span<const double> mu, std::span<const double> log_var) {
  if (mu.size() != log_var.size()) throw ConfigError("kl_loss: mu and log_var lengths differ");
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    s += 1.0 + log_var[j] - mu[j] * mu[j] - std::exp(log_var[j]);
  }
  return -0.5 * s;
}

double kl_loss(const Matrix& mu, const Matrix& log_var) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) {
    throw ConfigError("kl_loss: mu and log_var shapes differ");
  }
  if (mu.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu.rows(); ++i) s += kl_loss(mu.row_span(i), log_var.row_span(i));
  return s / static_cast<double>(mu.rows());
}

double recon_loss(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw ConfigError("recon_loss: length mismatch");
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  return s / static_cast<double>(x.size());
}

double recon_loss(const Matrix& x, const Matrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw ConfigError("recon_loss: shape mismatch");
  return recon_loss(x.data(), x_hat.data());
}

namespace {

void check_loss(const RegressionLoss& loss) {
  if (loss.kind == RegressionLossKind::Huber && !(loss.delta > 0.0)) {
    throw ConfigError("Huber delta must be positive");
  }
}

double pointwise_loss(double r, const RegressionLoss& loss) {
  if (loss.kind == RegressionLossKind::MSE) return r * r;
  const double a = std::abs(r);
  return a <= loss.delta ? 0.5 * r * r : loss.delta * (a - 0.5 * loss.delta);
}

}  // namespace

double regression_loss(std::span<const double> y_true, std::span<const double> y_pred,
                       const RegressionLoss& loss) {
  check_loss(loss);
  if (y_true.size() != y_pred.size()) throw ConfigError("regression_loss: length mismatch");
  if (y_true.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) s += pointwise_loss(y_true[i] - y_pred[i], loss);
  return s / static_cast<double>(y_true.size());
}

double regression_loss_derivative(double r, const RegressionLoss& loss) {
  if (loss.kind == RegressionLossKind::MSE) return 2.0 * r;
  if (std::abs(r) <= loss.delta) return r;
  return r > 0.0 ? loss.delta : -loss.delta;
}

// --- model --------------------------------------------------------------------------

RVaeModel::RVaeModel(RVaeHyperparams hp) : hp_(hp) {
  if (!(hp_.dropout >= 0.0 && hp_.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (hp_.alpha < 0.0 || hp_.beta < 0.0) throw ConfigError("alpha and beta must be non-negative");
  check_loss(hp_.regression);
  layers_ = {DenseLayer(kBiomarkerCount, kEncoderHidden1, Activation::ReLU),
             DenseLayer(kEncoderHidden1, kEncoderHidden2, Activation::ReLU),
             DenseLayer(kEncoderHidden2, kLatentDim, Activation::Identity),
             DenseLayer(kEncoderHidden2, kLatentDim, Activation::Identity),
             DenseLayer(kLatentDim, kEncoderHidden2, Activation::ReLU),
             DenseLayer(kEncoderHidden2, kEncoderHidden1, Activation::ReLU),
             DenseLayer(kEncoderHidden1, kBiomarkerCount, Activation::Identity)};
}

void RVaeModel::initialize(Rng& rng) {
  for (auto& l : layers_) l.initialize(rng);
  for (double& w : layers_[3].weights().data()) w *= 0.1;
  regressor_ = Regressor{};
}

namespace {

void apply_mask(Matrix& h, const Matrix& mask) {
  if (mask.size() == 0) return;
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] *= mask.data()[i];
}

}  // namespace

Latent reparameterize(const Latent& mu, const Latent& log_var, const Latent& eps) {
  Latent z{};
  for (std::size_t j = 0; j < kLatentDim; ++j) z[j] = mu[j] + std::exp(0.5 * log_var[j]) * eps[j];
  return z;
}

LatentCode RVaeModel::encode(std::span<const double> x, Mode mode, Rng* rng) const {
  if (x.size() != kBiomarkerCount) throw ConfigError("encode: expected 13 standardized features");
  LatentCode code;
  for (double v : x) {
    if (std::abs(v) > 50.0) code.suspicious_input = true;
  }
  NoiseFrame noise = frozen_eval_noise(1);
  if (mode == Mode::Train) {
    if (rng == nullptr) throw UsageError("encode: train mode needs an Rng");
    noise = sample_noise(1, mode, *rng);
  }
  Matrix h = layers_[0].apply(Matrix::row(x));
  apply_mask(h, noise.dropout_mask[0]);
  h = layers_[1].apply(h);
  apply_mask(h, noise.dropout_mask[1]);
  const Matrix mu = layers_[2].apply(h);
  const Matrix lv = layers_[3].apply(h);
  Latent eps{};
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    code.mu[j] = mu(0, j);
    code.log_var[j] = lv(0, j);
    eps[j] = noise.eps(0, j);
  }
  code.z = mode == Mode::Eval ? code.mu : reparameterize(code.mu, code.log_var, eps);
  return code;
}

std::vector<double> RVaeModel::decode(const Latent& z) const {
  Matrix h = layers_[4].apply(Matrix::row(z));
  h = layers_[5].apply(h);
  return layers_[6].apply(h).data();
}

double RVaeModel::dummy_offset(double dummy) const {
  if (hp_.form == RegressionForm::Broadcast) {
    double sum_w = 0.0;
    for (double w : regressor_.w) sum_w += w;
    return dummy * sum_w;
  }
  return regressor_.w_dummy * dummy;
}

double RVaeModel::predict_sbp(const Latent& z, double dummy) const {
  double y = regressor_.b + dummy_offset(dummy);
  for (std::size_t j = 0; j < kLatentDim; ++j) y += regressor_.w[j] * z[j];
  return y;
}

NoiseFrame RVaeModel::frozen_eval_noise(std::size_t batch) {
  NoiseFrame n;
  n.eps = Matrix(batch, kLatentDim, 0.0);
  return n;
}

NoiseFrame RVaeModel::sample_noise(std::size_t batch, Mode mode, Rng& rng) const {
  if (mode == Mode::Eval) return frozen_eval_noise(batch);
  NoiseFrame n;
  n.eps = Matrix(batch, kLatentDim);
  for (double& e : n.eps.data()) e = rng.normal();
  if (hp_.dropout > 0.0) {
    const std::array<std::size_t, 4> widths = {kEncoderHidden1, kEncoderHidden2, kEncoderHidden2,
                                               kEncoderHidden1};
    const double keep_scale = 1.0 / (1.0 - hp_.dropout);
    for (std::size_t m = 0; m < 4; ++m) {
      n.dropout_mask[m] = Matrix(batch, widths[m]);
      for (double& v : n.dropout_mask[m].data()) v = rng.uniform() < hp_.dropout ? 0.0 : keep_scale;
    }
  }
  return n;
}

LossBreakdown RVaeModel::loss(const Batch& batch, const NoiseFrame& noise, double alpha, double beta) const {
  RVaeModel scratch = *this;
  return scratch.loss(batch, noise, alpha, beta, nullptr);
}

LossBreakdown RVaeModel::loss(const Batch& batch, const NoiseFrame& noise, double alpha, double beta,
                              std::vector<double>* grad) {
  const std::size_t n = batch.size();
  if (n == 0) throw ConfigError("loss: empty batch");
  if (batch.x.cols() != kBiomarkerCount) throw ConfigError("loss: batch must have 13 feature columns");
  if (batch.y.size() != n || batch.dummy.size() != n) throw ConfigError("loss: label/dummy length mismatch");
  if (noise.eps.rows() != n || noise.eps.cols() != kLatentDim) throw ConfigError("loss: noise shape mismatch");
  const auto nb = static_cast<double>(n);

  // Forward.
  Matrix h1 = layers_[0].forward(batch.x);
  apply_mask(h1, noise.dropout_mask[0]);
  Matrix h2 = layers_[1].forward(h1);
  apply_mask(h2, noise.dropout_mask[1]);
  const Matrix mu = layers_[2].forward(h2);
  const Matrix lv = layers_[3].forward(h2);
  Matrix z(n, kLatentDim);
  Matrix sigma(n, kLatentDim);
  for (std::size_t i = 0; i < z.size(); ++i) {
    sigma.data()[i] = std::exp(0.5 * lv.data()[i]);
    z.data()[i] = mu.data()[i] + sigma.data()[i] * noise.eps.data()[i];
  }
  Matrix g1 = layers_[4].forward(z);
  apply_mask(g1, noise.dropout_mask[2]);
  Matrix g2 = layers_[5].forward(g1);
  apply_mask(g2, noise.dropout_mask[3]);
  const Matrix x_hat = layers_[6].forward(g2);

  std::vector<double> y_hat(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_hat[i] = predict_sbp({z(i, 0), z(i, 1)}, batch.dummy[i]);
  }

  LossBreakdown out;
  out.recon = recon_loss(batch.x, x_hat);
  out.kl = kl_loss(mu, lv);
  out.regression = regression_loss(batch.y, y_hat, hp_.regression);
  out.total = weighted_total(out.recon, out.kl, out.regression, alpha, beta);
  if (grad == nullptr) return out;

  // Backward.
  grad->assign(parameter_count(), 0.0);
  std::array<DenseGradients, kLayerCount> lg;

  Matrix d_xhat(n, kBiomarkerCount);
  const double recon_scale = 2.0 / (nb * static_cast<double>(kBiomarkerCount));
  for (std::size_t i = 0; i < d_xhat.size(); ++i) {
    d_xhat.data()[i] = recon_scale * (x_hat.data()[i] - batch.x.data()[i]);
  }
  lg[6] = layers_[6].backward(d_xhat);
  apply_mask(lg[6].input, noise.dropout_mask[3]);
  lg[5] = layers_[5].backward(lg[6].input);
  apply_mask(lg[5].input, noise.dropout_mask[2]);
  lg[4] = layers_[4].backward(lg[5].input);
  Matrix dz = lg[4].input;

  Regressor reg_grad;
  if (beta != 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = batch.y[i] - y_hat[i];
      const double dy = -beta * regression_loss_derivative(r, hp_.regression) / nb;
      const double d = batch.dummy[i];
      for (std::size_t j = 0; j < kLatentDim; ++j) {
        const double input = hp_.form == RegressionForm::Broadcast ? z(i, j) + d : z(i, j);
        reg_grad.w[j] += dy * input;
        dz(i, j) += dy * regressor_.w[j];
      }
      reg_grad.b += dy;
      if (hp_.form == RegressionForm::SeparateDummy) reg_grad.w_dummy += dy * d;
    }
  }

  Matrix d_mu(n, kLatentDim);
  Matrix d_lv(n, kLatentDim);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    const double m = mu.data()[i];
    const double s = sigma.data()[i];
    d_mu.data()[i] = dz.data()[i] + alpha * m / nb;
    d_lv.data()[i] = dz.data()[i] * noise.eps.data()[i] * 0.5 * s + alpha * 0.5 * (s * s - 1.0) / nb;
  }
  lg[2] = layers_[2].backward(d_mu);
  lg[3] = layers_[3].backward(d_lv);
  Matrix d_h2 = lg[2].input;
  for (std::size_t i = 0; i < d_h2.size(); ++i) d_h2.data()[i] += lg[3].input.data()[i];
  apply_mask(d_h2, noise.dropout_mask[1]);
  lg[1] = layers_[1].backward(d_h2);
  apply_mask(lg[1].input, noise.dropout_mask[0]);
  lg[0] = layers_[0].backward(lg[1].input);

  std::size_t k = 0;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    for (double v : lg[l].weights.data()) (*grad)[k++] = v;
    for (double v : lg[l].bias) (*grad)[k++] = v;
  }
  (*grad)[k++] = reg_grad.w[0];
  (*grad)[k++] = reg_grad.w[1];
  (*grad)[k++] = reg_grad.b;
  (*grad)[k++] = reg_grad.w_dummy;
  return out;
}

std::size_t RVaeModel::parameter_count() const {
  std::size_t n = 4;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

std::vector<double> RVaeModel::flat_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights().data().begin(), l.weights().data().end());
    p.insert(p.end(), l.bias().begin(), l.bias().end());
  }
  p.push_back(regressor_.w[0]);
  p.push_back(regressor_.w[1]);
  p.push_back(regressor_.b);
  p.push_back(regressor_.w_dummy);
  return p;
}

void RVaeModel::set_flat_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw ConfigError("set_flat_parameters: wrong parameter count");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& v : l.weights().data()) v = p[k++];
    for (double& v : l.bias()) v = p[k++];
  }
  regressor_.w[0] = p[k++];
  regressor_.w[1] = p[k++];
  regressor_.b = p[k++];
  regressor_.w_dummy = p[k++];
}

LossBreakdown joint_loss(RVaeModel& model, const Batch& batch, double alpha, double beta, Rng& rng,
                         Mode mode) {
  const NoiseFrame noise = model.sample_noise(batch.size(), mode, rng);
  return model.loss(batch, noise, alpha, beta, nullptr);
}

}  // namespace rvae
