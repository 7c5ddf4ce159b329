// Copyright 2026 The memaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "memaudit/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "memaudit/error.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/transforms.hpp"

namespace memaudit {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;

std::vector<DenseLayer> stack_layers(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out, std::size_t& offset) {
  std::vector<DenseLayer> layers;
  std::size_t width = in;
  auto add = [&](std::size_t next) {
    layers.push_back({width, next, offset});
    offset += layers.back().size();
    width = next;
  };
  for (std::size_t h : hidden) add(h);
  add(out);
  return layers;
}

// Activations kept by the forward pass for backpropagation.
struct MlpTrace {
  std::vector<Matrix> inputs;
  std::vector<Matrix> preactivations;  // hidden layers only
};

Matrix mlp_forward(std::span<const double> params, const std::vector<DenseLayer>& layers,
                   const Matrix& x, MlpTrace* trace) {
  Matrix a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    ConstMatrixMap w(params.data() + layer.offset, static_cast<Eigen::Index>(layer.out),
                     static_cast<Eigen::Index>(layer.in));
    ConstRowMap b(params.data() + layer.offset + layer.weight_count(),
                  static_cast<Eigen::Index>(layer.out));
    Matrix z = a * w.transpose();
    z.rowwise() += b;
    if (trace) trace->inputs.push_back(std::move(a));
    if (l + 1 < layers.size()) {
      a = z.cwiseMax(0.0);
      if (trace) trace->preactivations.push_back(std::move(z));
    } else {
      a = std::move(z);
    }
  }
  return a;
}

// Accumulates parameter gradients into `grad` and returns d(objective)/d(x).
Matrix mlp_backward(std::span<const double> params, const std::vector<DenseLayer>& layers,
                    const MlpTrace& trace, Matrix d_out, std::span<double> grad) {
  Matrix d = std::move(d_out);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const auto out = static_cast<Eigen::Index>(layer.out);
    const auto in = static_cast<Eigen::Index>(layer.in);
    if (l + 1 < layers.size())
      d = (d.array() * (trace.preactivations[l].array() > 0.0).cast<double>()).matrix();
    Eigen::Map<Matrix> gw(grad.data() + layer.offset, out, in);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + layer.offset + layer.weight_count(), out);
    gw.noalias() += d.transpose() * trace.inputs[l];
    gb += d.colwise().sum();
    ConstMatrixMap w(params.data() + layer.offset, out, in);
    d = d * w;
  }
  return d;
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

Matrix standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

}  // namespace

// --- model -------------------------------------------------------------------

VaeModel::VaeModel(std::size_t input_dim, VaeSettings settings)
    : input_dim_(input_dim), settings_(std::move(settings)) {
  require(input_dim_ >= 1, ErrorCode::invalid_argument, "VAE input dimension must be >= 1");
  require(settings_.latent_dim >= 1, ErrorCode::invalid_argument, "latent_dim must be >= 1");
  std::size_t offset = 0;
  encoder_ = stack_layers(input_dim_, settings_.encoder_hidden, 2 * settings_.latent_dim, offset);
  decoder_ = stack_layers(settings_.latent_dim, settings_.decoder_hidden, decoder_output_dim(),
                          offset);
  log_gamma_offset_ = offset;
  if (settings_.likelihood == Likelihood::isotropic_gaussian) ++offset;
  params_.assign(offset, 0.0);
}

std::size_t VaeModel::decoder_output_dim() const {
  return settings_.likelihood == Likelihood::diagonal_gaussian ? 2 * input_dim_ : input_dim_;
}

VaeModel VaeModel::initialize(std::size_t input_dim, const VaeSettings& settings,
                              std::uint64_t seed) {
  VaeModel model(input_dim, settings);
  Rng rng(seed);
  auto fill = [&](const std::vector<DenseLayer>& layers) {
    for (const DenseLayer& layer : layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      for (std::size_t j = 0; j < layer.size(); ++j)
        model.params_[layer.offset + j] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  };
  fill(model.encoder_);
  fill(model.decoder_);
  return model;
}

void VaeModel::set_parameters(std::span<const double> values) {
  require(values.size() == params_.size(), ErrorCode::invalid_argument,
          "parameter vector has the wrong length");
  std::copy(values.begin(), values.end(), params_.begin());
}

Eigen::Map<Matrix> VaeModel::weights(const DenseLayer& layer) {
  return {params_.data() + layer.offset, static_cast<Eigen::Index>(layer.out),
          static_cast<Eigen::Index>(layer.in)};
}

Eigen::Map<Vector> VaeModel::bias(const DenseLayer& layer) {
  return {params_.data() + layer.offset + layer.weight_count(),
          static_cast<Eigen::Index>(layer.out)};
}

double VaeModel::log_gamma() const {
  require(settings_.likelihood == Likelihood::isotropic_gaussian, ErrorCode::unsupported,
          "log_gamma exists only for the isotropic Gaussian decoder");
  return params_[log_gamma_offset_];
}

void VaeModel::set_log_gamma(double value) {
  require(settings_.likelihood == Likelihood::isotropic_gaussian, ErrorCode::unsupported,
          "log_gamma exists only for the isotropic Gaussian decoder");
  params_[log_gamma_offset_] = value;
}

VaeModel::Encoding VaeModel::encode(const Matrix& x) const {
  require(static_cast<std::size_t>(x.cols()) == input_dim_, ErrorCode::invalid_argument,
          "encoder input dimension mismatch");
  Matrix out = mlp_forward(params_, encoder_, x, nullptr);
  const auto d = static_cast<Eigen::Index>(settings_.latent_dim);
  return {out.leftCols(d), out.rightCols(d)};
}

Matrix VaeModel::decode(const Matrix& z) const {
  require(static_cast<std::size_t>(z.cols()) == settings_.latent_dim,
          ErrorCode::invalid_argument, "decoder input dimension mismatch");
  return mlp_forward(params_, decoder_, z, nullptr);
}

Vector VaeModel::log_likelihood(const Matrix& x, const Matrix& decoded) const {
  const auto dim = static_cast<Eigen::Index>(input_dim_);
  require(x.cols() == dim && decoded.rows() == x.rows(), ErrorCode::invalid_argument,
          "likelihood input shape mismatch");
  Vector out(x.rows());
  switch (settings_.likelihood) {
    case Likelihood::bernoulli:
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < dim; ++j)
          s += x(r, j) * decoded(r, j) - softplus(decoded(r, j));
        out[r] = s;
      }
      break;
    case Likelihood::diagonal_gaussian:
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
          const double lv = decoded(r, dim + j);
          const double diff = x(r, j) - decoded(r, j);
          s += kLog2Pi + lv + diff * diff * std::exp(-lv);
        }
        out[r] = -0.5 * s;
      }
      break;
    case Likelihood::isotropic_gaussian: {
      const double lg = params_[log_gamma_offset_];
      const double inv_gamma = std::exp(-lg);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double sq = (x.row(r) - decoded.row(r)).squaredNorm();
        out[r] = -0.5 * (static_cast<double>(dim) * (kLog2Pi + lg) + sq * inv_gamma);
      }
      break;
    }
  }
  return out;
}

Matrix VaeModel::sample_likelihood(const Matrix& decoded, Rng& rng) const {
  const auto dim = static_cast<Eigen::Index>(input_dim_);
  Matrix x(decoded.rows(), dim);
  for (Eigen::Index r = 0; r < decoded.rows(); ++r) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      switch (settings_.likelihood) {
        case Likelihood::bernoulli:
          x(r, j) = rng.uniform() < sigmoid(decoded(r, j)) ? 1.0 : 0.0;
          break;
        case Likelihood::diagonal_gaussian:
          x(r, j) = decoded(r, j) + std::exp(0.5 * decoded(r, dim + j)) * rng.normal();
          break;
        case Likelihood::isotropic_gaussian:
          x(r, j) = decoded(r, j) + std::exp(0.5 * params_[log_gamma_offset_]) * rng.normal();
          break;
      }
    }
  }
  return x;
}

// --- objectives --------------------------------------------------------------

double kl_to_standard_normal(std::span<const double> mean, std::span<const double> log_sd) {
  require(mean.size() == log_sd.size(), ErrorCode::invalid_argument,
          "KL input length mismatch");
  double kl = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double var = std::exp(2.0 * log_sd[j]);
    kl += mean[j] * mean[j] + var - 1.0 - 2.0 * log_sd[j];
  }
  return 0.5 * kl;
}

double elbo_estimate(const VaeModel& model, std::span<const double> x, std::size_t mc_samples,
                     Rng& rng) {
  require(mc_samples >= 1, ErrorCode::invalid_argument, "ELBO needs at least one sample");
  const Matrix row = ConstRowMap(x.data(), static_cast<Eigen::Index>(x.size()));
  const auto enc = model.encode(row);
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const double kl = kl_to_standard_normal({enc.mean.data(), static_cast<std::size_t>(d)},
                                          {enc.log_sd.data(), static_cast<std::size_t>(d)});
  const auto samples = static_cast<Eigen::Index>(mc_samples);
  Matrix eps = standard_normal(rng, samples, d);
  Matrix z = (eps.array().rowwise() * enc.log_sd.row(0).array().exp()).matrix();
  z.rowwise() += enc.mean.row(0);
  const Vector ll = model.log_likelihood(row.replicate(samples, 1), model.decode(z));
  return ll.mean() - kl;
}

ElboGradient elbo_gradient(const VaeModel& model, const Matrix& x, const Matrix& noise) {
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const auto dim = static_cast<Eigen::Index>(model.input_dim());
  require(x.cols() == dim && noise.rows() == x.rows() && noise.cols() == d,
          ErrorCode::invalid_argument, "ELBO batch shape mismatch");
  const auto batch = static_cast<double>(x.rows());
  const auto params = model.parameters();

  MlpTrace enc_trace;
  const Matrix enc_out = mlp_forward(params, model.encoder_layers(), x, &enc_trace);
  const Matrix mean = enc_out.leftCols(d);
  const Matrix log_sd = enc_out.rightCols(d);
  const Matrix sd = log_sd.array().exp().matrix();
  const Matrix z = mean + (sd.array() * noise.array()).matrix();

  MlpTrace dec_trace;
  const Matrix dec_out = mlp_forward(params, model.decoder_layers(), z, &dec_trace);
  const Vector ll = model.log_likelihood(x, dec_out);
  const Vector kl = 0.5 * (mean.array().square() + sd.array().square() - 1.0 -
                           2.0 * log_sd.array())
                              .rowwise()
                              .sum()
                              .matrix();

  ElboGradient out;
  out.elbo = (ll - kl).mean();
  out.gradient.assign(model.parameter_count(), 0.0);

  Matrix d_dec(dec_out.rows(), dec_out.cols());
  switch (model.likelihood()) {
    case Likelihood::bernoulli:
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index j = 0; j < dim; ++j)
          d_dec(r, j) = (x(r, j) - sigmoid(dec_out(r, j))) / batch;
      break;
    case Likelihood::diagonal_gaussian:
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index j = 0; j < dim; ++j) {
          const double inv_var = std::exp(-dec_out(r, dim + j));
          const double diff = x(r, j) - dec_out(r, j);
          d_dec(r, j) = diff * inv_var / batch;
          d_dec(r, dim + j) = (-0.5 + 0.5 * diff * diff * inv_var) / batch;
        }
      }
      break;
    case Likelihood::isotropic_gaussian: {
      const double inv_gamma = std::exp(-model.log_gamma());
      double d_log_gamma = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double sq = 0.0;
        for (Eigen::Index j = 0; j < dim; ++j) {
          const double diff = x(r, j) - dec_out(r, j);
          d_dec(r, j) = diff * inv_gamma / batch;
          sq += diff * diff;
        }
        d_log_gamma += -0.5 * static_cast<double>(dim) + 0.5 * sq * inv_gamma;
      }
      out.gradient.back() = d_log_gamma / batch;
      break;
    }
  }

  const Matrix dz = mlp_backward(params, model.decoder_layers(), dec_trace, std::move(d_dec),
                                 out.gradient);
  Matrix d_enc(x.rows(), 2 * d);
  d_enc.leftCols(d) = dz - mean / batch;
  d_enc.rightCols(d) = (dz.array() * noise.array() * sd.array() -
                        (sd.array().square() - 1.0) / batch)
                           .matrix();
  mlp_backward(params, model.encoder_layers(), enc_trace, std::move(d_enc), out.gradient);
  return out;
}

double elbo_with_noise(const VaeModel& model, const Matrix& x, const Matrix& noise) {
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const auto enc = model.encode(x);
  const Matrix z = enc.mean + (enc.log_sd.array().exp() * noise.array()).matrix();
  const Vector ll = model.log_likelihood(x, model.decode(z));
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double kl = kl_to_standard_normal(
        {enc.mean.data() + r * d, static_cast<std::size_t>(d)},
        {enc.log_sd.data() + r * d, static_cast<std::size_t>(d)});
    total += ll[r] - kl;
  }
  return total / static_cast<double>(x.rows());
}

ImportanceEstimate importance_log_marginal(const VaeModel& model, std::span<const double> x,
                                           std::size_t samples, Rng& rng) {
  require(samples >= 1, ErrorCode::invalid_argument, "importance sampling needs N >= 1");
  require(x.size() == model.input_dim(), ErrorCode::invalid_argument,
          "observation dimension does not match the VAE");
  const Matrix row = ConstRowMap(x.data(), static_cast<Eigen::Index>(x.size()));
  const auto enc = model.encode(row);
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const auto n = static_cast<Eigen::Index>(samples);

  const Matrix eps = standard_normal(rng, n, d);
  Matrix z = (eps.array().rowwise() * enc.log_sd.row(0).array().exp()).matrix();
  z.rowwise() += enc.mean.row(0);
  const Vector ll = model.log_likelihood(row.replicate(n, 1), model.decode(z));

  const double log_sd_sum = enc.log_sd.sum();
  const double dd = static_cast<double>(d);
  std::vector<double> log_weights(samples);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double log_prior = -0.5 * (z.row(l).squaredNorm() + dd * kLog2Pi);
    const double log_q = -0.5 * (eps.row(l).squaredNorm() + dd * kLog2Pi) - log_sd_sum;
    log_weights[static_cast<std::size_t>(l)] = ll[l] + log_prior - log_q;
  }
  const LogMeanEstimate est = log_mean_exp_with_error(log_weights);
  return {est.value, est.std_error};
}

Matrix vae_sample(const VaeModel& model, Rng& rng, std::size_t count) {
  require(count >= 1, ErrorCode::invalid_argument, "sample count must be >= 1");
  const Matrix z = standard_normal(rng, static_cast<Eigen::Index>(count),
                                   static_cast<Eigen::Index>(model.latent_dim()));
  return model.sample_likelihood(model.decode(z), rng);
}

// --- training ----------------------------------------------------------------

bool uses_logit_transform(const VaeSettings& settings, const Dataset& data) {
  return settings.logit_transform.value_or(data.is_image() &&
                                           settings.likelihood != Likelihood::bernoulli);
}

VaeTrainResult vae_train(const Dataset& data, const EstimatorSpec& spec, std::uint64_t seed,
                         const VaeTrainOptions& options) {
  require(spec.family == Family::vae, ErrorCode::invalid_argument,
          "vae_train needs a vae estimator spec");
  const VaeSettings& settings = spec.vae;
  const std::size_t n = data.size();
  const auto dim = static_cast<Eigen::Index>(data.dim());
  const auto d = static_cast<Eigen::Index>(settings.latent_dim);
  const bool logit = uses_logit_transform(settings, data);

  VaeTrainResult result{
      VaeModel::initialize(data.dim(), settings,
                           derive_seed(seed, SeedStream::initialization)),
      {}};
  VaeModel& model = result.model;
  Rng rng(derive_seed(seed, SeedStream::training));
  OptimizerState optimizer = OptimizerState::fresh(
      model.parameter_count(),
      {settings.learning_rate, settings.beta1, settings.beta2, settings.adam_eps});

  const std::set<std::size_t> checkpoints(options.checkpoints.begin(),
                                          options.checkpoints.end());
  auto maybe_checkpoint = [&](std::size_t epoch) {
    if (options.on_checkpoint && checkpoints.count(epoch)) options.on_checkpoint(epoch, model);
  };
  maybe_checkpoint(0);

  const std::size_t batch = std::min(settings.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> ascent(model.parameter_count());

  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
      const std::size_t rows = std::min(batch, n - start);
      Matrix xb(static_cast<Eigen::Index>(rows), dim);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.row(order[start + r]);
        std::vector<double> values(src.begin(), src.end());
        if (settings.dynamic_binarization) values = binarize_dynamic(values, rng);
        if (logit) values = dequantize_logit(values, settings.logit_alpha, rng).values;
        xb.row(static_cast<Eigen::Index>(r)) = ConstRowMap(values.data(), dim);
      }
      const Matrix noise = standard_normal(rng, static_cast<Eigen::Index>(rows), d);
      ElboGradient g = elbo_gradient(model, xb, noise);
      require(std::isfinite(g.elbo), ErrorCode::compute,
              "non-finite ELBO at epoch " + std::to_string(epoch) + ", batch " +
                  std::to_string(b));
      for (std::size_t j = 0; j < ascent.size(); ++j) ascent[j] = -g.gradient[j];
      adam_update(model.parameters(), ascent, optimizer);
      total += g.elbo * static_cast<double>(rows);
    }
    result.epoch_elbo.push_back(total / static_cast<double>(n));
    maybe_checkpoint(epoch);
  }
  return result;
}

// --- oracle ------------------------------------------------------------------

double linear_gaussian_log_marginal(const Matrix& w, const Vector& b, double sigma2,
                                    std::span<const double> x) {
  require(sigma2 > 0.0, ErrorCode::invalid_argument, "sigma2 must be positive");
  require(w.rows() == b.size() && static_cast<std::size_t>(b.size()) == x.size(),
          ErrorCode::invalid_argument, "linear-Gaussian shape mismatch");
  Matrix cov = w * w.transpose();
  cov.diagonal().array() += sigma2;
  GaussianParams params;
  params.mode = CovarianceMode::full;
  params.mean = b;
  params.covariance = cov;
  return gaussian_log_density(params, x);
}

// --- DensityModel adapter ----------------------------------------------------

VaeDensityModel::VaeDensityModel(VaeModel model, bool logit_space,
                                 std::size_t importance_samples)
    : model_(std::move(model)),
      logit_space_(logit_space),
      importance_samples_(importance_samples) {
  require(importance_samples_ >= 1, ErrorCode::invalid_argument,
          "importance sample count must be >= 1");
}

double VaeDensityModel::log_density(std::span<const double> x, std::uint64_t eval_seed) const {
  check_dim(x);
  Rng rng(eval_seed);
  if (!logit_space_) return importance_log_marginal(model_, x, importance_samples_, rng).log_marginal;
  const DequantizedLogit y = dequantize_logit(x, model_.settings().logit_alpha, rng);
  return importance_log_marginal(model_, y.values, importance_samples_, rng).log_marginal +
         y.log_det_jacobian;
}

Matrix VaeDensityModel::sample(Rng& rng, std::size_t count) const {
  Matrix out = vae_sample(model_, rng, count);
  if (!logit_space_) return out;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto unit = logit_to_unit({out.data() + r * out.cols(), static_cast<std::size_t>(out.cols())},
                                    model_.settings().logit_alpha);
    out.row(r) = ConstRowMap(unit.data(), out.cols());
  }
  return out;
}

}  // namespace memaudit
