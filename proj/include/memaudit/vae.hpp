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

#ifndef MEMAUDIT_VAE_HPP
#define MEMAUDIT_VAE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "memaudit/core.hpp"
#include "memaudit/estimator_spec.hpp"
#include "memaudit/models.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

// A dense layer stored inside the flat parameter vector: the out x in weight
// matrix (row-major) at `offset`, followed by the bias.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weight_count() const { return in * out; }
  std::size_t size() const { return in * out + out; }
};

// Fully connected VAE with a diagonal Gaussian encoder q(z|x), standard normal
// prior and a Bernoulli or Gaussian decoder p(x|z). Hidden layers use ReLU.
//
// Every parameter lives in one flat vector so the optimizer and gradient
// checks work on plain spans. Decoder outputs are unconstrained: Bernoulli
// logits, or mean and log-variance; the isotropic decoder has one extra
// trailing parameter log(gamma).
class VaeModel {
 public:
  struct Encoding {
    Matrix mean;    // B x d
    Matrix log_sd;  // B x d
  };

  // Weights and biases uniform in +-1/sqrt(fan_in), log(gamma) = 0.
  static VaeModel initialize(std::size_t input_dim, const VaeSettings& settings,
                             std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t latent_dim() const { return settings_.latent_dim; }
  std::size_t decoder_output_dim() const;
  Likelihood likelihood() const { return settings_.likelihood; }
  const VaeSettings& settings() const { return settings_; }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  void set_parameters(std::span<const double> values);

  const std::vector<DenseLayer>& encoder_layers() const { return encoder_; }
  const std::vector<DenseLayer>& decoder_layers() const { return decoder_; }

  Eigen::Map<Matrix> weights(const DenseLayer& layer);
  Eigen::Map<Vector> bias(const DenseLayer& layer);
  double log_gamma() const;
  void set_log_gamma(double value);

  Encoding encode(const Matrix& x) const;
  Matrix decode(const Matrix& z) const;

  // log p(x_r | z_r) for each row, given raw decoder outputs.
  Vector log_likelihood(const Matrix& x, const Matrix& decoded) const;

  // Draws x ~ p(x | z) for each row of decoder output.
  Matrix sample_likelihood(const Matrix& decoded, Rng& rng) const;

  bool operator==(const VaeModel& other) const {
    return input_dim_ == other.input_dim_ && params_ == other.params_;
  }

 private:
  VaeModel(std::size_t input_dim, VaeSettings settings);

  std::size_t input_dim_ = 0;
  VaeSettings settings_;
  std::vector<DenseLayer> encoder_;
  std::vector<DenseLayer> decoder_;
  std::size_t log_gamma_offset_ = 0;
  std::vector<double> params_;
};

// KL(N(mean, sd^2) || N(0, I)) in closed form, summed over latent dimensions.
double kl_to_standard_normal(std::span<const double> mean, std::span<const double> log_sd);

// -KL(q(z|x) || p(z)) plus the Monte-Carlo mean of log p(x|z) over mc_samples
// reparameterized draws.
double elbo_estimate(const VaeModel& model, std::span<const double> x, std::size_t mc_samples,
                     Rng& rng);

// Mean single-sample ELBO over the rows of x with the reparameterization
// noise frozen (one row of `noise` per row of x), and its exact gradient with
// respect to every parameter.
struct ElboGradient {
  double elbo = 0.0;
  std::vector<double> gradient;
};
ElboGradient elbo_gradient(const VaeModel& model, const Matrix& x, const Matrix& noise);
double elbo_with_noise(const VaeModel& model, const Matrix& x, const Matrix& noise);

struct ImportanceEstimate {
  double log_marginal = 0.0;
  double std_error = 0.0;  // delta-method error of the log estimate
};

// log (1/N) sum_l p(x|z_l) p(z_l) / q(z_l|x) with z_l ~ q(z|x), in log space.
ImportanceEstimate importance_log_marginal(const VaeModel& model, std::span<const double> x,
                                           std::size_t samples, Rng& rng);

// z ~ N(0, I), then x ~ p(x | z).
Matrix vae_sample(const VaeModel& model, Rng& rng, std::size_t count);

struct VaeTrainOptions {
  // Epoch numbers (0 = before the first update) at which on_checkpoint fires.
  std::vector<std::size_t> checkpoints;
  std::function<void(std::size_t epoch, const VaeModel& model)> on_checkpoint;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<double> epoch_elbo;  // mean training ELBO per epoch
};

// Mini-batch Adam ascent on the single-sample reparameterized ELBO. Image data
// with a Gaussian decoder is trained in dequantized logit space; Bernoulli
// decoders may binarize each batch dynamically. Throws a compute error on a
// non-finite loss.
VaeTrainResult vae_train(const Dataset& data, const EstimatorSpec& spec, std::uint64_t seed,
                         const VaeTrainOptions& options = {});

bool uses_logit_transform(const VaeSettings& settings, const Dataset& data);

// log N(x; b, W W^T + sigma2 I): the exact marginal of a linear decoder
// x = W z + b + noise with z ~ N(0, I).
double linear_gaussian_log_marginal(const Matrix& w, const Vector& b, double sigma2,
                                    std::span<const double> x);

// DensityModel adapter: log-density by importance sampling, with the
// dequantization Jacobian added when the model was trained in logit space.
class VaeDensityModel final : public DensityModel {
 public:
  VaeDensityModel(VaeModel model, bool logit_space, std::size_t importance_samples);

  Family family() const override { return Family::vae; }
  std::size_t dim() const override { return model_.input_dim(); }
  double log_density(std::span<const double> x, std::uint64_t eval_seed = 0) const override;
  Matrix sample(Rng& rng, std::size_t count) const override;

  const VaeModel& model() const { return model_; }
  bool logit_space() const { return logit_space_; }
  std::size_t importance_samples() const { return importance_samples_; }

 private:
  VaeModel model_;
  bool logit_space_;
  std::size_t importance_samples_;
};

}  // namespace memaudit

#endif  // MEMAUDIT_VAE_HPP
