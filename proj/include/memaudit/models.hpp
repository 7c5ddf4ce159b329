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

#ifndef MEMAUDIT_MODELS_HPP
#define MEMAUDIT_MODELS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "memaudit/core.hpp"
#include "memaudit/estimator_spec.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

inline constexpr double kVarianceFloor = 1e-6;

// A fitted density estimator. Implementations are immutable after
// construction and safe to share between threads.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual Family family() const = 0;
  virtual std::size_t dim() const = 0;

  // Log-density at x. Stochastic estimators (importance sampling,
  // dequantization) draw their noise from eval_seed; the others ignore it.
  virtual double log_density(std::span<const double> x, std::uint64_t eval_seed = 0) const = 0;

  virtual bool can_sample() const { return true; }
  virtual Matrix sample(Rng& rng, std::size_t count) const = 0;

 protected:
  void check_dim(std::span<const double> x) const;
};

using ModelPtr = std::shared_ptr<const DensityModel>;

// --- multivariate normal ---------------------------------------------------

struct GaussianParams {
  Vector mean;
  CovarianceMode mode = CovarianceMode::diagonal;
  Vector variances;   // diagonal mode
  Matrix covariance;  // full mode
};

struct GaussianFit {
  GaussianParams params;
  bool degenerate = false;  // variance floor was needed
};

GaussianFit fit_gaussian_mle(const Dataset& data, CovarianceMode mode);
double gaussian_log_density(const GaussianParams& params, std::span<const double> x);

class GaussianModel final : public DensityModel {
 public:
  explicit GaussianModel(GaussianParams params, bool degenerate = false);

  Family family() const override { return Family::gaussian_mle; }
  std::size_t dim() const override { return static_cast<std::size_t>(params_.mean.size()); }
  double log_density(std::span<const double> x, std::uint64_t = 0) const override;
  Matrix sample(Rng& rng, std::size_t count) const override;

  const GaussianParams& params() const { return params_; }
  bool degenerate() const { return degenerate_; }

 private:
  GaussianParams params_;
  bool degenerate_;
  Matrix cholesky_;  // lower factor, full mode only
  double log_det_ = 0.0;
};

// --- kernel density estimate -------------------------------------------------

struct KdeParams {
  Matrix points;
  double bandwidth = 1.0;
};

// Silverman's factor 1.06 * sd * n^(-1/5) per dimension (unbiased sd),
// combined by geometric mean into one isotropic bandwidth.
double silverman_bandwidth(const Dataset& data);

KdeParams fit_kde(const Dataset& data, std::optional<double> bandwidth);
double kde_log_density(const KdeParams& params, std::span<const double> x);

class KdeModel final : public DensityModel {
 public:
  explicit KdeModel(KdeParams params);

  Family family() const override { return Family::kde; }
  std::size_t dim() const override { return static_cast<std::size_t>(params_.points.cols()); }
  double log_density(std::span<const double> x, std::uint64_t = 0) const override;
  Matrix sample(Rng& rng, std::size_t count) const override;

  const KdeParams& params() const { return params_; }

 private:
  KdeParams params_;
};

// --- diagonal Gaussian mixture ----------------------------------------------

struct GmmParams {
  Vector weights;    // m
  Matrix means;      // m x D
  Matrix variances;  // m x D
};

struct GmmFit {
  GmmParams params;
  std::vector<double> log_likelihood_trace;  // mean per-observation value after each E-step
  std::size_t iterations = 0;
  std::size_t reinitializations = 0;
  bool converged = false;
};

GmmFit fit_gmm_em(const Dataset& data, std::size_t components, std::uint64_t seed,
                  std::size_t max_iters, double tol);
double gmm_log_density(const GmmParams& params, std::span<const double> x);

class GmmModel final : public DensityModel {
 public:
  explicit GmmModel(GmmParams params);

  Family family() const override { return Family::gmm; }
  std::size_t dim() const override { return static_cast<std::size_t>(params_.means.cols()); }
  double log_density(std::span<const double> x, std::uint64_t = 0) const override;
  Matrix sample(Rng& rng, std::size_t count) const override;

  const GmmParams& params() const { return params_; }

 private:
  GmmParams params_;
};

// --- constant log-density, a test double for the audit pipeline --------------

class ConstantModel final : public DensityModel {
 public:
  ConstantModel(std::size_t dim, double log_density) : dim_(dim), value_(log_density) {}

  Family family() const override { return Family::constant; }
  std::size_t dim() const override { return dim_; }
  double log_density(std::span<const double> x, std::uint64_t = 0) const override;
  bool can_sample() const override { return false; }
  Matrix sample(Rng& rng, std::size_t count) const override;

  double value() const { return value_; }

 private:
  std::size_t dim_;
  double value_;
};

// Fits the family named by spec on the training data. When spec.outlier is set
// the fitted model is wrapped with the broad outlier component.
ModelPtr fit_estimator(const EstimatorSpec& spec, const Dataset& train, std::uint64_t seed);

}  // namespace memaudit

#endif  // MEMAUDIT_MODELS_HPP
