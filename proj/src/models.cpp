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

#include "memaudit/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "memaudit/error.hpp"
#include "memaudit/numerics.hpp"

namespace memaudit {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::Map<const Eigen::RowVectorXd> as_row(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

// Per-column mean and biased (MLE) variance, accumulated in row order.
void column_moments(const Matrix& x, Vector& mean, Vector& var) {
  const auto n = static_cast<double>(x.rows());
  mean = Vector::Zero(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) mean += x.row(r).transpose();
  mean /= n;
  var = Vector::Zero(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    var += (x.row(r).transpose() - mean).array().square().matrix();
  var /= n;
}

}  // namespace

void DensityModel::check_dim(std::span<const double> x) const {
  require(x.size() == dim(), ErrorCode::invalid_argument,
          "observation has dimension " + std::to_string(x.size()) + ", model expects " +
              std::to_string(dim()));
}

// --- Gaussian ----------------------------------------------------------------

GaussianFit fit_gaussian_mle(const Dataset& data, CovarianceMode mode) {
  const Matrix& x = data.observations();
  GaussianFit fit;
  fit.params.mode = mode;
  Vector var;
  column_moments(x, fit.params.mean, var);
  fit.degenerate = data.size() < 2;

  if (mode == CovarianceMode::diagonal) {
    for (Eigen::Index j = 0; j < var.size(); ++j) {
      if (var[j] < kVarianceFloor) {
        var[j] = kVarianceFloor;
        fit.degenerate = true;
      }
    }
    fit.params.variances = var;
    return fit;
  }

  require(data.size() > data.dim(), ErrorCode::invalid_argument,
          "full-covariance MLE needs n > D");
  const auto n = static_cast<double>(x.rows());
  Matrix centered = x.rowwise() - fit.params.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / n;
  for (Eigen::Index j = 0; j < cov.rows(); ++j) {
    if (cov(j, j) < kVarianceFloor) {
      cov(j, j) = kVarianceFloor;
      fit.degenerate = true;
    }
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += kVarianceFloor;
    fit.degenerate = true;
  }
  fit.params.covariance = cov;
  return fit;
}

double gaussian_log_density(const GaussianParams& params, std::span<const double> x) {
  return GaussianModel(params).log_density(x);
}

GaussianModel::GaussianModel(GaussianParams params, bool degenerate)
    : params_(std::move(params)), degenerate_(degenerate) {
  const auto d = params_.mean.size();
  require(d >= 1, ErrorCode::invalid_argument, "Gaussian needs dimension >= 1");
  if (params_.mode == CovarianceMode::diagonal) {
    require(params_.variances.size() == d && (params_.variances.array() > 0.0).all(),
            ErrorCode::invalid_argument, "diagonal variances must be positive");
    log_det_ = params_.variances.array().log().sum();
  } else {
    require(params_.covariance.rows() == d && params_.covariance.cols() == d,
            ErrorCode::invalid_argument, "covariance shape mismatch");
    Eigen::LLT<Matrix> llt(params_.covariance);
    require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
            "covariance is not positive definite");
    cholesky_ = llt.matrixL();
    log_det_ = 2.0 * cholesky_.diagonal().array().log().sum();
  }
}

double GaussianModel::log_density(std::span<const double> x, std::uint64_t) const {
  check_dim(x);
  const auto d = static_cast<double>(dim());
  Vector diff = as_row(x).transpose() - params_.mean;
  double quad;
  if (params_.mode == CovarianceMode::diagonal) {
    quad = (diff.array().square() / params_.variances.array()).sum();
  } else {
    Vector y = cholesky_.triangularView<Eigen::Lower>().solve(diff);
    quad = y.squaredNorm();
  }
  return -0.5 * (d * kLog2Pi + log_det_ + quad);
}

Matrix GaussianModel::sample(Rng& rng, std::size_t count) const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix out(static_cast<Eigen::Index>(count), d);
  Vector eps(d);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index j = 0; j < d; ++j) eps[j] = rng.normal();
    if (params_.mode == CovarianceMode::diagonal)
      out.row(r) = (params_.mean.array() + params_.variances.array().sqrt() * eps.array())
                       .matrix()
                       .transpose();
    else
      out.row(r) = (params_.mean + cholesky_ * eps).transpose();
  }
  return out;
}

// --- KDE ---------------------------------------------------------------------

double silverman_bandwidth(const Dataset& data) {
  const Matrix& x = data.observations();
  const auto n = static_cast<double>(x.rows());
  const double factor = 1.06 * std::pow(n, -0.2);
  double log_sum = 0.0;
  std::vector<double> column(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) column[static_cast<std::size_t>(r)] = x(r, j);
    const double var = std::max(sample_variance(column), kVarianceFloor);
    log_sum += std::log(factor * std::sqrt(var));
  }
  return std::exp(log_sum / static_cast<double>(x.cols()));
}

KdeParams fit_kde(const Dataset& data, std::optional<double> bandwidth) {
  if (bandwidth) {
    require(*bandwidth > 0.0 && std::isfinite(*bandwidth), ErrorCode::invalid_argument,
            "KDE bandwidth must be positive");
  }
  return KdeParams{data.observations(), bandwidth ? *bandwidth : silverman_bandwidth(data)};
}

double kde_log_density(const KdeParams& params, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(params.points.cols()),
          ErrorCode::invalid_argument, "observation dimension does not match the KDE");
  const double h2 = params.bandwidth * params.bandwidth;
  const double log_norm =
      -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi * h2);
  const auto point = as_row(x);
  std::vector<double> terms(static_cast<std::size_t>(params.points.rows()));
  for (Eigen::Index r = 0; r < params.points.rows(); ++r) {
    const double sq = (params.points.row(r) - point).squaredNorm();
    terms[static_cast<std::size_t>(r)] = log_norm - sq / (2.0 * h2);
  }
  return log_mean_exp(terms);
}

KdeModel::KdeModel(KdeParams params) : params_(std::move(params)) {
  require(params_.bandwidth > 0.0, ErrorCode::invalid_argument, "KDE bandwidth must be > 0");
  require(params_.points.rows() >= 1, ErrorCode::invalid_argument,
          "KDE needs at least one retained point");
}

double KdeModel::log_density(std::span<const double> x, std::uint64_t) const {
  check_dim(x);
  return kde_log_density(params_, x);
}

Matrix KdeModel::sample(Rng& rng, std::size_t count) const {
  Matrix out(static_cast<Eigen::Index>(count), params_.points.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto pick = static_cast<Eigen::Index>(
        rng.below(static_cast<std::uint64_t>(params_.points.rows())));
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(r, j) = params_.points(pick, j) + params_.bandwidth * rng.normal();
  }
  return out;
}

// --- GMM ---------------------------------------------------------------------

namespace {

double component_log_density(const GmmParams& p, Eigen::Index c,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto var = p.variances.row(c).array();
  const double quad = ((x.array() - p.means.row(c).array()).square() / var).sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + var.log().sum() + quad);
}

}  // namespace

GmmFit fit_gmm_em(const Dataset& data, std::size_t components, std::uint64_t seed,
                  std::size_t max_iters, double tol) {
  const Matrix& x = data.observations();
  const auto n = x.rows();
  const auto d = x.cols();
  const auto m = static_cast<Eigen::Index>(components);
  require(components >= 1 && static_cast<Eigen::Index>(components) <= n,
          ErrorCode::invalid_argument, "GMM needs 1 <= m <= n");

  Rng rng(seed);
  Vector data_mean, data_var;
  column_moments(x, data_mean, data_var);
  data_var = data_var.cwiseMax(kVarianceFloor);

  GmmFit fit;
  GmmParams& p = fit.params;
  p.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  p.means.resize(m, d);
  p.variances.resize(m, d);
  {
    // k-means++ seeding: each further mean is drawn with probability
    // proportional to the squared distance to the nearest chosen one.
    std::vector<double> nearest(static_cast<std::size_t>(n),
                                std::numeric_limits<double>::infinity());
    Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    for (Eigen::Index c = 0; c < m; ++c) {
      p.means.row(c) = x.row(pick);
      p.variances.row(c) = data_var.transpose();
      double total = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        auto& best = nearest[static_cast<std::size_t>(r)];
        best = std::min(best, (x.row(r) - p.means.row(c)).squaredNorm());
        total += best;
      }
      if (total <= 0.0) {
        pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        continue;
      }
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index r = 0; r < n; ++r) {
        target -= nearest[static_cast<std::size_t>(r)];
        if (target < 0.0) {
          pick = r;
          break;
        }
      }
    }
  }

  Matrix log_resp(n, m);
  std::vector<double> row_terms(static_cast<std::size_t>(m));
  double previous = -std::numeric_limits<double>::infinity();
  const double min_mass = 1e-10;

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // E-step in log space.
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < m; ++c)
        row_terms[static_cast<std::size_t>(c)] =
            std::log(p.weights[c]) + component_log_density(p, c, x.row(r));
      const double norm = log_sum_exp(row_terms);
      total += norm;
      for (Eigen::Index c = 0; c < m; ++c)
        log_resp(r, c) = row_terms[static_cast<std::size_t>(c)] - norm;
    }
    const double current = total / static_cast<double>(n);
    fit.log_likelihood_trace.push_back(current);
    fit.iterations = iter + 1;
    if (iter > 0 && current - previous < tol) {
      fit.converged = true;
      break;
    }
    previous = current;

    // M-step.
    for (Eigen::Index c = 0; c < m; ++c) {
      double mass = 0.0;
      Vector mu = Vector::Zero(d);
      for (Eigen::Index r = 0; r < n; ++r) {
        const double w = std::exp(log_resp(r, c));
        mass += w;
        mu += w * x.row(r).transpose();
      }
      if (mass < min_mass) {
        // Empty component: restart it at a random observation.
        const auto pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        p.means.row(c) = x.row(pick);
        p.variances.row(c) = data_var.transpose();
        p.weights[c] = 1.0 / static_cast<double>(n);
        ++fit.reinitializations;
        continue;
      }
      mu /= mass;
      Vector var = Vector::Zero(d);
      for (Eigen::Index r = 0; r < n; ++r) {
        const double w = std::exp(log_resp(r, c));
        var += w * (x.row(r).transpose() - mu).array().square().matrix();
      }
      var /= mass;
      p.means.row(c) = mu.transpose();
      p.variances.row(c) = var.cwiseMax(kVarianceFloor).transpose();
      p.weights[c] = mass / static_cast<double>(n);
    }
    p.weights /= p.weights.sum();
  }
  return fit;
}

double gmm_log_density(const GmmParams& params, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(params.means.cols()),
          ErrorCode::invalid_argument, "observation dimension does not match the GMM");
  const auto point = as_row(x);
  std::vector<double> terms(static_cast<std::size_t>(params.weights.size()));
  for (Eigen::Index c = 0; c < params.weights.size(); ++c)
    terms[static_cast<std::size_t>(c)] =
        std::log(params.weights[c]) + component_log_density(params, c, point);
  return log_sum_exp(terms);
}

GmmModel::GmmModel(GmmParams params) : params_(std::move(params)) {
  require(params_.weights.size() >= 1 && params_.means.rows() == params_.weights.size() &&
              params_.variances.rows() == params_.weights.size() &&
              params_.variances.cols() == params_.means.cols(),
          ErrorCode::invalid_argument, "inconsistent GMM parameter shapes");
  require(std::abs(params_.weights.sum() - 1.0) < 1e-9 && (params_.weights.array() >= 0).all(),
          ErrorCode::invalid_argument, "GMM weights must form a simplex");
  require((params_.variances.array() > 0.0).all(), ErrorCode::invalid_argument,
          "GMM variances must be positive");
}

double GmmModel::log_density(std::span<const double> x, std::uint64_t) const {
  check_dim(x);
  return gmm_log_density(params_, x);
}

Matrix GmmModel::sample(Rng& rng, std::size_t count) const {
  Matrix out(static_cast<Eigen::Index>(count), params_.means.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    double u = rng.uniform();
    Eigen::Index c = 0;
    while (c + 1 < params_.weights.size() && u >= params_.weights[c]) {
      u -= params_.weights[c];
      ++c;
    }
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(r, j) = params_.means(c, j) + std::sqrt(params_.variances(c, j)) * rng.normal();
  }
  return out;
}

// --- constant ----------------------------------------------------------------

double ConstantModel::log_density(std::span<const double> x, std::uint64_t) const {
  check_dim(x);
  return value_;
}

Matrix ConstantModel::sample(Rng&, std::size_t) const {
  fail(ErrorCode::unsupported, "the constant-density estimator cannot draw samples");
}

}  // namespace memaudit
