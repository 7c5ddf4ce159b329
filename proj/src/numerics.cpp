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

#include "memaudit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memaudit/error.hpp"

namespace memaudit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked_max(std::span<const double> values) {
  require(!values.empty(), ErrorCode::invalid_argument, "log-sum-exp of an empty list");
  double top = -kInf;
  for (double v : values) {
    require(!std::isnan(v), ErrorCode::invalid_argument, "log-sum-exp input contains NaN");
    top = std::max(top, v);
  }
  return top;
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  const double top = checked_max(values);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

double log_mean_exp(std::span<const double> values) {
  const double top = checked_max(values);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  // Dividing before the log keeps constant inputs exact.
  return top + std::log(sum / static_cast<double>(values.size()));
}

LogMeanEstimate log_mean_exp_with_error(std::span<const double> values) {
  const double top = checked_max(values);
  LogMeanEstimate out;
  out.value = log_mean_exp(values);
  if (values.size() < 2 || !std::isfinite(top)) return out;
  // Work with w / max(w) so the ratio sd / mean is scale free.
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : values) {
    const double w = std::exp(v - top);
    sum += w;
    sum_sq += w * w;
  }
  const double m = sum / n;
  const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
  out.std_error = std::sqrt(var) / (std::sqrt(n) * m);
  return out;
}

OptimizerState OptimizerState::fresh(std::size_t dim, AdamConfig config) {
  OptimizerState s;
  s.first_moment.assign(dim, 0.0);
  s.second_moment.assign(dim, 0.0);
  s.config = config;
  return s;
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 OptimizerState& state) {
  require(params.size() == grads.size() && params.size() == state.first_moment.size() &&
              params.size() == state.second_moment.size(),
          ErrorCode::invalid_argument, "Adam step dimension mismatch");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  const double step_size = c.learning_rate / bias1;
  const double sqrt_bias2 = std::sqrt(bias2);
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double g = grads[j];
    m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
    v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
    const double denom = std::sqrt(v[j]) / sqrt_bias2 + c.eps;
    params[j] -= step_size * m[j] / denom;
  }
}

std::pair<std::vector<double>, OptimizerState> adam_step(std::vector<double> params,
                                                         std::span<const double> grads,
                                                         OptimizerState state) {
  adam_update(params, grads, state);
  return {std::move(params), std::move(state)};
}

std::vector<double> finite_diff_gradient(const ScalarFunction& f,
                                         std::span<const double> x, double h) {
  require(h > 0.0, ErrorCode::invalid_argument, "finite-difference step must be > 0");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = f(probe);
    probe[j] = x[j] - h;
    const double down = f(probe);
    probe[j] = x[j];
    require(std::isfinite(up) && std::isfinite(down), ErrorCode::compute,
            "non-finite function value during finite differencing");
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

double quantile(std::span<const double> values, double q) {
  require(!values.empty(), ErrorCode::invalid_argument, "quantile of an empty list");
  require(q >= 0.0 && q <= 1.0, ErrorCode::invalid_argument, "quantile level outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> values) {
  require(!values.empty(), ErrorCode::invalid_argument, "mean of an empty list");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

double sample_variance(std::span<const double> values) {
  const double m = mean(values);
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double skewness(std::span<const double> values) {
  const double m = mean(values);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(values.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::invalid_argument,
          "correlation inputs differ in length");
  if (x.size() < 2) return 0.0;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace memaudit
