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

#ifndef MEMAUDIT_NUMERICS_HPP
#define MEMAUDIT_NUMERICS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace memaudit {

// log(sum(exp(v))) with max-shift. -inf entries are allowed; an all -inf input
// gives -inf. Throws on empty input or NaN.
double log_sum_exp(std::span<const double> values);

// log_sum_exp(values) - log(count).
double log_mean_exp(std::span<const double> values);

// log_mean_exp together with a delta-method standard error of the log mean,
// sd(w) / (sqrt(n) * mean(w)) for w = exp(values). Zero when n == 1.
struct LogMeanEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
LogMeanEstimate log_mean_exp_with_error(std::span<const double> values);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;
  AdamConfig config;

  static OptimizerState fresh(std::size_t dim, AdamConfig config = {});
};

// Bias-corrected Adam descent step (PyTorch parameterization). Callers that
// maximize pass negated ascent gradients.
std::pair<std::vector<double>, OptimizerState> adam_step(std::vector<double> params,
                                                         std::span<const double> grads,
                                                         OptimizerState state);

// In-place form used in training loops.
void adam_update(std::span<double> params, std::span<const double> grads,
                 OptimizerState& state);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
std::vector<double> finite_diff_gradient(const ScalarFunction& f,
                                         std::span<const double> x, double h);

// Linear interpolation between order statistics at rank q (n - 1).
double quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);
double median(std::span<const double> values);
// Unbiased (n - 1) sample variance; 0 for a single value.
double sample_variance(std::span<const double> values);
// Moment coefficient of skewness m3 / m2^1.5; 0 when m2 == 0.
double skewness(std::span<const double> values);
// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace memaudit

#endif  // MEMAUDIT_NUMERICS_HPP
