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

#include "memaudit/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "memaudit/error.hpp"

namespace memaudit {

namespace {

void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 0.5, ErrorCode::invalid_argument,
          "logit alpha must lie in (0, 0.5)");
}

double sigmoid(double y) {
  return y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
}

}  // namespace

std::vector<double> binarize_dynamic(std::span<const double> pixels, Rng& rng) {
  std::vector<double> out(pixels.size());
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    const double p = pixels[j];
    require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_argument,
            "binarization needs pixel values in [0, 1]");
    out[j] = rng.uniform() < p ? 1.0 : 0.0;
  }
  return out;
}

DequantizedLogit dequantize_logit(std::span<const double> pixels, double alpha, Rng& rng) {
  std::vector<double> noise(pixels.size());
  for (double& u : noise) u = rng.uniform();
  return dequantize_logit(pixels, alpha, noise);
}

DequantizedLogit dequantize_logit(std::span<const double> pixels, double alpha,
                                  std::span<const double> noise) {
  check_alpha(alpha);
  require(noise.size() == pixels.size(), ErrorCode::invalid_argument,
          "dequantization noise length mismatch");
  DequantizedLogit out;
  out.values.resize(pixels.size());
  out.noise.assign(noise.begin(), noise.end());
  const double log_scale = std::log1p(-2.0 * alpha);
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    const double unit = (255.0 * pixels[j] + noise[j]) / 256.0;
    const double s = alpha + (1.0 - 2.0 * alpha) * unit;
    out.values[j] = std::log(s) - std::log1p(-s);
    out.log_det_jacobian += log_scale - std::log(s) - std::log1p(-s);
  }
  return out;
}

std::vector<double> inverse_dequantize_logit(std::span<const double> values, double alpha,
                                             std::span<const double> noise) {
  check_alpha(alpha);
  require(noise.size() == values.size(), ErrorCode::invalid_argument,
          "dequantization noise length mismatch");
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double unit = (sigmoid(values[j]) - alpha) / (1.0 - 2.0 * alpha);
    out[j] = (256.0 * unit - noise[j]) / 255.0;
  }
  return out;
}

std::vector<double> logit_to_unit(std::span<const double> values, double alpha) {
  check_alpha(alpha);
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j)
    out[j] = std::clamp((sigmoid(values[j]) - alpha) / (1.0 - 2.0 * alpha), 0.0, 1.0);
  return out;
}

double logit_log_det(std::span<const double> unit_values, double alpha) {
  check_alpha(alpha);
  const double log_scale = std::log1p(-2.0 * alpha);
  double total = 0.0;
  for (double unit : unit_values) {
    const double s = alpha + (1.0 - 2.0 * alpha) * unit;
    total += log_scale - std::log(s) - std::log1p(-s);
  }
  return total;
}

}  // namespace memaudit
