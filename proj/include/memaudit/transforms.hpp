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

#ifndef MEMAUDIT_TRANSFORMS_HPP
#define MEMAUDIT_TRANSFORMS_HPP

#include <span>
#include <vector>

#include "memaudit/random.hpp"

namespace memaudit {

inline constexpr double kDefaultLogitAlpha = 1e-6;

// Each pixel becomes an independent coin with success probability equal to
// its grey value. Values must lie in [0, 1].
std::vector<double> binarize_dynamic(std::span<const double> pixels, Rng& rng);

struct DequantizedLogit {
  std::vector<double> values;  // logit-space observation y
  std::vector<double> noise;   // the uniform draws u, needed to invert
  double log_det_jacobian = 0.0;  // sum of log|dy/dx| over pixels
};

// y = logit(alpha + (1 - 2 alpha) (255 x + u) / 256) with u ~ U[0, 1) per
// pixel. The returned log-determinant converts densities from y-space to the
// dequantized pixel space: log p_x = log p_y + log_det_jacobian.
DequantizedLogit dequantize_logit(std::span<const double> pixels, double alpha, Rng& rng);

// Same transform with caller-supplied noise.
DequantizedLogit dequantize_logit(std::span<const double> pixels, double alpha,
                                  std::span<const double> noise);

// Inverse of the transform above for the same noise, back to the 8-bit grid.
std::vector<double> inverse_dequantize_logit(std::span<const double> values, double alpha,
                                             std::span<const double> noise);

// Maps logit-space values to the dequantized unit interval, clamped to [0, 1].
std::vector<double> logit_to_unit(std::span<const double> values, double alpha);

// log|dy/ds| for y = logit(alpha + (1 - 2 alpha) s), summed over entries of s.
double logit_log_det(std::span<const double> unit_values, double alpha);

}  // namespace memaudit

#endif  // MEMAUDIT_TRANSFORMS_HPP
