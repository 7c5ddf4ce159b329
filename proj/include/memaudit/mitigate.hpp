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


#ifndef MEMAUDIT_MITIGATE_HPP
#define MEMAUDIT_MITIGATE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memaudit/core.hpp"
#include "memaudit/estimator_spec.hpp"
#include "memaudit/models.hpp"

namespace memaudit {

// --- outlier component -------------------------------------------------------

// Diagonal Gaussian at the training mean whose variances are variance_factor
// times the per-dimension data variances.
GaussianParams default_broad_component(const Dataset& train, double variance_factor = 100.0);

// log((1 - w) p(x) + w q0(x)) from log p(x).
double with_outlier_component(double base_log_density, double weight,
                              const GaussianParams& broad, std::span<const double> x);

class OutlierMixtureModel final : public DensityModel {
 public:
  OutlierMixtureModel(ModelPtr base, GaussianParams broad, double weight);

  Family family() const override { return base_->family(); }
  std::size_t dim() const override { return base_->dim(); }
  double log_density(std::span<const double> x, std::uint64_t eval_seed = 0) const override;
  bool can_sample() const override { return base_->can_sample(); }
  Matrix sample(Rng& rng, std::size_t count) const override;

  const ModelPtr& base() const { return base_; }
  const GaussianParams& broad() const { return broad_; }
  double weight() const { return weight_; }

 private:
  ModelPtr base_;
  GaussianParams broad_;
  GaussianModel broad_model_;
  double weight_;
};

// --- Laplace-noised histogram ------------------------------------------------

struct DpHistogram {
  std::vector<HistogramAxis> axes;
  std::vector<double> masses;  // row-major over axes, sums to 1
  double epsilon = 1.0;
  std::uint64_t seed = 0;

  std::size_t bin_count() const { return masses.size(); }
  // Flat bin index, or nullopt outside the edges. The upper edge is inclusive.
  std::optional<std::size_t> bin_of(std::span<const double> x) const;
  double bin_volume() const;
};

// Counts per bin plus Laplace(1/epsilon) noise, negatives clamped to zero,
// then normalized. Falls back to uniform masses if every noisy count clamps.
DpHistogram fit_dp_histogram(const Dataset& data, const std::vector<HistogramAxis>& axes,
                             double epsilon, std::uint64_t seed);

// log(mass / bin volume); -inf outside the edges or in an empty bin.
double dp_histogram_log_density(const DpHistogram& hist, std::span<const double> x);

class DpHistogramModel final : public DensityModel {
 public:
  explicit DpHistogramModel(DpHistogram hist);

  Family family() const override { return Family::dp_histogram; }
  std::size_t dim() const override { return hist_.axes.size(); }
  double log_density(std::span<const double> x, std::uint64_t = 0) const override;
  Matrix sample(Rng& rng, std::size_t count) const override;

  const DpHistogram& histogram() const { return hist_; }

 private:
  DpHistogram hist_;
};

// --- bound check -------------------------------------------------------------

struct DpVerdict {
  double epsilon = 0.0;
  double max_score = 0.0;
  double max_std_error = 0.0;
  std::int64_t max_id = -1;
  double threshold = 0.0;  // epsilon + 3 * max_std_error
  std::size_t repetitions = 0;
  bool pass = false;
  std::string caveat;
};

inline constexpr double kDpSlackErrors = 3.0;

// Passes when the largest score is at most epsilon plus three Monte-Carlo
// standard errors. Needs repetitions >= 2.
DpVerdict dp_bound_check(std::span<const double> scores, std::span<const double> std_errors,
                         std::span<const std::int64_t> ids, double epsilon,
                         std::size_t repetitions);

// Scores of the same observations before and after a mitigation.
struct MitigationComparison {
  std::string strategy;
  std::vector<std::int64_t> ids;
  std::vector<double> before;
  std::vector<double> after;
  std::vector<std::int64_t> focus_ids;  // e.g. planted outliers; empty when unknown
  double max_before = 0.0;
  double max_after = 0.0;
  double focus_max_before = 0.0;  // over focus_ids, NaN when empty
  double focus_max_after = 0.0;
};

MitigationComparison compare_scores(std::string strategy, std::span<const std::int64_t> ids,
                                    std::span<const double> before,
                                    std::span<const double> after,
                                    std::span<const std::int64_t> focus_ids = {});

}  // namespace memaudit

#endif  // MEMAUDIT_MITIGATE_HPP
