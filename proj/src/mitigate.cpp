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


#include "memaudit/mitigate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memaudit/error.hpp"
#include "memaudit/numerics.hpp"

namespace memaudit {

GaussianParams default_broad_component(const Dataset& train, double variance_factor) {
  require(variance_factor >= 1.0, ErrorCode::invalid_argument,
          "broad component variance factor must be >= 1");
  const GaussianFit fit = fit_gaussian_mle(train, CovarianceMode::diagonal);
  GaussianParams broad = fit.params;
  broad.variances *= variance_factor;
  return broad;
}

double with_outlier_component(double base_log_density, double weight,
                              const GaussianParams& broad, std::span<const double> x) {
  require(weight > 0.0 && weight < 1.0, ErrorCode::invalid_argument,
          "outlier weight must lie in (0, 1)");
  const double terms[2] = {std::log1p(-weight) + base_log_density,
                           std::log(weight) + gaussian_log_density(broad, x)};
  return log_sum_exp(terms);
}

OutlierMixtureModel::OutlierMixtureModel(ModelPtr base, GaussianParams broad, double weight)
    : base_(std::move(base)), broad_(broad), broad_model_(std::move(broad)), weight_(weight) {
  require(base_ != nullptr, ErrorCode::invalid_argument, "outlier mixture needs a base model");
  require(weight_ > 0.0 && weight_ < 1.0, ErrorCode::invalid_argument,
          "outlier weight must lie in (0, 1)");
  require(broad_model_.dim() == base_->dim(), ErrorCode::invalid_argument,
          "broad component dimension mismatch");
}

double OutlierMixtureModel::log_density(std::span<const double> x,
                                        std::uint64_t eval_seed) const {
  check_dim(x);
  return with_outlier_component(base_->log_density(x, eval_seed), weight_, broad_, x);
}

Matrix OutlierMixtureModel::sample(Rng& rng, std::size_t count) const {
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim()));
  for (std::size_t r = 0; r < count; ++r) {
    const Matrix one = rng.bernoulli(weight_) ? broad_model_.sample(rng, 1) : base_->sample(rng, 1);
    out.row(static_cast<Eigen::Index>(r)) = one.row(0);
  }
  return out;
}

// --- histogram ---------------------------------------------------------------

std::optional<std::size_t> DpHistogram::bin_of(std::span<const double> x) const {
  if (x.size() != axes.size()) return std::nullopt;
  std::size_t flat = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const HistogramAxis& axis = axes[a];
    if (!(x[a] >= axis.lo && x[a] <= axis.hi)) return std::nullopt;
    auto b = static_cast<std::size_t>(std::floor((x[a] - axis.lo) / (axis.hi - axis.lo) *
                                                 static_cast<double>(axis.bins)));
    b = std::min(b, axis.bins - 1);
    flat = flat * axis.bins + b;
  }
  return flat;
}

double DpHistogram::bin_volume() const {
  double v = 1.0;
  for (const HistogramAxis& axis : axes) v *= (axis.hi - axis.lo) / static_cast<double>(axis.bins);
  return v;
}

namespace {

void check_axes(const std::vector<HistogramAxis>& axes) {
  require(axes.size() == 1 || axes.size() == 2, ErrorCode::invalid_argument,
          "histogram supports 1-D or 2-D data");
  for (const HistogramAxis& axis : axes) {
    require(axis.bins >= 1, ErrorCode::invalid_argument, "histogram axis needs >= 1 bin");
    require(std::isfinite(axis.lo) && std::isfinite(axis.hi) && axis.lo < axis.hi,
            ErrorCode::invalid_argument, "histogram axis needs finite lo < hi");
  }
}

}  // namespace

DpHistogram fit_dp_histogram(const Dataset& data, const std::vector<HistogramAxis>& axes,
                             double epsilon, std::uint64_t seed) {
  check_axes(axes);
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::invalid_argument,
          "epsilon must be positive");
  require(data.dim() == axes.size(), ErrorCode::invalid_argument,
          "histogram axes do not match the data dimension");
  DpHistogram hist{axes, {}, epsilon, seed};
  std::size_t bins = 1;
  for (const HistogramAxis& axis : axes) bins *= axis.bins;
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto b = hist.bin_of(data.row(i));
    require(b.has_value(), ErrorCode::invalid_argument,
            "observation id " + std::to_string(data.ids()[i]) +
                " lies outside the histogram edges");
    counts[*b] += 1.0;
  }
  Rng rng(seed);
  double total = 0.0;
  for (double& c : counts) {
    c = std::max(0.0, c + rng.laplace(1.0 / epsilon));
    total += c;
  }
  if (total > 0.0) {
    for (double& c : counts) c /= total;
  } else {
    std::fill(counts.begin(), counts.end(), 1.0 / static_cast<double>(bins));
  }
  hist.masses = std::move(counts);
  return hist;
}

double dp_histogram_log_density(const DpHistogram& hist, std::span<const double> x) {
  require(x.size() == hist.axes.size(), ErrorCode::invalid_argument,
          "observation dimension does not match the histogram");
  const auto b = hist.bin_of(x);
  if (!b || hist.masses[*b] <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(hist.masses[*b]) - std::log(hist.bin_volume());
}

DpHistogramModel::DpHistogramModel(DpHistogram hist) : hist_(std::move(hist)) {
  check_axes(hist_.axes);
  std::size_t bins = 1;
  for (const HistogramAxis& axis : hist_.axes) bins *= axis.bins;
  require(hist_.masses.size() == bins, ErrorCode::invalid_argument,
          "histogram mass count does not match its axes");
}

double DpHistogramModel::log_density(std::span<const double> x, std::uint64_t) const {
  check_dim(x);
  return dp_histogram_log_density(hist_, x);
}

Matrix DpHistogramModel::sample(Rng& rng, std::size_t count) const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix out(static_cast<Eigen::Index>(count), d);
  for (std::size_t r = 0; r < count; ++r) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t flat = hist_.masses.size() - 1;
    for (std::size_t b = 0; b < hist_.masses.size(); ++b) {
      acc += hist_.masses[b];
      if (u < acc) {
        flat = b;
        break;
      }
    }
    for (std::size_t a = hist_.axes.size(); a-- > 0;) {
      const HistogramAxis& axis = hist_.axes[a];
      const std::size_t b = flat % axis.bins;
      flat /= axis.bins;
      const double width = (axis.hi - axis.lo) / static_cast<double>(axis.bins);
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) =
          axis.lo + (static_cast<double>(b) + rng.uniform()) * width;
    }
  }
  return out;
}

// --- bound check -------------------------------------------------------------

DpVerdict dp_bound_check(std::span<const double> scores, std::span<const double> std_errors,
                         std::span<const std::int64_t> ids, double epsilon,
                         std::size_t repetitions) {
  require(repetitions >= 2, ErrorCode::invalid_argument,
          "the bound check needs T >= 2 repetitions to estimate Monte-Carlo error");
  require(!scores.empty() && scores.size() == std_errors.size() && scores.size() == ids.size(),
          ErrorCode::invalid_argument, "bound check inputs must be nonempty and aligned");
  require(epsilon > 0.0, ErrorCode::invalid_argument, "epsilon must be positive");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  DpVerdict v;
  v.epsilon = epsilon;
  v.max_score = scores[best];
  v.max_std_error = std_errors[best];
  v.max_id = ids[best];
  v.threshold = epsilon + kDpSlackErrors * v.max_std_error;
  v.repetitions = repetitions;
  v.pass = v.max_score <= v.threshold;
  v.caveat =
      "A passing check is consistent with epsilon-DP but does not establish it: small "
      "memorization scores do not imply differential privacy. Scores are evaluated only at "
      "the removed observation.";
  return v;
}

MitigationComparison compare_scores(std::string strategy, std::span<const std::int64_t> ids,
                                    std::span<const double> before,
                                    std::span<const double> after,
                                    std::span<const std::int64_t> focus_ids) {
  require(!ids.empty() && ids.size() == before.size() && ids.size() == after.size(),
          ErrorCode::invalid_argument, "score comparison inputs must be nonempty and aligned");
  MitigationComparison c;
  c.strategy = std::move(strategy);
  c.ids.assign(ids.begin(), ids.end());
  c.before.assign(before.begin(), before.end());
  c.after.assign(after.begin(), after.end());
  c.focus_ids.assign(focus_ids.begin(), focus_ids.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double lowest = -std::numeric_limits<double>::infinity();
  c.max_before = c.max_after = lowest;
  c.focus_max_before = c.focus_max_after = focus_ids.empty() ? nan : lowest;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    c.max_before = std::max(c.max_before, before[i]);
    c.max_after = std::max(c.max_after, after[i]);
    if (std::find(focus_ids.begin(), focus_ids.end(), ids[i]) != focus_ids.end()) {
      c.focus_max_before = std::max(c.focus_max_before, before[i]);
      c.focus_max_after = std::max(c.focus_max_after, after[i]);
    }
  }
  return c;
}

}  // namespace memaudit
