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


#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "memaudit/error.hpp"
#include "memaudit/memscore.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/numerics.hpp"

using namespace memaudit;

namespace {

Dataset column(std::vector<double> values) {
  Matrix x(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = values[i];
  return Dataset(x);
}

Dataset uniform_column(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return column(v);
}

GaussianParams unit_broad() {
  GaussianParams g;
  g.mean = Vector::Zero(1);
  g.variances = Vector::Constant(1, 100.0);
  return g;
}

}  // namespace

TEST_CASE("outlier component examples") {
  const GaussianParams broad = unit_broad();
  const std::vector<double> x{0.4};
  CHECK(with_outlier_component(-1.3, 1e-12, broad, x) == doctest::Approx(-1.3).epsilon(1e-9));
  const std::vector<double> far{50.0};
  CHECK(with_outlier_component(-1e6, 0.01, broad, far) ==
        doctest::Approx(std::log(0.01) + gaussian_log_density(broad, far)).epsilon(1e-12));
  CHECK_THROWS_AS(with_outlier_component(0.0, 0.0, broad, x), Error);
  CHECK_THROWS_AS(with_outlier_component(0.0, 1.0, broad, x), Error);
}

TEST_CASE("default broad component") {
  const Dataset d = column({1.0, 2.0, 3.0, 4.0});
  const GaussianParams g = default_broad_component(d);
  CHECK(g.mean(0) == 2.5);
  CHECK(g.variances(0) == doctest::Approx(100.0 * 1.25));
}

TEST_CASE("wrapped density integrates to one and never drops below (1 - w) p") {
  Rng rng(3);
  std::vector<double> v(50);
  for (double& x : v) x = rng.normal();
  const Dataset d = column(v);
  EstimatorSpec spec;
  spec.family = Family::kde;
  const ModelPtr base = fit_estimator(spec, d, 0);
  spec.outlier = OutlierSettings{};
  const ModelPtr wrapped = fit_estimator(spec, d, 0);
  // The broad sd is about 10, so integrate over +-100.
  double total = 0.0;
  const int steps = 40000;
  const double lo = -100.0, h = 200.0 / steps;
  for (int i = 0; i <= steps; ++i) {
    const std::vector<double> x{lo + i * h};
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    total += w * std::exp(wrapped->log_density(x));
    CHECK(wrapped->log_density(x) >= std::log(0.99) + base->log_density(x) - 1e-12);
  }
  CHECK(total * h == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("wrapping reduces a planted outlier's LOO score") {
  std::vector<double> v;
  Rng rng(4);
  for (int i = 0; i < 60; ++i) v.push_back(rng.normal());
  v.push_back(40.0);
  const Dataset d = column(v);
  EstimatorSpec spec;
  spec.family = Family::kde;
  const std::size_t target[1] = {60};
  const double before = loo_memorization(spec, d, 1, 0, target).m[0];
  spec.outlier = OutlierSettings{0.01, 100.0};
  const double after = loo_memorization(spec, d, 1, 0, target).m[0];
  CHECK(after < before);
  CHECK(before > 10.0);
}

TEST_CASE("dp histogram") {
  const Dataset d = uniform_column(500, 8);
  const std::vector<HistogramAxis> axes{{0.0, 1.0, 20}};

  const DpHistogram exact = fit_dp_histogram(d, axes, 1e6, 1);
  std::vector<double> counts(20, 0.0);
  for (std::size_t i = 0; i < 500; ++i) counts[*exact.bin_of(d.row(i))] += 1.0;
  for (std::size_t b = 0; b < 20; ++b)
    CHECK(std::abs(exact.masses[b] - counts[b] / 500.0) <= 1e-3);

  const DpHistogram a = fit_dp_histogram(d, axes, 1.0, 9);
  const DpHistogram b = fit_dp_histogram(d, axes, 1.0, 9);
  CHECK(a.masses == b.masses);
  CHECK_FALSE(a.masses == fit_dp_histogram(d, axes, 1.0, 10).masses);

  CHECK_THROWS_AS(fit_dp_histogram(column({0.5, 1.5}), axes, 1.0, 0), Error);
  CHECK_THROWS_AS(fit_dp_histogram(d, axes, 0.0, 0), Error);

  const std::vector<double> at_edge{1.0};
  CHECK(exact.bin_of(at_edge) == 19);
  const std::vector<double> outside{1.01};
  CHECK_FALSE(exact.bin_of(outside).has_value());
  CHECK(dp_histogram_log_density(exact, outside) == -std::numeric_limits<double>::infinity());
  const std::vector<double> mid{0.525};
  CHECK(dp_histogram_log_density(exact, mid) == doctest::Approx(std::log(exact.masses[10] / 0.05)));
}

TEST_CASE("dp histogram masses form a simplex") {
  Rng rng(20);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix x(30, 2);
    for (Eigen::Index r = 0; r < 30; ++r) {
      x(r, 0) = rng.uniform();
      x(r, 1) = rng.uniform();
    }
    const double eps = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const DpHistogram h =
        fit_dp_histogram(Dataset(x), {{0.0, 1.0, 4}, {0.0, 1.0, 3}}, eps, rng.next());
    CHECK(h.bin_count() == 12);
    double sum = 0.0;
    for (double m : h.masses) {
      CHECK(m >= 0.0);
      sum += m;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("dp bound check examples") {
  const std::vector<std::int64_t> ids{0, 1, 2};
  const DpVerdict neg = dp_bound_check(std::vector{-0.5, 0.0, -1.0}, std::vector{0.1, 0.1, 0.1},
                                       ids, 1e-3, 10);
  CHECK(neg.pass);
  const DpVerdict high = dp_bound_check(std::vector{1.5, 0.2, 0.1}, std::vector{0.01, 0.5, 0.5},
                                        ids, 1.0, 10);
  CHECK_FALSE(high.pass);
  CHECK(high.max_id == 0);
  CHECK(high.threshold == doctest::Approx(1.03));
  const DpVerdict slack = dp_bound_check(std::vector{1.02, 0.2, 0.1}, std::vector{0.02, 0.5, 0.5},
                                         ids, 1.0, 10);
  CHECK(slack.pass);
  CHECK_FALSE(slack.caveat.empty());
  CHECK_THROWS_AS(dp_bound_check(std::vector{0.0}, std::vector{0.0},
                                 std::vector<std::int64_t>{0}, 1.0, 1),
                  Error);
}

TEST_CASE("mitigation comparison") {
  const std::vector<std::int64_t> ids{0, 1, 2};
  const std::vector<std::int64_t> focus{2};
  const MitigationComparison c = compare_scores("outlier", ids, std::vector{1.0, 2.0, 9.0},
                                                std::vector{1.0, 1.5, 2.0}, focus);
  CHECK(c.max_before == 9.0);
  CHECK(c.max_after == 2.0);
  CHECK(c.focus_max_before == 9.0);
  CHECK(c.focus_max_after == 2.0);
  const MitigationComparison none = compare_scores("outlier", ids, std::vector{1.0, 2.0, 9.0},
                                                   std::vector{1.0, 1.5, 2.0});
  CHECK(std::isnan(none.focus_max_before));
}
