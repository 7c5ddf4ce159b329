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
#include "memaudit/models.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/vae.hpp"
#include "test_support.hpp"

using namespace memaudit;
using memaudit::testing::draw_linear_gaussian;
using memaudit::testing::make_linear_gaussian;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

VaeSettings tiny(Likelihood likelihood) {
  VaeSettings s;
  s.latent_dim = 1;
  s.encoder_hidden = {3};
  s.decoder_hidden = {3};
  s.likelihood = likelihood;
  return s;
}

double normwise_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    diff += (a[j] - b[j]) * (a[j] - b[j]);
    scale += b[j] * b[j];
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

Dataset two_clusters(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    x(r, 0) = (r % 2 ? 2.0 : -2.0) + 0.5 * rng.normal();
    x(r, 1) = 0.5 * rng.normal();
  }
  return Dataset(x);
}

}  // namespace

TEST_CASE("closed-form KL examples") {
  CHECK(kl_to_standard_normal(std::vector{0.0}, std::vector{0.0}) == 0.0);
  CHECK(kl_to_standard_normal(std::vector{1.0}, std::vector{0.0}) == doctest::Approx(0.5));
  CHECK(kl_to_standard_normal(std::vector{0.0, 0.0}, std::vector{0.0, 0.0}) == 0.0);
}

TEST_CASE("closed-form KL agrees with a Monte-Carlo estimate") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> mu{2.0 * rng.normal(), rng.normal()};
    const std::vector<double> log_sd{0.5 * rng.normal(), 0.5 * rng.normal()};
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double log_q = 0.0, log_p = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double e = rng.normal();
        const double z = mu[j] + std::exp(log_sd[j]) * e;
        log_q += -0.5 * (e * e + kLog2Pi) - log_sd[j];
        log_p += -0.5 * (z * z + kLog2Pi);
      }
      sum += log_q - log_p;
      sq += (log_q - log_p) * (log_q - log_p);
    }
    const double m = sum / n;
    const double se = std::sqrt((sq / n - m * m) / n);
    CHECK(std::abs(kl_to_standard_normal(mu, log_sd) - m) <= 3.0 * se);
  }
}

TEST_CASE("ELBO backprop matches finite differences") {
  Rng rng(2024);
  for (Likelihood lk : {Likelihood::bernoulli, Likelihood::diagonal_gaussian,
                        Likelihood::isotropic_gaussian}) {
    for (int net = 0; net < 10; ++net) {
      VaeModel model = VaeModel::initialize(2, tiny(lk), rng.next());
      REQUIRE(model.parameter_count() <= 50);
      Matrix x(4, 2);
      for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 2; ++c)
          x(r, c) = lk == Likelihood::bernoulli ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
      Matrix noise(4, 1);
      for (Eigen::Index r = 0; r < 4; ++r) noise(r, 0) = rng.normal();

      const ElboGradient g = elbo_gradient(model, x, noise);
      CHECK(g.elbo == doctest::Approx(elbo_with_noise(model, x, noise)).epsilon(1e-12));
      const std::vector<double> start(model.parameters().begin(), model.parameters().end());
      VaeModel probe = model;
      const auto fd = finite_diff_gradient(
          [&](std::span<const double> p) {
            probe.set_parameters(p);
            return elbo_with_noise(probe, x, noise);
          },
          start, 1e-5);
      CAPTURE(to_string(lk));
      CAPTURE(net);
      CHECK(normwise_relative_error(g.gradient, fd) <= 1e-4);
    }
  }
}

TEST_CASE("linear-Gaussian marginal examples") {
  Matrix w = Matrix::Zero(2, 1);
  Vector b(2);
  b << 0.5, -1.0;
  GaussianParams iso;
  iso.mean = b;
  iso.variances = Vector::Constant(2, 0.7);
  const std::vector<double> x{0.2, 0.4};
  CHECK(linear_gaussian_log_marginal(w, b, 0.7, x) ==
        doctest::Approx(gaussian_log_density(iso, x)).epsilon(1e-13));

  Matrix one = Matrix::Ones(1, 1);
  CHECK(linear_gaussian_log_marginal(one, Vector::Zero(1), 1.0, std::vector{0.0}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 2.0)).epsilon(1e-14));
}

TEST_CASE("linear-Gaussian marginal agrees with quadrature over z") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix w(2, 1);
    w << rng.normal(), rng.normal();
    Vector b(2);
    b << rng.normal(), rng.normal();
    const double s2 = 0.3 + rng.uniform();
    const std::vector<double> x{rng.normal(), rng.normal()};
    const int steps = 4000;
    const double lo = -10.0, hi = 10.0, h = (hi - lo) / steps;
    double total = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double z = lo + i * h;
      double log_lik = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double r = x[static_cast<std::size_t>(j)] - (w(j, 0) * z + b(j));
        log_lik += -0.5 * (std::log(2.0 * std::numbers::pi * s2) + r * r / s2);
      }
      const double weight = (i == 0 || i == steps) ? 0.5 : 1.0;
      total += weight * std::exp(log_lik - 0.5 * (z * z + kLog2Pi));
    }
    CHECK(linear_gaussian_log_marginal(w, b, s2, x) ==
          doctest::Approx(std::log(total * h)).epsilon(1e-3));
  }
}

TEST_CASE("importance sampling recovers the linear-Gaussian marginal") {
  const auto lg = make_linear_gaussian(4, 2, 0.5, 77);
  Rng data_rng(78);
  for (int i = 0; i < 5; ++i) {
    const auto x = draw_linear_gaussian(lg, data_rng);
    Rng rng(100 + static_cast<std::uint64_t>(i));
    const auto est = importance_log_marginal(lg.model, x, 10000, rng);
    CHECK(std::abs(est.log_marginal - linear_gaussian_log_marginal(lg.w, lg.b, lg.sigma2, x)) <
          0.05);
  }
  // A mismatched encoder still converges, with a visible error estimate.
  const auto loose = make_linear_gaussian(4, 2, 0.5, 77, false);
  Rng data2(79);
  const auto x = draw_linear_gaussian(loose, data2);
  Rng rng(3);
  const auto est = importance_log_marginal(loose.model, x, 20000, rng);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.log_marginal - linear_gaussian_log_marginal(loose.w, loose.b, 0.5, x)) <
        0.05);
}

TEST_CASE("one importance sample is one draw of the ELBO integrand") {
  const auto lg = make_linear_gaussian(3, 1, 0.8, 4, false);
  const std::vector<double> x{0.3, -0.2, 1.1};
  Rng a(9), b(9);
  const double is1 = importance_log_marginal(lg.model, x, 1, a).log_marginal;
  const double eps = b.normal();
  const Matrix row = Eigen::Map<const Matrix>(x.data(), 1, 3);
  const auto enc = lg.model.encode(row);
  const double sd = std::exp(enc.log_sd(0, 0));
  Matrix z(1, 1);
  z(0, 0) = enc.mean(0, 0) + sd * eps;
  const double ll = lg.model.log_likelihood(row, lg.model.decode(z))(0);
  const double log_p = -0.5 * (z(0, 0) * z(0, 0) + kLog2Pi);
  const double log_q = -0.5 * (eps * eps + kLog2Pi) - std::log(sd);
  CHECK(is1 == doctest::Approx(ll + log_p - log_q).epsilon(1e-12));
}

TEST_CASE("ELBO respects the Jensen bound") {
  const auto lg = make_linear_gaussian(3, 2, 0.4, 21, false);
  Rng data_rng(22);
  for (int i = 0; i < 5; ++i) {
    const auto x = draw_linear_gaussian(lg, data_rng);
    Rng rng(200 + static_cast<std::uint64_t>(i));
    std::vector<double> draws;
    for (int k = 0; k < 2000; ++k) draws.push_back(elbo_estimate(lg.model, x, 1, rng));
    const double se = std::sqrt(sample_variance(draws) / static_cast<double>(draws.size()));
    CHECK(mean(draws) <= linear_gaussian_log_marginal(lg.w, lg.b, lg.sigma2, x) + 3.0 * se);
  }
}

TEST_CASE("importance estimate grows in expectation with N") {
  const auto lg = make_linear_gaussian(3, 2, 0.4, 31, false);
  Rng data_rng(32);
  const auto x = draw_linear_gaussian(lg, data_rng);
  std::vector<double> means;
  for (std::size_t n : {1, 4, 32, 256}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      Rng rng(seed);
      total += importance_log_marginal(lg.model, x, n, rng).log_marginal;
    }
    means.push_back(total / 300.0);
  }
  for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] >= means[i - 1]);
  CHECK(means.back() <= linear_gaussian_log_marginal(lg.w, lg.b, lg.sigma2, x) + 0.01);
}

TEST_CASE("samples") {
  for (Likelihood lk : {Likelihood::bernoulli, Likelihood::diagonal_gaussian,
                        Likelihood::isotropic_gaussian}) {
    const VaeModel m = VaeModel::initialize(5, tiny(lk), 8);
    Rng a(1), b(1);
    const Matrix s = vae_sample(m, a, 20);
    CHECK(s.rows() == 20);
    CHECK(s.cols() == 5);
    CHECK(s == vae_sample(m, b, 20));
    if (lk == Likelihood::bernoulli)
      CHECK(((s.array() == 0.0) || (s.array() == 1.0)).all());
  }
}

TEST_CASE("training") {
  EstimatorSpec spec;
  spec.family = Family::vae;
  spec.vae.encoder_hidden = {16};
  spec.vae.decoder_hidden = {16};
  spec.vae.latent_dim = 2;
  const Dataset data = two_clusters(200, 3);

  SUBCASE("zero epochs returns the seeded initialization") {
    spec.epochs = 0;
    const auto r = vae_train(data, spec, 11);
    const VaeModel init = VaeModel::initialize(2, spec.vae, derive_seed(11, SeedStream::initialization));
    CHECK(r.model == init);
    CHECK(r.epoch_elbo.empty());
  }
  SUBCASE("deterministic given the seed") {
    spec.epochs = 3;
    CHECK(vae_train(data, spec, 5).model == vae_train(data, spec, 5).model);
    CHECK_FALSE(vae_train(data, spec, 5).model == vae_train(data, spec, 6).model);
  }
  SUBCASE("ELBO improves over 50 epochs") {
    spec.epochs = 50;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto r = vae_train(two_clusters(200, seed), spec, seed);
      REQUIRE(r.epoch_elbo.size() == 50);
      CHECK(r.epoch_elbo.back() > r.epoch_elbo.front());
    }
  }
  SUBCASE("checkpoints fire at the requested epochs") {
    spec.epochs = 4;
    std::vector<std::size_t> seen;
    VaeTrainOptions opts;
    opts.checkpoints = {0, 2, 4};
    opts.on_checkpoint = [&](std::size_t e, const VaeModel&) { seen.push_back(e); };
    vae_train(data, spec, 1, opts);
    CHECK(seen == std::vector<std::size_t>{0, 2, 4});
  }
  SUBCASE("non-finite loss aborts") {
    spec.epochs = 1;
    Matrix huge = Matrix::Constant(10, 2, 1e300);
    try {
      vae_train(Dataset(huge), spec, 1);
      FAIL("expected a compute error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::compute);
    }
  }
}

TEST_CASE("VAE density model is deterministic per evaluation seed") {
  EstimatorSpec spec;
  spec.family = Family::vae;
  spec.epochs = 2;
  spec.vae.encoder_hidden = {8};
  spec.vae.decoder_hidden = {8};
  spec.vae.importance_samples = 16;
  const Dataset data = two_clusters(64, 1);
  const ModelPtr m = fit_estimator(spec, data, 4);
  CHECK(m->log_density(data.row(0), 7) == m->log_density(data.row(0), 7));
  CHECK(std::isfinite(m->log_density(data.row(0), 7)));
  CHECK(fit_estimator(spec, data, 4)->log_density(data.row(3), 2) == m->log_density(data.row(3), 2));
}
