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


// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memaudit/commands.hpp"
#include "memaudit/error.hpp"
#include "memaudit/io.hpp"
#include "memaudit/memscore.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/models.hpp"
#include "memaudit/nn_ratio.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/report.hpp"
#include "memaudit/vae.hpp"
#include "test_support.hpp"

using namespace memaudit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string signed_fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.3g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep = "; ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// --- 1: aggregation arithmetic ------------------------------------------------

Verdict aggregation_oracle() {
  // One observation, two folds: held out once (-178), trained on once (-97).
  const FoldPlan pair = FoldPlan::from_holdouts(2, 2, 1, 0, {{0}, {1}});
  LogProbTable t(pair, {0, 1}, 0);
  t.set(0, 0, 0, -178.0);
  t.set(0, 1, 0, -97.0);
  t.set(0, 0, 1, -1.0);
  t.set(0, 1, 1, -2.0);
  const MemorizationResult r = aggregate_scores(t);
  const bool exact = r.m[0] == 81.0 && r.u[0] == -97.0 && r.v[0] == -178.0;

  // Three observations, three folds, two repetitions, values picked by hand.
  const FoldPlan plan = FoldPlan::from_holdouts(3, 3, 2, 0, {{0}, {1}, {2}, {2}, {0}, {1}});
  LogProbTable big(plan, {10, 11, 12}, 0);
  const double vals[2][3][3] = {{{-3.0, -1.0, -2.5}, {-1.5, -4.0, -0.5}, {-2.0, -1.0, -6.0}},
                                {{-1.2, -0.7, -5.0}, {-7.0, -2.2, -0.9}, {-0.3, -8.0, -1.1}}};
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < 3; ++i) big.set(l, k, i, vals[l][k][i]);
  const MemorizationResult b = aggregate_scores(big);
  auto lme = [](std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += std::exp(x);
    return std::log(s / static_cast<double>(v.size()));
  };
  const double expect_u[3] = {lme({-1.5, -2.0, -1.2, -0.3}), lme({-1.0, -1.0, -0.7, -2.2}),
                              lme({-2.5, -0.5, -0.9, -1.1})};
  const double expect_v[3] = {lme({-3.0, -7.0}), lme({-4.0, -8.0}), lme({-6.0, -5.0})};
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(b.u[i] - expect_u[i]));
    worst = std::max(worst, std::abs(b.v[i] - expect_v[i]));
    worst = std::max(worst, std::abs(b.m[i] - (expect_u[i] - expect_v[i])));
  }
  return {exact && worst <= 1e-12,
          "pair M = " + fmt(r.m[0], 17) + "; 3x3x2 table max error " + fmt(worst)};
}

// --- 2: K = n against exact leave-one-out ------------------------------------

Dataset synth_2d(std::size_t n, std::uint64_t seed) {
  SynthSpec s;
  s.n = n;
  s.seed = seed;
  return generate_synth(s).data;
}

Verdict loo_equivalence() {
  const Dataset d = synth_2d(50, 11);
  std::vector<std::string> parts;
  bool pass = true;
  EstimatorSpec kde, gauss;
  kde.family = Family::kde;
  gauss.family = Family::gaussian_mle;
  for (const EstimatorSpec& spec : {kde, gauss}) {
    const MemorizationResult kf =
        aggregate_scores(compute_logprob_table(spec, d, FoldPlan::make(50, 50, 1, 5)));
    const LooResult loo = loo_memorization(spec, d, 1, 5);
    double dm = 0.0, du = 0.0, dv = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      dm = std::max(dm, std::abs(kf.m[i] - loo.m[i]));
      du = std::max(du, std::abs(kf.u[i] - loo.u[i]));
      dv = std::max(dv, std::abs(kf.v[i] - loo.v[i]));
    }
    pass = pass && dm <= 1e-9;
    parts.push_back(std::string(to_string(spec.family)) + " max|dM| " + fmt(dm) + " (|dU| " +
                    fmt(du) + ", |dV| " + fmt(dv) + ")");
  }
  return {pass, join(parts)};
}

// --- 3: closed-form leave-one-out KDE ----------------------------------------

Verdict kde_identity() {
  const Dataset d = synth_2d(100, 12);
  const double h = 0.5;
  EstimatorSpec spec;
  spec.family = Family::kde;
  spec.bandwidth = h;
  const LooResult r = loo_memorization(spec, d, 1, 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    std::vector<double> all, rest;
    for (std::size_t j = 0; j < 100; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < 2; ++c) sq += std::pow(d.row(i)[c] - d.row(j)[c], 2);
      const double lk = -std::log(2.0 * std::numbers::pi * h * h) - sq / (2.0 * h * h);
      all.push_back(lk);
      if (j != i) rest.push_back(lk);
    }
    worst = std::max(worst, std::abs(r.m[i] - (log_mean_exp(all) - log_mean_exp(rest))));
  }
  return {worst <= 1e-9, "max |M - identity| " + fmt(worst) + " over n = 100"};
}

// --- 4: importance sampling ----------------------------------------------------

Verdict importance_oracle() {
  const auto lg = memaudit::testing::make_linear_gaussian(4, 2, 0.5, 2024);
  Rng data_rng(7);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto x = memaudit::testing::draw_linear_gaussian(lg, data_rng);
    Rng rng(1000 + i);
    const double est = importance_log_marginal(lg.model, x, 10000, rng).log_marginal;
    worst = std::max(worst, std::abs(est - linear_gaussian_log_marginal(lg.w, lg.b, lg.sigma2, x)));
  }
  return {worst <= 0.05, "max |IS - exact| " + fmt(worst) + " nats over 20 observations"};
}

// --- 5: backprop gradient -------------------------------------------------------

Verdict gradient_check() {
  Rng rng(99);
  double worst = 0.0;
  std::size_t most_params = 0;
  int nets = 0;
  for (Likelihood lk :
       {Likelihood::bernoulli, Likelihood::diagonal_gaussian, Likelihood::isotropic_gaussian}) {
    VaeSettings s;
    s.latent_dim = 1;
    s.encoder_hidden = {3};
    s.decoder_hidden = {3};
    s.likelihood = lk;
    for (int net = 0; net < 10; ++net, ++nets) {
      const VaeModel model = VaeModel::initialize(2, s, rng.next());
      most_params = std::max(most_params, model.parameter_count());
      Matrix x(4, 2), noise(4, 1);
      for (Eigen::Index r = 0; r < 4; ++r) {
        for (Eigen::Index c = 0; c < 2; ++c)
          x(r, c) = lk == Likelihood::bernoulli ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
        noise(r, 0) = rng.normal();
      }
      const ElboGradient g = elbo_gradient(model, x, noise);
      VaeModel probe = model;
      const std::vector<double> start(model.parameters().begin(), model.parameters().end());
      const auto fd = finite_diff_gradient(
          [&](std::span<const double> p) {
            probe.set_parameters(p);
            return elbo_with_noise(probe, x, noise);
          },
          start, 1e-5);
      double diff = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < fd.size(); ++j) {
        diff += (g.gradient[j] - fd[j]) * (g.gradient[j] - fd[j]);
        scale += fd[j] * fd[j];
      }
      worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12));
    }
  }
  return {worst <= 1e-4 && most_params <= 50,
          std::to_string(nets) + " nets (<= " + std::to_string(most_params) +
              " parameters), max relative error " + fmt(worst)};
}

// --- 6, 9, 11: planted outliers and duplicates ------------------------------------

SynthData planted(std::uint64_t seed) {
  SynthSpec s;
  s.n = 500;
  s.outliers = 5;
  s.duplicate_groups = 5;
  s.duplicate_multiplicity = 5;
  s.validation = 500;
  s.seed = seed;
  return generate_synth(s);
}

EstimatorSpec study_kde() {
  EstimatorSpec s;
  s.family = Family::kde;
  s.bandwidth = 0.1;
  return s;
}

EstimatorSpec study_vae() {
  return estimator_spec_from_json(json{{"family", "vae"},
                                       {"epochs", 100},
                                       {"latent_dim", 2},
                                       {"encoder_hidden", {32}},
                                       {"decoder_hidden", {32}},
                                       {"likelihood", "isotropic-gaussian"},
                                       {"importance_samples", 128}});
}

const MemorizationResult& study_scores(const std::string& name, const EstimatorSpec& spec,
                                       std::uint64_t seed) {
  static std::map<std::pair<std::string, std::uint64_t>, MemorizationResult> cache;
  const auto key = std::make_pair(name, seed);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const SynthData g = planted(seed);
    const FoldPlan plan = FoldPlan::make(g.data.size(), 10, 10, seed);
    it = cache.emplace(key, aggregate_scores(compute_logprob_table(spec, g.data, plan))).first;
  }
  return it->second;
}

Verdict planted_mechanism() {
  bool pass = true;
  std::vector<std::string> parts;
  for (const auto& [name, spec] : {std::pair{std::string("kde"), study_kde()},
                                   std::pair{std::string("vae"), study_vae()}}) {
    for (std::uint64_t seed : kSeeds) {
      const SynthData g = planted(seed);
      const MemorizationResult& r = study_scores(name, spec, seed);
      const auto top = top_fraction(r, 0.05);
      const std::set<std::int64_t> top_set(top.begin(), top.end());
      std::size_t outliers_top = 0;
      for (std::int64_t o : g.outlier_ids) outliers_top += top_set.count(o);
      const double med = median(r.valid_scores());
      std::size_t dup_below = 0, dups = 0;
      for (const auto& group : g.duplicate_groups)
        for (std::int64_t id : group) {
          ++dups;
          dup_below += r.m[static_cast<std::size_t>(id)] < med;
        }
      pass = pass && outliers_top == g.outlier_ids.size() && dup_below == dups;
      parts.push_back(name + " seed " + std::to_string(seed) + ": outliers in top 5% " +
                      std::to_string(outliers_top) + "/" + std::to_string(g.outlier_ids.size()) +
                      ", duplicates below median " + std::to_string(dup_below) + "/" +
                      std::to_string(dups) + " (median " + fmt(med, 3) + ")");
    }
  }
  return {pass, join(parts)};
}

Verdict decorrelation() {
  bool pass = true;
  std::vector<std::string> parts;
  double recompute = 0.0;
  for (const auto& [name, spec] : {std::pair{std::string("kde"), study_kde()},
                                   std::pair{std::string("vae"), study_vae()}}) {
    for (std::uint64_t seed : kSeeds) {
      const SynthData g = planted(seed);
      const MemorizationResult& r = study_scores(name, spec, seed);
      const ModelPtr model =
          fit_estimator(spec, g.data, derive_seed(seed, SeedStream::sampling, 0));
      Rng rng(derive_seed(seed, SeedStream::sampling, 1));
      const Dataset samples(model->sample(rng, g.validation->size()), "samples");
      const DistanceRatios d = distance_ratio(g.data, *g.validation, samples);
      const RatioReport rep = ratio_report(d, r, 1.0, 0.05);
      std::vector<std::vector<double>> members(rep.bins.size());
      for (std::size_t i = 0; i < rep.bin_index.size(); ++i)
        if (rep.bin_index[i] >= 0)
          members[static_cast<std::size_t>(rep.bin_index[i])].push_back(d.rho[i]);
      for (std::size_t b = 0; b < rep.bins.size(); ++b) {
        recompute = std::max(recompute, std::abs(mean(members[b]) - rep.bins[b].mean));
        if (members[b].size() >= 2) {
          const double se =
              std::sqrt(sample_variance(members[b]) / static_cast<double>(members[b].size()));
          recompute = std::max(recompute, std::abs(se - rep.bins[b].std_error));
        }
      }
      // Diagnostic only: the same correlation without the planted outliers.
      const std::set<std::int64_t> planted_ids(g.outlier_ids.begin(), g.outlier_ids.end());
      std::vector<double> rho_in, m_in;
      for (std::size_t i = 0; i < d.rho.size(); ++i)
        if (!planted_ids.count(d.ids[i]) && !d.infinite[i]) {
          rho_in.push_back(d.rho[i]);
          m_in.push_back(r.m[i]);
        }
      pass = pass && std::abs(rep.pearson_r) < 0.3;
      parts.push_back(name + " seed " + std::to_string(seed) + ": r = " + fmt(rep.pearson_r, 3) +
                      " (" + fmt(pearson(rho_in, m_in), 3) + " without planted outliers, " +
                      std::to_string(rep.infinite_ids.size()) + " infinite rho)");
    }
  }
  pass = pass && recompute <= 1e-12;
  parts.push_back("binned recompute error " + fmt(recompute));
  return {pass, join(parts)};
}

Verdict outlier_mitigation() {
  bool pass = true;
  std::vector<std::string> parts;
  EstimatorSpec wrapped = study_kde();
  wrapped.outlier = OutlierSettings{};
  for (std::uint64_t seed : kSeeds) {
    const SynthData g = planted(seed);
    const MemorizationResult& before = study_scores("kde", study_kde(), seed);
    const MemorizationResult& after = study_scores("kde+outlier", wrapped, seed);
    double b = -INFINITY, a = -INFINITY;
    for (std::int64_t o : g.outlier_ids) {
      b = std::max(b, before.m[static_cast<std::size_t>(o)]);
      a = std::max(a, after.m[static_cast<std::size_t>(o)]);
    }
    pass = pass && a <= 0.5 * b;
    parts.push_back("seed " + std::to_string(seed) + ": max outlier M " + fmt(b) + " -> " + fmt(a));
  }
  return {pass, join(parts)};
}

// --- 7, 8: learning rate and training-time traces ---------------------------------

const std::vector<std::size_t> kTraceEpochs{0, 1, 25, 50, 75, 100};

const QuantileTrace& image_trace(double lr, std::uint64_t seed) {
  static std::map<std::pair<double, std::uint64_t>, QuantileTrace> cache;
  const auto key = std::make_pair(lr, seed);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SynthSpec s;
    s.kind = SynthKind::image_prototypes;
    s.n = 2000;
    s.prototypes = 100;
    s.flip_probability = 0.15;
    s.seed = seed;
    const Dataset data = generate_synth(s).data;
    EstimatorSpec spec = estimator_spec_from_json(json{{"family", "vae"},
                                                       {"latent_dim", 8},
                                                       {"encoder_hidden", {128}},
                                                       {"decoder_hidden", {128}},
                                                       {"likelihood", "bernoulli"},
                                                       {"importance_samples", 32},
                                                       {"batch_size", 32},
                                                       {"epochs", 100}});
    spec.vae.learning_rate = lr;
    const FoldPlan plan = FoldPlan::make(data.size(), 5, 1, seed);
    it = cache.emplace(key, quantile_trace(spec, data, plan, kTraceEpochs)).first;
  }
  return it->second;
}

Verdict learning_rate_direction() {
  std::size_t wins = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed : kSeeds) {
    const double fast = image_trace(1e-3, seed).quantiles.back()[0];
    const double slow = image_trace(1e-4, seed).quantiles.back()[0];
    wins += slow < fast;
    parts.push_back("seed " + std::to_string(seed) + ": q95 " + fmt(fast, 3) + " at 1e-3, " +
                    fmt(slow, 3) + " at 1e-4");
  }
  return {wins == kSeeds.size(), join(parts)};
}

Verdict training_growth() {
  std::size_t ok = 0;
  std::vector<std::string> parts;
  for (std::uint64_t seed : kSeeds) {
    const QuantileTrace& t = image_trace(1e-3, seed);
    // Checkpoints: 0, 1, E/4, E/2, 3E/4, E.
    bool seed_ok = true;
    std::string line = "seed " + std::to_string(seed) + ":";
    for (std::size_t q = 0; q < t.levels.size(); ++q) {
      const double at1 = t.quantiles[1][q], last = t.quantiles[5][q];
      const double first_quarter = t.quantiles[2][q] - t.quantiles[0][q];
      const double last_quarter = t.quantiles[5][q] - t.quantiles[4][q];
      seed_ok = seed_ok && last > at1 && last_quarter < first_quarter;
      line += " q" + fmt(t.levels[q]) + " " + fmt(at1, 3) + " -> " + fmt(last, 3) +
              " (first quarter " + signed_fmt(first_quarter) + ", last " +
              signed_fmt(last_quarter) + ")";
    }
    ok += seed_ok;
    parts.push_back(line);
  }
  return {ok >= 2, join(parts)};
}

// --- 10: DP histogram bound -------------------------------------------------------

Verdict dp_bound() {
  SynthSpec s;
  s.n = 500;
  s.dim = 1;
  s.seed = 21;
  const Dataset d = generate_synth(s).data;
  EstimatorSpec spec;
  spec.family = Family::dp_histogram;
  spec.histogram.axes = {{-8.0, 8.0, 32}};
  spec.histogram.epsilon = 1.0;
  const LooResult loo = loo_memorization(spec, d, 200, 21);
  const DpVerdict v = dp_bound_check(loo.m, *loo.m_se, loo.ids, 1.0, 200);

  const DpHistogram exact = fit_dp_histogram(d, spec.histogram.axes, 1e6, 22);
  std::vector<double> counts(exact.bin_count(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) counts[*exact.bin_of(d.row(i))] += 1.0;
  double worst = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b)
    worst = std::max(worst, std::abs(exact.masses[b] - counts[b] / static_cast<double>(d.size())));
  return {v.pass && worst <= 1e-3,
          "max LOO M " + fmt(v.max_score) + " (SE " + fmt(v.max_std_error) + ", threshold " +
              fmt(v.threshold) + "); eps 1e6 max mass error " + fmt(worst)};
}

// --- 12: infrastructure --------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    files[e.path().filename().string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

Verdict infrastructure() {
  std::vector<std::string> parts;
  bool pass = true;

  // Report round-trip on a real audit.
  const Dataset d = synth_2d(60, 4);
  EstimatorSpec kde;
  kde.family = Family::kde;
  ReportFile rep;
  rep.provenance.command = "memscore";
  rep.plan = FoldPlan::make(60, 5, 2, 4);
  rep.table = compute_logprob_table(kde, d, *rep.plan);
  rep.memorization = aggregate_scores(*rep.table);
  const std::string text = serialize_report(rep);
  const bool round_trip = serialize_report(parse_report(text)) == text &&
                          parse_report(text).memorization->m == rep.memorization->m;
  pass = pass && round_trip;
  parts.push_back(std::string("report round-trip ") + (round_trip ? "exact" : "differs"));

  // Every command with one and four workers.
  const fs::path root = fs::temp_directory_path() / "memaudit-acceptance";
  fs::remove_all(root);
  const json source{{"source", "synth"},
                    {"synth", {{"n", 40}, {"outliers", 2}, {"duplicate_groups", 1}, {"validation", 20}, {"seed", 3}}}};
  const json small_vae{{"family", "vae"},         {"epochs", 3},
                       {"latent_dim", 1},         {"encoder_hidden", {8}},
                       {"decoder_hidden", {8}},   {"likelihood", "isotropic-gaussian"},
                       {"importance_samples", 8}, {"batch_size", 16}};
  const json dp{{"family", "dp-histogram"},
                {"axes", {{{"lo", -60.0}, {"hi", 60.0}, {"bins", 5}}, {{"lo", -60.0}, {"hi", 60.0}, {"bins", 5}}}}};
  const std::vector<std::pair<std::string, json>> runs{
      {"memscore", {{"dataset", source}, {"folds", 4}, {"repetitions", 2}}},
      {"memscore", {{"dataset", source}, {"estimator", small_vae}, {"folds", 4}, {"repetitions", 1}}},
      {"loo", {{"dataset", source}, {"estimator", {{"family", "gmm"}}}, {"loo", {{"repetitions", 2}, {"targets", {0, 39}}}}}},
      {"nn-ratio", {{"dataset", source}, {"folds", 4}, {"repetitions", 1}}},
      {"trace", {{"dataset", source}, {"estimator", small_vae}, {"folds", 2}, {"repetitions", 1}}},
      {"mitigate", {{"dataset", source}, {"folds", 4}, {"repetitions", 1}}},
      {"mitigate", {{"dataset", source}, {"estimator", dp}, {"mitigate", {{"strategy", "dp"}, {"repetitions", 2}}}}},
      {"synth", {{"dataset", source}}}};
  std::size_t stable = 0;
  std::ostringstream log;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::map<std::string, std::string> outputs[2];
    bool ok = true;
    for (std::size_t w = 0; w < 2; ++w) {
      CommandOverrides o;
      o.workers = w == 0 ? 1 : 4;
      o.out = (root / (std::to_string(r) + "-" + std::to_string(w))).string();
      o.quiet = true;
      ok = ok && run_command(runs[r].first, runs[r].second, o, log) == kExitOk;
      if (ok) outputs[w] = snapshot(*o.out);
    }
    stable += ok && !outputs[0].empty() && outputs[0] == outputs[1];
  }
  fs::remove_all(root);
  pass = pass && stable == runs.size();
  parts.push_back("worker-count determinism " + std::to_string(stable) + "/" +
                  std::to_string(runs.size()) + " runs");

  // Log-space mean at -1e4.
  const std::vector<double> deep{-1e4, -1e4 - 1.0, -1e4 - 2.0};
  const double expect = -1e4 + std::log((1.0 + std::exp(-1.0) + std::exp(-2.0)) / 3.0);
  const double err = std::abs(log_mean_exp(deep) - expect);
  pass = pass && err <= 1e-9;
  parts.push_back("log_mean_exp at -1e4 error " + fmt(err));

  // Handcrafted IDX.
  std::vector<std::uint8_t> idx{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0, 4};
  for (int k = 0; k < 32; ++k) idx.push_back(static_cast<std::uint8_t>(k == 7 ? 255 : k));
  const Dataset images = parse_idx_images(idx);
  bool idx_ok = images.size() == 2 && images.dim() == 16 && images.row(0)[7] == 1.0 &&
                images.row(1)[0] == 16.0 / 255.0;
  idx[3] = 1;
  try {
    parse_idx_images(idx);
    idx_ok = false;
  } catch (const Error& e) {
    idx_ok = idx_ok && e.code() == ErrorCode::format;
  }
  pass = pass && idx_ok;
  parts.push_back(std::string("IDX parse and magic check ") + (idx_ok ? "ok" : "wrong"));
  if (!pass && !log.str().empty()) parts.push_back("log: " + log.str());
  return {pass, join(parts)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "aggregation oracle", aggregation_oracle},
      {2, "K = n equals exact LOO", loo_equivalence},
      {3, "KDE leave-one-out identity", kde_identity},
      {4, "importance sampling oracle", importance_oracle},
      {5, "gradient check", gradient_check},
      {6, "planted outliers and duplicates", planted_mechanism},
      {7, "lower learning rate, smaller q95", learning_rate_direction},
      {8, "quantile growth slows", training_growth},
      {9, "distance ratio decorrelation", decorrelation},
      {10, "DP histogram bound", dp_bound},
      {11, "outlier component mitigation", outlier_mitigation},
      {12, "infrastructure", infrastructure},
  };
  std::set<int> wanted;
  for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %2d  %-34s %s  %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL",
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
