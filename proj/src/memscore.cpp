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


#include "memaudit/memscore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "memaudit/error.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/random.hpp"
#include "memaudit/vae.hpp"

namespace memaudit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Progress callback wrapper that serializes calls and counts completions.
class ProgressCounter {
 public:
  ProgressCounter(const ProgressSink& sink, std::size_t total) : sink_(sink), total_(total) {}
  void tick() {
    if (!sink_) return;
    std::lock_guard lock(mutex_);
    sink_(++done_, total_);
  }

 private:
  const ProgressSink& sink_;
  std::size_t total_;
  std::size_t done_ = 0;
  std::mutex mutex_;
};

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_double);
}

ModelPtr maybe_wrap(const EstimatorSpec& spec, const Dataset& train, ModelPtr base) {
  if (!spec.outlier) return base;
  return std::make_shared<OutlierMixtureModel>(
      std::move(base), default_broad_component(train, spec.outlier->variance_factor),
      spec.outlier->weight);
}

}  // namespace

std::uint64_t fold_fit_seed(std::uint64_t master, std::size_t rep, std::size_t fold) {
  return derive_seed(master, SeedStream::fold_fit, rep, fold);
}

std::uint64_t evaluation_seed(std::uint64_t fit_seed, std::int64_t id) {
  return derive_seed(fit_seed, SeedStream::evaluation, static_cast<std::uint64_t>(id));
}

// --- table -------------------------------------------------------------------

LogProbTable::LogProbTable(FoldPlan plan, std::vector<std::int64_t> ids, std::uint64_t spec_hash)
    : plan_(std::move(plan)), ids_(std::move(ids)), spec_hash_(spec_hash) {
  require(ids_.size() == plan_.n(), ErrorCode::invalid_argument,
          "table ids do not match the fold plan size");
  entries_.assign(plan_.repetitions() * plan_.folds() * plan_.n(), kNaN);
}

void LogProbTable::set_entries(std::vector<double> entries) {
  require(entries.size() == entries_.size(), ErrorCode::invalid_argument,
          "table entry count must be L*K*n");
  entries_ = std::move(entries);
}

void LogProbTable::add_failure(FitFailure failure) {
  failures_.push_back(std::move(failure));
  std::sort(failures_.begin(), failures_.end(), [](const FitFailure& a, const FitFailure& b) {
    return std::tie(a.rep, a.fold) < std::tie(b.rep, b.fold);
  });
}

bool LogProbTable::operator==(const LogProbTable& other) const {
  if (!(plan_ == other.plan_) || ids_ != other.ids_ || spec_hash_ != other.spec_hash_ ||
      failures_.size() != other.failures_.size())
    return false;
  for (std::size_t f = 0; f < failures_.size(); ++f) {
    const auto& a = failures_[f];
    const auto& b = other.failures_[f];
    if (a.rep != b.rep || a.fold != b.fold || a.message != b.message) return false;
  }
  return same_doubles(entries_, other.entries_);
}

LogProbTable compute_logprob_table(const EstimatorSpec& spec, const Dataset& data,
                                   const FoldPlan& plan, const AuditOptions& options) {
  data.require_auditable();
  require(plan.n() == data.size(), ErrorCode::invalid_plan,
          "fold plan size " + std::to_string(plan.n()) + " does not match dataset size " +
              std::to_string(data.size()));
  LogProbTable table(plan, data.ids(), spec_hash(spec));
  const std::size_t folds = plan.folds();
  const std::size_t jobs = plan.repetitions() * folds;
  ProgressCounter progress(options.progress, jobs);
  std::mutex failure_mutex;

  parallel_for(jobs, options.workers, [&](std::size_t job) {
    const std::size_t rep = job / folds;
    const std::size_t fold = job % folds;
    const std::uint64_t seed = fold_fit_seed(plan.seed(), rep, fold);
    try {
      const Dataset train = subset(data, complement(data.size(), plan.holdout(rep, fold)));
      const ModelPtr model = fit_estimator(spec, train, seed);
      std::vector<double> column(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        column[i] = model->log_density(data.row(i), evaluation_seed(seed, data.ids()[i]));
        require(!std::isnan(column[i]), ErrorCode::compute,
                "log-density is NaN for id " + std::to_string(data.ids()[i]));
      }
      for (std::size_t i = 0; i < data.size(); ++i) table.set(rep, fold, i, column[i]);
    } catch (const std::exception& e) {
      std::lock_guard lock(failure_mutex);
      table.add_failure({rep, fold, e.what()});
    }
    progress.tick();
  });
  return table;
}

// --- aggregation -------------------------------------------------------------

ScoreSummary summarize(std::span<const double> scores) {
  ScoreSummary s;
  s.count = scores.size();
  if (scores.empty()) return s;
  s.mean = mean(scores);
  s.median = median(scores);
  s.skewness = skewness(scores);
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  s.min = *lo;
  s.max = *hi;
  for (double level : kSummaryLevels) s.percentiles.emplace_back(level, quantile(scores, level));
  return s;
}

std::vector<double> MemorizationResult::valid_scores() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!excluded[i]) out.push_back(m[i]);
  return out;
}

std::vector<std::int64_t> MemorizationResult::valid_ids() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!excluded[i]) out.push_back(ids[i]);
  return out;
}

bool MemorizationResult::operator==(const MemorizationResult& other) const {
  return ids == other.ids && same_doubles(u, other.u) && same_doubles(v, other.v) &&
         same_doubles(m, other.m) && same_doubles(heldout_spread, other.heldout_spread) &&
         excluded == other.excluded && spec_hash == other.spec_hash && plan == other.plan;
}

MemorizationResult aggregate_scores(const LogProbTable& table, bool force) {
  if (table.partial() && !force) {
    std::string folds;
    for (const FitFailure& f : table.failures())
      folds += " (rep " + std::to_string(f.rep) + ", fold " + std::to_string(f.fold) + ")";
    fail(ErrorCode::compute, "log-probability table is partial; failed fits:" + folds);
  }
  const FoldPlan& plan = table.plan();
  const std::size_t n = table.n();
  MemorizationResult r;
  r.ids = table.ids();
  r.u.resize(n);
  r.v.resize(n);
  r.m.resize(n);
  r.heldout_spread.resize(n);
  r.excluded.assign(n, false);
  r.spec_hash = table.spec_hash();
  r.plan = plan;

  std::vector<double> in;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    in.clear();
    out.clear();
    for (std::size_t rep = 0; rep < plan.repetitions(); ++rep)
      for (std::size_t fold = 0; fold < plan.folds(); ++fold)
        if (const double x = table.at(rep, fold, i); !std::isnan(x))
          (plan.is_held_out(rep, fold, i) ? out : in).push_back(x);
    // Under a forced partial table, failed fits simply drop out; an
    // observation is unusable only when one of its multisets is empty.
    if (in.empty() || out.empty()) {
      r.excluded[i] = true;
      r.u[i] = r.v[i] = r.m[i] = r.heldout_spread[i] = kNaN;
      continue;
    }
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    r.u[i] = log_mean_exp(in);
    r.v[i] = log_mean_exp(out);
    r.m[i] = r.u[i] - r.v[i];
    r.heldout_spread[i] = out.size() >= 2 ? std::sqrt(sample_variance(out)) : kNaN;
  }
  r.summary = summarize(r.valid_scores());
  return r;
}

void summarize_by_label(MemorizationResult& result, std::span<const int> labels) {
  require(labels.size() == result.ids.size(), ErrorCode::invalid_argument,
          "labels are not aligned with the scores");
  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!result.excluded[i]) groups[labels[i]].push_back(result.m[i]);
  result.by_label.clear();
  for (const auto& [label, scores] : groups) result.by_label.push_back({label, summarize(scores)});
}

std::vector<std::int64_t> top_fraction(const MemorizationResult& result, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::invalid_argument,
          "fraction must lie in (0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < result.ids.size(); ++i)
    if (!result.excluded[i]) order.push_back(i);
  const auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(order.size()) - 1e-9));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (result.m[a] != result.m[b]) return result.m[a] > result.m[b];
    return result.ids[a] < result.ids[b];
  });
  std::vector<std::int64_t> ids;
  for (std::size_t j = 0; j < count && j < order.size(); ++j) ids.push_back(result.ids[order[j]]);
  return ids;
}

// --- exact leave-one-out -----------------------------------------------------

LooResult loo_memorization(const EstimatorSpec& spec, const Dataset& data, std::size_t repetitions,
                           std::uint64_t seed, std::span<const std::size_t> targets,
                           const AuditOptions& options) {
  data.require_auditable();
  require(repetitions >= 1, ErrorCode::invalid_argument, "T must be >= 1");
  std::vector<std::size_t> positions(targets.begin(), targets.end());
  if (positions.empty()) {
    positions.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) positions[i] = i;
  }
  for (std::size_t p : positions)
    require(p < data.size(), ErrorCode::invalid_argument, "LOO target out of range");

  const bool deterministic = is_deterministic(spec.family);
  // Deterministic fits are identical across repeats, so one fit stands in for all T.
  const std::size_t fits_per_term = deterministic ? 1 : repetitions;
  const std::size_t targets_n = positions.size();

  std::vector<double> full(targets_n * fits_per_term);
  std::vector<double> held(targets_n * fits_per_term);
  const std::size_t jobs = fits_per_term * (1 + targets_n);
  ProgressCounter progress(options.progress, jobs);

  parallel_for(jobs, options.workers, [&](std::size_t job) {
    if (job < fits_per_term) {
      const std::size_t t = job;
      const std::uint64_t fit_seed = derive_seed(seed, SeedStream::loo_full_fit, t);
      const ModelPtr model = fit_estimator(spec, data, fit_seed);
      for (std::size_t j = 0; j < targets_n; ++j) {
        const std::int64_t id = data.ids()[positions[j]];
        full[j * fits_per_term + t] =
            model->log_density(data.row(positions[j]), evaluation_seed(fit_seed, id));
      }
    } else {
      const std::size_t j = (job - fits_per_term) / fits_per_term;
      const std::size_t t = (job - fits_per_term) % fits_per_term;
      const std::size_t pos = positions[j];
      const std::int64_t id = data.ids()[pos];
      const std::uint64_t fit_seed =
          derive_seed(seed, SeedStream::loo_heldout_fit, static_cast<std::uint64_t>(id), t);
      const std::size_t excluded[1] = {pos};
      const Dataset train = subset(data, complement(data.size(), excluded));
      const ModelPtr model = fit_estimator(spec, train, fit_seed);
      held[j * fits_per_term + t] = model->log_density(data.row(pos), evaluation_seed(fit_seed, id));
    }
    progress.tick();
  });

  LooResult r;
  r.repetitions = repetitions;
  r.seed = seed;
  r.spec_hash = spec_hash(spec);
  const bool with_errors = repetitions >= 2;
  if (with_errors) {
    r.u_se.emplace();
    r.v_se.emplace();
    r.m_se.emplace();
  } else if (!deterministic) {
    r.warnings.push_back("T = 1 on a stochastic family: Monte-Carlo errors are not available");
  }
  for (std::size_t j = 0; j < targets_n; ++j) {
    std::vector<double> a(full.begin() + static_cast<std::ptrdiff_t>(j * fits_per_term),
                          full.begin() + static_cast<std::ptrdiff_t>((j + 1) * fits_per_term));
    std::vector<double> b(held.begin() + static_cast<std::ptrdiff_t>(j * fits_per_term),
                          held.begin() + static_cast<std::ptrdiff_t>((j + 1) * fits_per_term));
    for (double x : a) require(!std::isnan(x), ErrorCode::compute, "NaN log-density in LOO");
    for (double x : b) require(!std::isnan(x), ErrorCode::compute, "NaN log-density in LOO");
    const LogMeanEstimate ua = log_mean_exp_with_error(a);
    const LogMeanEstimate vb = log_mean_exp_with_error(b);
    r.ids.push_back(data.ids()[positions[j]]);
    r.u.push_back(ua.value);
    r.v.push_back(vb.value);
    r.m.push_back(ua.value - vb.value);
    if (with_errors) {
      r.u_se->push_back(ua.std_error);
      r.v_se->push_back(vb.std_error);
      r.m_se->push_back(std::hypot(ua.std_error, vb.std_error));
    }
  }
  return r;
}

// --- quantile trace ----------------------------------------------------------

QuantileTrace quantile_trace(const EstimatorSpec& spec, const Dataset& data, const FoldPlan& plan,
                             std::span<const std::size_t> checkpoints,
                             std::span<const double> levels, const AuditOptions& options) {
  data.require_auditable();
  require(is_iterative(spec.family), ErrorCode::invalid_argument,
          std::string("quantile traces need an iterative family, got ") + to_string(spec.family));
  require(plan.n() == data.size(), ErrorCode::invalid_plan,
          "fold plan size does not match the dataset");
  require(!checkpoints.empty(), ErrorCode::invalid_argument, "no checkpoints given");
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    require(checkpoints[c] <= spec.epochs, ErrorCode::invalid_argument,
            "checkpoint " + std::to_string(checkpoints[c]) + " exceeds " +
                std::to_string(spec.epochs) + " epochs");
    require(c == 0 || checkpoints[c] > checkpoints[c - 1], ErrorCode::invalid_argument,
            "checkpoints must be strictly increasing");
  }
  for (double q : levels)
    require(q >= 0.0 && q <= 1.0, ErrorCode::invalid_argument, "quantile level outside [0, 1]");

  const std::size_t folds = plan.folds();
  const std::size_t jobs = plan.repetitions() * folds;
  const std::uint64_t hash = spec_hash(spec);
  std::vector<LogProbTable> tables;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) tables.emplace_back(plan, data.ids(), hash);
  std::vector<std::size_t> slot_of(spec.epochs + 1, checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) slot_of[checkpoints[c]] = c;

  ProgressCounter progress(options.progress, jobs);
  parallel_for(jobs, options.workers, [&](std::size_t job) {
    const std::size_t rep = job / folds;
    const std::size_t fold = job % folds;
    const std::uint64_t seed = fold_fit_seed(plan.seed(), rep, fold);
    const Dataset train = subset(data, complement(data.size(), plan.holdout(rep, fold)));
    const bool logit = uses_logit_transform(spec.vae, train);
    VaeTrainOptions train_options;
    train_options.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    train_options.on_checkpoint = [&](std::size_t epoch, const VaeModel& snapshot) {
      const ModelPtr model = maybe_wrap(
          spec, train,
          std::make_shared<VaeDensityModel>(snapshot, logit, spec.vae.importance_samples));
      LogProbTable& table = tables[slot_of[epoch]];
      for (std::size_t i = 0; i < data.size(); ++i)
        table.set(rep, fold, i, model->log_density(data.row(i), evaluation_seed(seed, data.ids()[i])));
    };
    vae_train(train, spec, seed, train_options);
    progress.tick();
  });

  QuantileTrace trace;
  trace.epochs.assign(checkpoints.begin(), checkpoints.end());
  trace.levels.assign(levels.begin(), levels.end());
  for (const LogProbTable& table : tables) {
    MemorizationResult result = aggregate_scores(table);
    const std::vector<double> scores = result.valid_scores();
    std::vector<double> row;
    for (double q : levels) row.push_back(quantile(scores, q));
    trace.quantiles.push_back(std::move(row));
    trace.results.push_back(std::move(result));
  }
  return trace;
}

}  // namespace memaudit
