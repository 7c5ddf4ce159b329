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


#ifndef MEMAUDIT_MEMSCORE_HPP
#define MEMAUDIT_MEMSCORE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memaudit/core.hpp"
#include "memaudit/estimator_spec.hpp"
#include "memaudit/models.hpp"

namespace memaudit {

using ProgressSink = std::function<void(std::size_t done, std::size_t total)>;

struct AuditOptions {
  std::size_t workers = 1;
  ProgressSink progress;  // called after each fit, serialized
};

// Seed of the model fitted with holdout set (rep, fold).
std::uint64_t fold_fit_seed(std::uint64_t master, std::size_t rep, std::size_t fold);
// Noise seed for evaluating observation `id` under the model fitted with fit_seed.
std::uint64_t evaluation_seed(std::uint64_t fit_seed, std::int64_t id);

struct FitFailure {
  std::size_t rep = 0;
  std::size_t fold = 0;
  std::string message;
};

// pi[rep][fold][i]: log-density of observation i under the model fitted
// without holdout set (rep, fold). Missing entries (failed fits) are NaN.
class LogProbTable {
 public:
  LogProbTable() = default;
  LogProbTable(FoldPlan plan, std::vector<std::int64_t> ids, std::uint64_t spec_hash);

  const FoldPlan& plan() const { return plan_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  std::uint64_t spec_hash() const { return spec_hash_; }
  std::size_t n() const { return plan_.n(); }

  double at(std::size_t rep, std::size_t fold, std::size_t i) const {
    return entries_[index(rep, fold, i)];
  }
  void set(std::size_t rep, std::size_t fold, std::size_t i, double value) {
    entries_[index(rep, fold, i)] = value;
  }
  const std::vector<double>& entries() const { return entries_; }
  void set_entries(std::vector<double> entries);

  const std::vector<FitFailure>& failures() const { return failures_; }
  void add_failure(FitFailure failure);
  bool partial() const { return !failures_.empty(); }

  bool operator==(const LogProbTable& other) const;

 private:
  std::size_t index(std::size_t rep, std::size_t fold, std::size_t i) const {
    return (rep * plan_.folds() + fold) * plan_.n() + i;
  }

  FoldPlan plan_;
  std::vector<std::int64_t> ids_;
  std::uint64_t spec_hash_ = 0;
  std::vector<double> entries_;
  std::vector<FitFailure> failures_;
};

// Fits one model per (rep, fold) and evaluates every observation under it.
// Failed fits are recorded rather than thrown.
LogProbTable compute_logprob_table(const EstimatorSpec& spec, const Dataset& data,
                                   const FoldPlan& plan, const AuditOptions& options = {});

struct ScoreSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double skewness = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::pair<double, double>> percentiles;  // (level, value)
};

inline const std::vector<double> kSummaryLevels{0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 0.999};

ScoreSummary summarize(std::span<const double> scores);

struct LabelSummary {
  int label = 0;
  ScoreSummary summary;
};

struct MemorizationResult {
  std::vector<std::int64_t> ids;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> m;
  // Sample sd of the held-out entries (NaN when L == 1): the estimator noise floor.
  std::vector<double> heldout_spread;
  std::vector<bool> excluded;  // incomplete under a forced partial table
  ScoreSummary summary;
  std::vector<LabelSummary> by_label;
  std::uint64_t spec_hash = 0;
  FoldPlan plan;

  // Scores of the observations that were not excluded, in id order.
  std::vector<double> valid_scores() const;
  std::vector<std::int64_t> valid_ids() const;

  bool operator==(const MemorizationResult& other) const;
};

// U_i and V_i are log-mean-exps over the in-training and held-out entries.
// Each multiset is sorted before reduction so the result does not depend on
// the order of the (rep, fold) axis.
MemorizationResult aggregate_scores(const LogProbTable& table, bool force = false);

// Adds per-label summaries; labels are aligned with result.ids.
void summarize_by_label(MemorizationResult& result, std::span<const int> labels);

struct LooResult {
  std::vector<std::int64_t> ids;
  std::vector<double> u;  // log mean density under full-data fits
  std::vector<double> v;  // log mean density under fits without the observation
  std::vector<double> m;
  // Delta-method Monte-Carlo errors; present only when T >= 2.
  std::optional<std::vector<double>> u_se;
  std::optional<std::vector<double>> v_se;
  std::optional<std::vector<double>> m_se;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;
  std::vector<std::string> warnings;
};

// Exact leave-one-out scores with T fits per term. `targets` holds positions
// (empty = all observations).
LooResult loo_memorization(const EstimatorSpec& spec, const Dataset& data, std::size_t repetitions,
                           std::uint64_t seed, std::span<const std::size_t> targets = {},
                           const AuditOptions& options = {});

struct QuantileTrace {
  std::vector<std::size_t> epochs;
  std::vector<double> levels;
  std::vector<std::vector<double>> quantiles;  // [checkpoint][level]
  std::vector<MemorizationResult> results;     // per checkpoint
};

inline const std::vector<double> kTraceLevels{0.95, 0.999};

// Trains each fold model once and scores the snapshots taken at the given
// epochs (0 = initialization). Iterative families only.
QuantileTrace quantile_trace(const EstimatorSpec& spec, const Dataset& data, const FoldPlan& plan,
                             std::span<const std::size_t> checkpoints,
                             std::span<const double> levels = kTraceLevels,
                             const AuditOptions& options = {});

// Ids of the ceil(fraction * n) highest scores among non-excluded observations;
// ties go to the smaller id.
std::vector<std::int64_t> top_fraction(const MemorizationResult& result, double fraction);

}  // namespace memaudit

#endif  // MEMAUDIT_MEMSCORE_HPP
