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

#include "memaudit/core.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "memaudit/error.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_dataset: return "invalid-dataset";
    case ErrorCode::invalid_plan: return "invalid-plan";
    case ErrorCode::config: return "config";
    case ErrorCode::format: return "format";
    case ErrorCode::io: return "io";
    case ErrorCode::version: return "version";
    case ErrorCode::compute: return "compute";
    case ErrorCode::unsupported: return "unsupported";
  }
  return "unknown";
}

namespace {

std::vector<std::int64_t> positional_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  return ids;
}

void check_shape(const Matrix& observations, const ShapeTag& shape) {
  if (const auto* image = std::get_if<ImageShape>(&shape)) {
    require(image->size() == static_cast<std::size_t>(observations.cols()),
            ErrorCode::invalid_dataset,
            "image shape does not match the observation dimension");
  }
}

}  // namespace

Dataset::Dataset(Matrix observations, std::string name, ShapeTag shape)
    : Dataset(std::move(observations), {}, std::move(shape), std::move(name)) {}

Dataset::Dataset(Matrix observations, std::vector<std::int64_t> ids, ShapeTag shape,
                 std::string name)
    : observations_(std::move(observations)),
      ids_(std::move(ids)),
      shape_(std::move(shape)),
      name_(std::move(name)) {
  require(observations_.rows() >= 1, ErrorCode::invalid_dataset,
          "dataset must contain at least one observation");
  require(observations_.cols() >= 1, ErrorCode::invalid_dataset,
          "observations must have dimension >= 1");
  if (ids_.empty()) ids_ = positional_ids(size());
  require(ids_.size() == size(), ErrorCode::invalid_dataset,
          "one id per observation is required");
  std::unordered_set<std::int64_t> seen(ids_.begin(), ids_.end());
  require(seen.size() == ids_.size(), ErrorCode::invalid_dataset,
          "observation ids must be unique");
  check_shape(observations_, shape_);
}

void Dataset::set_column_names(std::vector<std::string> names) {
  require(names.empty() || names.size() == dim(), ErrorCode::invalid_dataset,
          "column name count does not match the dimension");
  column_names_ = std::move(names);
}

void Dataset::set_labels(std::vector<int> labels) {
  require(labels.size() == size(), ErrorCode::invalid_dataset,
          "label count does not match the number of observations");
  labels_ = std::move(labels);
}

std::optional<std::size_t> Dataset::position_of(std::int64_t id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

void Dataset::require_auditable() const {
  require(size() >= 2, ErrorCode::invalid_dataset,
          "an audit needs at least two observations, got " + std::to_string(size()));
}

Dataset subset(const Dataset& data, std::span<const std::size_t> keep) {
  require(!keep.empty(), ErrorCode::invalid_argument, "subset selection is empty");
  std::vector<std::size_t> rows(keep.begin(), keep.end());
  std::sort(rows.begin(), rows.end());
  require(std::adjacent_find(rows.begin(), rows.end()) == rows.end(),
          ErrorCode::invalid_argument, "subset selection repeats a position");
  require(rows.back() < data.size(), ErrorCode::invalid_argument,
          "subset position " + std::to_string(rows.back()) + " out of range for n=" +
              std::to_string(data.size()));

  Matrix out(static_cast<Eigen::Index>(rows.size()), data.observations().cols());
  std::vector<std::int64_t> ids(rows.size());
  std::optional<std::vector<int>> labels;
  if (data.labels()) labels.emplace(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) =
        data.observations().row(static_cast<Eigen::Index>(rows[r]));
    ids[r] = data.ids()[rows[r]];
    if (labels) (*labels)[r] = (*data.labels())[rows[r]];
  }
  Dataset result(std::move(out), std::move(ids), data.shape(), data.name());
  result.set_column_names(data.column_names());
  if (labels) result.set_labels(std::move(*labels));
  return result;
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> excluded) {
  std::vector<char> drop(n, 0);
  for (std::size_t e : excluded) {
    require(e < n, ErrorCode::invalid_argument, "excluded position out of range");
    drop[e] = 1;
  }
  std::vector<std::size_t> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) kept.push_back(i);
  return kept;
}

FoldPlan FoldPlan::make(std::size_t n, std::size_t folds, std::size_t repetitions,
                        std::uint64_t seed) {
  require(n >= 2, ErrorCode::invalid_dataset,
          "fold planning needs n >= 2, got " + std::to_string(n));
  require(folds >= 2 && folds <= n, ErrorCode::invalid_plan,
          "K must satisfy 2 <= K <= n (K=" + std::to_string(folds) +
              ", n=" + std::to_string(n) + ")");
  require(repetitions >= 1, ErrorCode::invalid_plan, "L must be at least 1");

  FoldPlan plan;
  plan.n_ = n;
  plan.folds_ = folds;
  plan.repetitions_ = repetitions;
  plan.seed_ = seed;
  plan.holdouts_.reserve(folds * repetitions);

  const std::size_t base = n / folds;
  const std::size_t remainder = n % folds;
  std::vector<std::size_t> order(n);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, SeedStream::fold_shuffle, rep));
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t start = 0;
    for (std::size_t k = 0; k < folds; ++k) {
      const std::size_t len = base + (k < remainder ? 1 : 0);
      std::vector<std::size_t> fold(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(start + len));
      std::sort(fold.begin(), fold.end());
      plan.holdouts_.push_back(std::move(fold));
      start += len;
    }
  }
  plan.index();
  return plan;
}

FoldPlan FoldPlan::from_holdouts(std::size_t n, std::size_t folds, std::size_t repetitions,
                                 std::uint64_t seed,
                                 std::vector<std::vector<std::size_t>> holdouts) {
  require(n >= 2, ErrorCode::invalid_dataset, "fold plan needs n >= 2");
  require(folds >= 2 && folds <= n, ErrorCode::invalid_plan, "K must satisfy 2 <= K <= n");
  require(repetitions >= 1, ErrorCode::invalid_plan, "L must be at least 1");
  require(holdouts.size() == folds * repetitions, ErrorCode::invalid_plan,
          "expected L*K holdout sets");
  const std::size_t lo = n / folds;
  const std::size_t hi = lo + (n % folds ? 1 : 0);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::vector<char> seen(n, 0);
    for (std::size_t k = 0; k < folds; ++k) {
      auto& fold = holdouts[rep * folds + k];
      require(fold.size() == lo || fold.size() == hi, ErrorCode::invalid_plan,
              "fold size outside floor/ceil(n/K)");
      std::sort(fold.begin(), fold.end());
      for (std::size_t i : fold) {
        require(i < n && !seen[i], ErrorCode::invalid_plan,
                "holdout sets of a repetition must partition [0, n)");
        seen[i] = 1;
      }
    }
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
            ErrorCode::invalid_plan, "holdout sets of a repetition must cover [0, n)");
  }
  FoldPlan plan;
  plan.n_ = n;
  plan.folds_ = folds;
  plan.repetitions_ = repetitions;
  plan.seed_ = seed;
  plan.holdouts_ = std::move(holdouts);
  plan.index();
  return plan;
}

void FoldPlan::index() {
  fold_of_.assign(n_ * repetitions_, 0);
  for (std::size_t rep = 0; rep < repetitions_; ++rep)
    for (std::size_t k = 0; k < folds_; ++k)
      for (std::size_t i : holdouts_[rep * folds_ + k])
        fold_of_[rep * n_ + i] = static_cast<std::uint32_t>(k);
}

bool FoldPlan::operator==(const FoldPlan& other) const {
  return n_ == other.n_ && folds_ == other.folds_ && repetitions_ == other.repetitions_ &&
         seed_ == other.seed_ && holdouts_ == other.holdouts_;
}

FoldPlan make_fold_plan(std::size_t n, std::size_t folds, std::size_t repetitions,
                        std::uint64_t seed) {
  return FoldPlan::make(n, folds, repetitions, seed);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace memaudit
