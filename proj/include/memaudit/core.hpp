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

#ifndef MEMAUDIT_CORE_HPP
#define MEMAUDIT_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace memaudit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct FlatShape {
  bool operator==(const FlatShape&) const = default;
};

// Image observations are flattened in height, width, channel order (HWC).
struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

using ShapeTag = std::variant<FlatShape, ImageShape>;

// An ordered collection of fixed-dimension observations. `ids` carry the
// position each row had when the data was loaded, so subsets keep a mapping
// back to the original data.
class Dataset {
 public:
  // Loader constructor: ids are assigned positionally, 0..n-1.
  explicit Dataset(Matrix observations, std::string name = {},
                   ShapeTag shape = FlatShape{});

  // Explicit ids, used when deriving one dataset from another.
  Dataset(Matrix observations, std::vector<std::int64_t> ids, ShapeTag shape,
          std::string name);

  std::size_t size() const { return static_cast<std::size_t>(observations_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(observations_.cols()); }

  std::span<const double> row(std::size_t position) const {
    return {observations_.data() + position * dim(), dim()};
  }

  const Matrix& observations() const { return observations_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const ShapeTag& shape() const { return shape_; }
  bool is_image() const { return std::holds_alternative<ImageShape>(shape_); }
  const std::string& name() const { return name_; }

  const std::vector<std::string>& column_names() const { return column_names_; }
  void set_column_names(std::vector<std::string> names);

  // Optional per-row class or cluster labels.
  const std::optional<std::vector<int>>& labels() const { return labels_; }
  void set_labels(std::vector<int> labels);

  std::optional<std::size_t> position_of(std::int64_t id) const;

  // Throws invalid_dataset unless n >= 2, which every audit requires.
  void require_auditable() const;

 private:
  Matrix observations_;
  std::vector<std::int64_t> ids_;
  ShapeTag shape_;
  std::string name_;
  std::vector<std::string> column_names_;
  std::optional<std::vector<int>> labels_;
};

// Rows at the given positions, ascending. Duplicated or out-of-range positions
// and empty selections are rejected.
Dataset subset(const Dataset& data, std::span<const std::size_t> keep);

// All positions except those listed.
std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> excluded);

// The L x K holdout structure. Within a repetition the K holdout sets
// partition [0, n); fold sizes differ by at most one, with the first n mod K
// folds one element larger.
class FoldPlan {
 public:
  FoldPlan() = default;

  static FoldPlan make(std::size_t n, std::size_t folds, std::size_t repetitions,
                       std::uint64_t seed);

  // Rebuilds a plan from stored holdout sets (e.g. a report) after checking
  // every invariant.
  static FoldPlan from_holdouts(std::size_t n, std::size_t folds,
                                std::size_t repetitions, std::uint64_t seed,
                                std::vector<std::vector<std::size_t>> holdouts);

  std::size_t n() const { return n_; }
  std::size_t folds() const { return folds_; }
  std::size_t repetitions() const { return repetitions_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const std::size_t> holdout(std::size_t rep, std::size_t fold) const {
    return holdouts_[rep * folds_ + fold];
  }
  std::size_t fold_of(std::size_t rep, std::size_t position) const {
    return fold_of_[rep * n_ + position];
  }
  bool is_held_out(std::size_t rep, std::size_t fold, std::size_t position) const {
    return fold_of(rep, position) == fold;
  }

  bool operator==(const FoldPlan& other) const;

 private:
  void index();

  std::size_t n_ = 0;
  std::size_t folds_ = 0;
  std::size_t repetitions_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> holdouts_;
  std::vector<std::uint32_t> fold_of_;
};

FoldPlan make_fold_plan(std::size_t n, std::size_t folds, std::size_t repetitions,
                        std::uint64_t seed);

// Deterministic 64-bit FNV-1a hash, used for spec and config fingerprints.
std::uint64_t fnv1a64(std::string_view text);

std::string hex64(std::uint64_t value);

}  // namespace memaudit

#endif  // MEMAUDIT_CORE_HPP
