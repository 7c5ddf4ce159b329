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


#ifndef MEMAUDIT_NN_RATIO_HPP
#define MEMAUDIT_NN_RATIO_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memaudit/core.hpp"
#include "memaudit/memscore.hpp"

namespace memaudit {

// 2x2 average pooling per channel of one HWC image. Height and width must be even.
std::vector<double> downsample_avg2(std::span<const double> image, const ImageShape& shape);

// Pools every row of an image-tagged dataset. Tabular data is returned
// unchanged and *passed_through (when given) is set.
Dataset downsample_avg2(const Dataset& data, bool* passed_through = nullptr);

struct DistanceRatios {
  std::vector<std::int64_t> ids;         // training ids
  std::vector<double> rho;               // +inf when the sample distance is zero
  std::vector<double> validation_distance;
  std::vector<double> sample_distance;
  std::vector<bool> infinite;
  bool downsampled = false;

  std::size_t suggests_memorization() const;  // count of finite rho > 1
};

// rho_i = min ||x_i - v|| over validation / min ||x_i - s|| over samples,
// on downsampled images. Requires |samples| == |validation|.
DistanceRatios distance_ratio(const Dataset& train, const Dataset& validation,
                              const Dataset& samples, std::size_t workers = 1);

struct RatioBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;  // NaN with fewer than two members

  double center() const { return 0.5 * (lo + hi); }
};

struct RatioReport {
  double bin_width = 0.0;
  double fraction = 0.0;
  std::vector<RatioBin> bins;  // nonempty bins, increasing
  // Bin of each observation (index into bins), -1 when excluded.
  std::vector<std::int64_t> bin_index;
  std::vector<std::int64_t> ids;
  std::vector<double> rho;
  std::vector<double> scores;
  std::vector<double> top_rho;      // finite rho of the top-fraction ids
  std::vector<double> regular_rho;  // finite rho of the rest
  std::vector<std::int64_t> infinite_ids;
  std::size_t suggests_memorization = 0;
  double pearson_r = 0.0;
};

// Bins the scores at bin_width; infinite rho and excluded scores are left out
// of the bins and of the correlation.
RatioReport ratio_report(const DistanceRatios& ratios, const MemorizationResult& scores,
                         double bin_width, double fraction);

// Rows "x,y,yerr,count": bin center, mean rho, standard error, member count.
std::string binned_curve_csv(const RatioReport& report);

}  // namespace memaudit

#endif  // MEMAUDIT_NN_RATIO_HPP
