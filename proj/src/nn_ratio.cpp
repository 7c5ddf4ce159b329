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


#include "memaudit/nn_ratio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "memaudit/error.hpp"
#include "memaudit/io.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double min_distance(std::span<const double> x, const Matrix& pool) {
  double best = kInf;
  for (Eigen::Index r = 0; r < pool.rows(); ++r) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < pool.cols(); ++j) {
      const double d = x[static_cast<std::size_t>(j)] - pool(r, j);
      sq += d * d;
    }
    best = std::min(best, sq);
  }
  return std::sqrt(best);
}

}  // namespace

std::vector<double> downsample_avg2(std::span<const double> image, const ImageShape& shape) {
  require(shape.height % 2 == 0 && shape.width % 2 == 0, ErrorCode::invalid_argument,
          "downsampling needs even height and width");
  require(image.size() == shape.height * shape.width * shape.channels,
          ErrorCode::invalid_argument, "image size does not match its shape");
  const std::size_t h2 = shape.height / 2;
  const std::size_t w2 = shape.width / 2;
  const std::size_t c = shape.channels;
  auto at = [&](std::size_t y, std::size_t x, std::size_t ch) {
    return image[(y * shape.width + x) * c + ch];
  };
  std::vector<double> out(h2 * w2 * c);
  for (std::size_t y = 0; y < h2; ++y)
    for (std::size_t x = 0; x < w2; ++x)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(y * w2 + x) * c + ch] = 0.25 * (at(2 * y, 2 * x, ch) + at(2 * y, 2 * x + 1, ch) +
                                             at(2 * y + 1, 2 * x, ch) +
                                             at(2 * y + 1, 2 * x + 1, ch));
  return out;
}

Dataset downsample_avg2(const Dataset& data, bool* passed_through) {
  if (!data.is_image()) {
    if (passed_through) *passed_through = true;
    return data;
  }
  if (passed_through) *passed_through = false;
  const auto shape = std::get<ImageShape>(data.shape());
  const ImageShape half{shape.height / 2, shape.width / 2, shape.channels};
  Matrix out(static_cast<Eigen::Index>(data.size()),
             static_cast<Eigen::Index>(half.height * half.width * half.channels));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pooled = downsample_avg2(data.row(i), shape);
    for (std::size_t j = 0; j < pooled.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pooled[j];
  }
  Dataset result(std::move(out), data.ids(), half, data.name());
  if (data.labels()) result.set_labels(*data.labels());
  return result;
}

std::size_t DistanceRatios::suggests_memorization() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (!infinite[i] && rho[i] > 1.0) ++count;
  return count;
}

DistanceRatios distance_ratio(const Dataset& train, const Dataset& validation,
                              const Dataset& samples, std::size_t workers) {
  require(train.size() > 0 && validation.size() > 0 && samples.size() > 0,
          ErrorCode::invalid_argument, "distance ratio needs nonempty sets");
  require(samples.size() == validation.size(), ErrorCode::invalid_argument,
          "sample and validation sets must have equal size");
  bool pass = false;
  const Dataset t = downsample_avg2(train, &pass);
  const Dataset v = downsample_avg2(validation);
  const Dataset s = downsample_avg2(samples);
  require(t.dim() == v.dim() && t.dim() == s.dim(), ErrorCode::invalid_argument,
          "train, validation and sample dimensions differ");

  DistanceRatios r;
  r.ids = train.ids();
  r.downsampled = !pass;
  const std::size_t n = t.size();
  r.rho.resize(n);
  r.validation_distance.resize(n);
  r.sample_distance.resize(n);
  r.infinite.assign(n, false);
  std::vector<char> inf(n, 0);
  parallel_for(n, workers, [&](std::size_t i) {
    const double dv = min_distance(t.row(i), v.observations());
    const double ds = min_distance(t.row(i), s.observations());
    r.validation_distance[i] = dv;
    r.sample_distance[i] = ds;
    if (ds == 0.0) {
      r.rho[i] = kInf;
      inf[i] = 1;
    } else {
      r.rho[i] = dv / ds;
    }
  });
  for (std::size_t i = 0; i < n; ++i) r.infinite[i] = inf[i] != 0;
  return r;
}

RatioReport ratio_report(const DistanceRatios& ratios, const MemorizationResult& scores,
                         double bin_width, double fraction) {
  require(bin_width > 0.0 && std::isfinite(bin_width), ErrorCode::invalid_argument,
          "bin width must be positive");
  require(ratios.ids == scores.ids, ErrorCode::invalid_argument,
          "distance ratios and scores are not aligned by id");
  RatioReport rep;
  rep.bin_width = bin_width;
  rep.fraction = fraction;
  rep.ids = ratios.ids;
  rep.rho = ratios.rho;
  rep.scores = scores.m;
  rep.suggests_memorization = ratios.suggests_memorization();
  const std::size_t n = rep.ids.size();
  rep.bin_index.assign(n, -1);

  const auto top = top_fraction(scores, fraction);
  const std::set<std::int64_t> top_set(top.begin(), top.end());

  std::map<std::int64_t, std::vector<std::size_t>> members;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < n; ++i) {
    if (ratios.infinite[i]) {
      rep.infinite_ids.push_back(rep.ids[i]);
      continue;
    }
    if (scores.excluded[i]) continue;
    const auto key = static_cast<std::int64_t>(std::floor(scores.m[i] / bin_width));
    members[key].push_back(i);
    xs.push_back(ratios.rho[i]);
    ys.push_back(scores.m[i]);
    (top_set.count(rep.ids[i]) ? rep.top_rho : rep.regular_rho).push_back(ratios.rho[i]);
  }
  for (const auto& [key, idx] : members) {
    RatioBin bin;
    bin.lo = static_cast<double>(key) * bin_width;
    bin.hi = static_cast<double>(key + 1) * bin_width;
    bin.count = idx.size();
    std::vector<double> values;
    for (std::size_t i : idx) {
      values.push_back(ratios.rho[i]);
      rep.bin_index[i] = static_cast<std::int64_t>(rep.bins.size());
    }
    bin.mean = mean(values);
    bin.std_error = values.size() >= 2
                        ? std::sqrt(sample_variance(values) / static_cast<double>(values.size()))
                        : kNaN;
    rep.bins.push_back(bin);
  }
  rep.pearson_r = xs.size() >= 2 ? pearson(xs, ys) : 0.0;
  return rep;
}

std::string binned_curve_csv(const RatioReport& report) {
  std::string out = "x,y,yerr,count\n";
  for (const RatioBin& bin : report.bins) {
    out += format_double(bin.center()) + "," + format_double(bin.mean) + ",";
    if (!std::isnan(bin.std_error)) out += format_double(bin.std_error);
    out += "," + std::to_string(bin.count) + "\n";
  }
  return out;
}

}  // namespace memaudit
