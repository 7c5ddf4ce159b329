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


#ifndef MEMAUDIT_IO_HPP
#define MEMAUDIT_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "memaudit/core.hpp"

namespace memaudit {

// --- IDX -----------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// 3-D uint8 tensor (count, rows, cols) scaled to [0, 1], tagged rows x cols x 1.
Dataset parse_idx_images(std::span<const std::uint8_t> bytes, std::string name = "idx");
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

Dataset load_idx(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

// --- CSV -----------------------------------------------------------------------

Dataset parse_csv(const std::string& text, bool has_header, std::string name = "csv");
Dataset load_csv(const std::filesystem::path& path, bool has_header);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Full-precision decimal text of a double ("nan", "inf", "-inf" when non-finite).
std::string format_double(double value);

// --- synthetic generators ------------------------------------------------------

enum class SynthKind { gaussian_clusters, two_moons, image_prototypes };

const char* to_string(SynthKind kind);
SynthKind synth_kind_from_string(const std::string& name);

struct SynthSpec {
  SynthKind kind = SynthKind::gaussian_clusters;
  std::size_t n = 500;  // total rows, planted ones included
  std::size_t dim = 2;
  // Cluster centers; empty means two centers at -3 and +3 on the first axis.
  std::vector<std::vector<double>> centers;
  double cluster_sd = 1.0;
  double moon_noise = 0.1;
  std::size_t image_side = 8;
  std::size_t prototypes = 10;
  double flip_probability = 0.05;
  std::size_t outliers = 0;
  double outlier_displacement = 20.0;  // in cluster sd beyond the inlier radius
  std::size_t duplicate_groups = 0;
  std::size_t duplicate_multiplicity = 5;
  std::size_t validation = 0;  // rows of a held-aside inlier set
  std::uint64_t seed = 0;
};

struct SynthData {
  Dataset data;
  std::optional<Dataset> validation;
  std::vector<std::int64_t> outlier_ids;
  std::vector<std::vector<std::int64_t>> duplicate_groups;
};

SynthData generate_synth(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& doc);

// Writes observations (with an optional header of column names) as CSV.
std::string dataset_to_csv(const Dataset& data);

// --- log-probability histogram of memorized vs regular observations ------------

struct HistBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t memorized = 0;
  std::size_t regular = 0;

  double proportion() const {
    const std::size_t total = memorized + regular;
    return total == 0 ? 0.0 : static_cast<double>(memorized) / static_cast<double>(total);
  }
};

// Bins log_probs at bin_width (nonempty bins only, increasing); ids align
// with log_probs.
std::vector<HistBin> hist_bins(std::span<const double> log_probs,
                               std::span<const std::int64_t> ids,
                               std::span<const std::int64_t> memorized, double bin_width);

}  // namespace memaudit

#endif  // MEMAUDIT_IO_HPP
