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


#ifndef MEMAUDIT_REPORT_HPP
#define MEMAUDIT_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "memaudit/core.hpp"
#include "memaudit/memscore.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/nn_ratio.hpp"

namespace memaudit {

inline constexpr int kReportVersion = 1;
inline constexpr const char* kReportFormat = "memaudit-report";
inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
  std::string tool_version = kToolVersion;
  std::string command;
  std::optional<nlohmann::json> estimator;
  std::optional<std::uint64_t> spec_hash;
  std::optional<std::uint64_t> config_hash;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> timestamp;  // omitted by default for byte-stable output
  std::vector<std::string> notices;
};

// Any combination of audit artifacts plus where they came from.
struct ReportFile {
  Provenance provenance;
  std::optional<FoldPlan> plan;
  std::optional<LogProbTable> table;
  std::optional<MemorizationResult> memorization;
  std::optional<LooResult> loo;
  std::optional<RatioReport> ratio;
  std::optional<QuantileTrace> trace;
  std::optional<DpHistogram> dp_histogram;
  std::optional<DpVerdict> dp_verdict;
  std::optional<MitigationComparison> mitigation;
};

// Doubles are written in shortest round-trip form; NaN and infinities as the
// strings "nan", "inf", "-inf".
nlohmann::json number_to_json(double value);
double number_from_json(const nlohmann::json& value);

nlohmann::json to_json(const ReportFile& report);
ReportFile report_from_json(const nlohmann::json& doc);

std::string serialize_report(const ReportFile& report);
ReportFile parse_report(const std::string& text);

void write_report(const ReportFile& report, const std::filesystem::path& path);
ReportFile read_report(const std::filesystem::path& path);

// Human-readable digest for the `report` subcommand.
std::string render_report(const ReportFile& report);

}  // namespace memaudit

#endif  // MEMAUDIT_REPORT_HPP
