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


#ifndef MEMAUDIT_COMMANDS_HPP
#define MEMAUDIT_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memaudit/core.hpp"
#include "memaudit/estimator_spec.hpp"
#include "memaudit/io.hpp"

namespace memaudit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCompute = 3;

// Fits needing an explicit acknowledgment in `loo`.
inline constexpr std::size_t kLooFitBudget = 10000;

struct DatasetSource {
  std::string source = "synth";  // synth | csv | idx
  std::string path;
  std::string labels_path;  // idx only
  bool has_header = false;  // csv only
  SynthSpec synth;
};

struct RunConfig {
  DatasetSource dataset;
  std::optional<DatasetSource> validation;
  EstimatorSpec estimator;
  std::size_t folds = 10;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  std::optional<std::size_t> importance_samples;
  std::vector<std::size_t> checkpoints;
  std::string out = "memaudit-out";
  std::size_t workers = 1;
  bool force_partial = false;
  double top_fraction = 0.05;
  std::size_t score_bins = 30;
  // loo
  std::size_t loo_repetitions = 1;
  std::vector<std::int64_t> loo_targets;  // empty = all
  bool acknowledge_budget = false;
  // nn-ratio
  double bin_width = 50.0;
  bool samples_equal_validation = false;  // test hook
  // mitigate
  std::string strategy = "outlier";
  std::size_t mitigate_repetitions = 200;
  OutlierSettings outlier;
};

// Validates keys and values; throws config errors.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);
// Hash of the canonical config without the worker count and output directory,
// which do not change results.
std::uint64_t config_hash(const RunConfig& config);

// Flag overrides applied on top of the config document.
struct CommandOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  bool force_partial = false;
  std::optional<std::size_t> repetitions;  // T for loo and mitigate
  bool acknowledge_budget = false;
  std::optional<std::string> strategy;
  bool quiet = false;
};

nlohmann::json to_json(const CommandOverrides& overrides);
CommandOverrides command_overrides_from_json(const nlohmann::json& doc);

// Runs one subcommand: memscore, loo, nn-ratio, trace, mitigate, synth.
// Returns the process exit code; messages go to `log`.
int run_command(const std::string& command, const nlohmann::json& config,
                const CommandOverrides& overrides, std::ostream& log);

// Prints a report file in readable form; exit code as above.
int run_report_command(const std::string& path, std::ostream& out, std::ostream& log);

}  // namespace memaudit

#endif  // MEMAUDIT_COMMANDS_HPP
