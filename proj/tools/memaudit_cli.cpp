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


// Command-line front end. Everything goes through the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "memaudit/memaudit.h"

namespace {

constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  bool force_partial = false;
  std::optional<std::size_t> repetitions;
  bool acknowledge_budget = false;
  std::optional<std::string> strategy;
  bool quiet = false;
  std::string report_path;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "Run configuration (JSON)")->required();
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", f.out, "Output directory");
  sub->add_flag("--force-partial", f.force_partial,
                "Aggregate even if some fits failed, excluding incomplete observations");
  sub->add_flag("-q,--quiet", f.quiet, "No progress output");
}

std::string options_json(const Flags& f) {
  nlohmann::json j{{"force_partial", f.force_partial},
                   {"acknowledge_budget", f.acknowledge_budget},
                   {"quiet", f.quiet}};
  if (f.seed) j["seed"] = *f.seed;
  if (f.workers) j["workers"] = *f.workers;
  if (f.out) j["out"] = *f.out;
  if (f.repetitions) j["repetitions"] = *f.repetitions;
  if (f.strategy) j["strategy"] = *f.strategy;
  return j.dump();
}

int run(const std::string& command, const Flags& f) {
  std::ifstream in(f.config, std::ios::binary);
  if (!in) {
    std::cerr << command << ": cannot read config " << f.config << "\n";
    return kExitConfig;
  }
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  int exit_code = 0;
  const ma_status st =
      ma_run_command(command.c_str(), text.c_str(), options_json(f).c_str(), &exit_code);
  if (st != MA_OK) {
    std::cerr << command << ": " << ma_status_string(st) << ": " << ma_last_error() << "\n";
    return 3;
  }
  return exit_code;
}

int report(const Flags& f) {
  char* text = nullptr;
  const ma_status st = ma_render_report(f.report_path.c_str(), &text);
  if (st != MA_OK) {
    std::cerr << "report: " << ma_status_string(st) << ": " << ma_last_error() << "\n";
    return st == MA_ERR_COMPUTE ? 3 : kExitConfig;
  }
  std::cout << text;
  ma_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memorization audits for density estimators and VAEs"};
  app.set_version_flag("--version", std::string(ma_version()));
  app.require_subcommand(1);
  Flags f;

  auto* memscore = app.add_subcommand("memscore", "K-fold memorization scores");
  add_common(memscore, f);

  auto* loo = app.add_subcommand("loo", "Exact leave-one-out scores");
  add_common(loo, f);
  loo->add_option("-T,--repetitions", f.repetitions, "Fits per term")->check(CLI::PositiveNumber);
  loo->add_flag("--acknowledge-budget", f.acknowledge_budget,
                "Allow runs of more than 10000 fits");

  auto* nn = app.add_subcommand("nn-ratio", "Nearest-neighbor distance ratios");
  add_common(nn, f);

  auto* trace = app.add_subcommand("trace", "Score quantiles during training");
  add_common(trace, f);

  auto* mitigate = app.add_subcommand("mitigate", "Outlier-component or DP mitigation");
  add_common(mitigate, f);
  mitigate->add_option("--strategy", f.strategy, "outlier or dp");
  mitigate->add_option("-T,--repetitions", f.repetitions, "Algorithm draws for the dp check")
      ->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  add_common(synth, f);

  auto* rep = app.add_subcommand("report", "Print a report file");
  rep->add_option("path", f.report_path, "Report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (rep->parsed()) return report(f);
  for (CLI::App* sub : {memscore, loo, nn, trace, mitigate, synth})
    if (sub->parsed()) return run(sub->get_name(), f);
  return kExitConfig;
}
