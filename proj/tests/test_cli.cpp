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


// Drives the installed executable end to end through std::system.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::path(MEMAUDIT_TEST_WORKDIR) / "cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const std::string& name, const json& doc) {
  fs::create_directories(kWork);
  const fs::path p = kWork / (name + ".json");
  std::ofstream(p) << doc.dump(1);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MEMAUDIT_CLI_PATH + "\" " + args + " >" +
                          (kWork / "stdout.txt").string() + " 2>" +
                          (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    files[entry.path().filename().string()] = slurp(entry.path());
  return files;
}

json synth_source(std::size_t n, std::size_t validation) {
  return {{"source", "synth"},
          {"synth",
           {{"kind", "gaussian-clusters"},
            {"n", n},
            {"outliers", 2},
            {"duplicate_groups", 1},
            {"validation", validation},
            {"seed", 4}}}};
}

json small_vae() {
  return {{"family", "vae"},         {"epochs", 4},
          {"latent_dim", 1},         {"encoder_hidden", {8}},
          {"decoder_hidden", {8}},   {"likelihood", "isotropic-gaussian"},
          {"importance_samples", 8}, {"batch_size", 16}};
}

// Runs with 1 and 4 workers plus a 1-worker rerun; all outputs must agree.
void check_stable(const std::string& command, const json& config, const std::string& extra = "",
                  std::string label = "") {
  if (label.empty()) label = command;
  const fs::path cfg = write_config(label, config);
  const fs::path base = kWork / ("out-" + label);
  fs::remove_all(base);
  for (const char* tag : {"a", "b", "c"}) {
    const std::string workers = std::string(tag) == "b" ? "4" : "1";
    CHECK(run(command + " --config " + cfg.string() + " -q --workers " + workers + " --out " +
              (base / tag).string() + " " + extra) == 0);
  }
  const auto a = snapshot(base / "a");
  CHECK_FALSE(a.empty());
  CHECK(a == snapshot(base / "b"));
  CHECK(a == snapshot(base / "c"));
}

}  // namespace

TEST_CASE("memscore") {
  const json config{{"dataset", synth_source(60, 0)},
                    {"estimator", {{"family", "kde"}}},
                    {"folds", 5},
                    {"repetitions", 2},
                    {"seed", 3}};
  check_stable("memscore", config);
  const auto files = snapshot(kWork / "out-memscore" / "a");
  for (const char* name : {"report.json", "scores.csv", "score_histogram.csv", "score_markers.csv"})
    CHECK(files.count(name) == 1);
  CHECK(run("report " + (kWork / "out-memscore" / "a" / "report.json").string()) == 0);
}

TEST_CASE("memscore with a stochastic estimator") {
  const json config{{"dataset", synth_source(40, 0)}, {"estimator", small_vae()},
                    {"folds", 4}, {"repetitions", 1}, {"seed", 8}};
  check_stable("memscore", config, "", "memscore-vae");
}

TEST_CASE("loo") {
  const json config{{"dataset", synth_source(30, 0)},
                    {"estimator", {{"family", "gmm"}, {"components", 2}}},
                    {"seed", 2},
                    {"loo", {{"repetitions", 2}, {"targets", {0, 5, 29}}}}};
  check_stable("loo", config);
}

TEST_CASE("nn-ratio") {
  const json config{{"dataset", synth_source(60, 30)}, {"estimator", {{"family", "kde"}}},
                    {"folds", 3}, {"repetitions", 1}, {"seed", 5}};
  check_stable("nn-ratio", config);
}

TEST_CASE("trace") {
  const json config{{"dataset", synth_source(40, 0)}, {"estimator", small_vae()},
                    {"folds", 2}, {"repetitions", 1}, {"seed", 6}, {"checkpoints", {0, 2, 4}}};
  check_stable("trace", config);
}

TEST_CASE("mitigate") {
  const json outlier{{"dataset", synth_source(50, 0)}, {"estimator", {{"family", "kde"}}},
                     {"folds", 5}, {"repetitions", 1}, {"seed", 1}};
  check_stable("mitigate", outlier, "--strategy outlier");

  json dp{{"dataset", synth_source(30, 0)},
          {"estimator",
           {{"family", "dp-histogram"},
            {"epsilon", 2.0},
            {"axes", {{{"lo", -60.0}, {"hi", 60.0}, {"bins", 6}}, {{"lo", -60.0}, {"hi", 60.0}, {"bins", 6}}}}}},
          {"seed", 1},
          {"mitigate", {{"strategy", "dp"}, {"repetitions", 3}}}};
  check_stable("mitigate", dp, "", "mitigate-dp");
}

TEST_CASE("synth") {
  check_stable("synth", json{{"dataset", synth_source(50, 10)}});
  const auto files = snapshot(kWork / "out-synth" / "a");
  CHECK(files.count("data.csv") == 1);
  CHECK(files.count("validation.csv") == 1);
  CHECK(json::parse(files.at("ground_truth.json"))["outlier_ids"].size() == 2);
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("memscore") == 2);
  CHECK(run("memscore --config " + (kWork / "missing.json").string()) == 2);
  fs::create_directories(kWork);
  std::ofstream(kWork / "broken.json") << "{\"dataset\":";
  CHECK(run("memscore --config " + (kWork / "broken.json").string()) == 2);

  const json too_many_folds{{"dataset", synth_source(20, 0)}, {"folds", 21}};
  CHECK(run("memscore -q --config " + write_config("k-gt-n", too_many_folds).string()) == 2);
  const json unknown_key{{"dataset", synth_source(20, 0)}, {"fold", 2}};
  CHECK(run("memscore -q --config " + write_config("typo", unknown_key).string()) == 2);
  const json dp_t1{{"dataset", synth_source(20, 0)}, {"mitigate", {{"strategy", "dp"}, {"repetitions", 1}}}};
  CHECK(run("mitigate -q --config " + write_config("dp-t1", dp_t1).string()) == 2);
  CHECK(run("report " + (kWork / "missing.json").string()) == 2);
}

TEST_CASE("failed fits exit with 3") {
  fs::create_directories(kWork);
  std::ofstream(kWork / "huge.csv") << "a,b\n1e300,1\n2,3\n4,5\n6,7\n8,9\n1,1\n";
  json vae = small_vae();
  vae["likelihood"] = "diagonal-gaussian";
  const json config{{"dataset", {{"source", "csv"}, {"path", (kWork / "huge.csv").string()}, {"has_header", true}}},
                    {"estimator", vae},
                    {"folds", 2},
                    {"out", (kWork / "out-huge").string()}};
  const fs::path cfg = write_config("huge", config);
  CHECK(run("memscore --config " + cfg.string()) == 3);
  CHECK(run("memscore --force-partial --config " + cfg.string()) == 3);
}
