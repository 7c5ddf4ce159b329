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


#include "memaudit/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "memaudit/error.hpp"
#include "memaudit/memscore.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/nn_ratio.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/random.hpp"
#include "memaudit/report.hpp"

namespace memaudit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
  require(obj.is_object(), ErrorCode::config, where + " must be an object");
  for (const auto& [key, value] : obj.items())
    require(known.count(key) > 0, ErrorCode::config,
            "unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& field, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(field);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, where + "." + key + ": " + e.what());
  }
}

DatasetSource source_from_json(const json& j, const std::string& where) {
  check_keys(j, {"source", "path", "labels_path", "has_header", "synth"}, where);
  DatasetSource s;
  read(j, "source", s.source, where);
  read(j, "path", s.path, where);
  read(j, "labels_path", s.labels_path, where);
  read(j, "has_header", s.has_header, where);
  if (s.source == "synth") {
    s.synth = synth_spec_from_json(j.contains("synth") ? j["synth"] : json::object());
  } else if (s.source == "csv" || s.source == "idx") {
    require(!s.path.empty(), ErrorCode::config, where + ": " + s.source + " source needs a path");
  } else {
    fail(ErrorCode::config, where + ": unknown source '" + s.source + "'");
  }
  return s;
}

json source_json(const DatasetSource& s) {
  json j{{"source", s.source}};
  if (s.source == "synth") {
    j["synth"] = to_json(s.synth);
  } else {
    j["path"] = s.path;
    if (s.source == "csv") j["has_header"] = s.has_header;
    if (s.source == "idx" && !s.labels_path.empty()) j["labels_path"] = s.labels_path;
  }
  return j;
}

struct Loaded {
  Dataset data{Matrix(1, 1)};
  std::optional<Dataset> validation;
  std::vector<std::int64_t> outlier_ids;
  std::vector<std::vector<std::int64_t>> duplicate_groups;
};

Loaded load(const DatasetSource& source) {
  Loaded out;
  if (source.source == "synth") {
    SynthData s = generate_synth(source.synth);
    out.data = std::move(s.data);
    out.validation = std::move(s.validation);
    out.outlier_ids = std::move(s.outlier_ids);
    out.duplicate_groups = std::move(s.duplicate_groups);
  } else if (source.source == "csv") {
    out.data = load_csv(source.path, source.has_header);
  } else {
    out.data = load_idx(source.path);
    if (!source.labels_path.empty()) {
      auto labels = load_idx_labels(source.labels_path);
      require(labels.size() == out.data.size(), ErrorCode::invalid_dataset,
              "label count does not match the image count");
      out.data.set_labels(std::move(labels));
    }
  }
  return out;
}

EstimatorSpec effective_spec(const RunConfig& config) {
  EstimatorSpec spec = config.estimator;
  if (config.importance_samples) spec.vae.importance_samples = *config.importance_samples;
  return spec;
}

Provenance make_provenance(const std::string& command, const RunConfig& config,
                           const EstimatorSpec& spec) {
  Provenance p;
  p.command = command;
  p.estimator = to_json(spec);
  p.spec_hash = spec_hash(spec);
  p.config_hash = config_hash(config);
  p.seed = config.seed;
  return p;
}

ProgressSink progress_to(std::ostream& log, const std::string& what, bool quiet) {
  if (quiet) return {};
  return [&log, what](std::size_t done, std::size_t total) {
    log << what << ": " << done << "/" << total << "\n";
  };
}

std::vector<std::size_t> default_checkpoints(std::size_t epochs) {
  std::set<std::size_t> c{0, std::min<std::size_t>(1, epochs), epochs / 4, epochs / 2,
                          3 * epochs / 4, epochs};
  return {c.begin(), c.end()};
}

std::string scores_csv(const MemorizationResult& r) {
  std::string out = "id,u,v,m,heldout_spread,excluded\n";
  for (std::size_t i = 0; i < r.ids.size(); ++i)
    out += std::to_string(r.ids[i]) + "," + format_double(r.u[i]) + "," + format_double(r.v[i]) +
           "," + format_double(r.m[i]) + "," + format_double(r.heldout_spread[i]) + "," +
           (r.excluded[i] ? "1" : "0") + "\n";
  return out;
}

std::string score_histogram_csv(std::span<const double> scores, std::size_t bins) {
  std::string out = "lo,hi,count\n";
  if (scores.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  const std::size_t count = hi > lo ? bins : 1;
  std::vector<std::size_t> counts(count, 0);
  for (double s : scores) {
    auto b = static_cast<std::size_t>((s - lo) / width);
    counts[std::min(b, count - 1)] += 1;
  }
  for (std::size_t b = 0; b < count; ++b)
    out += format_double(lo + static_cast<double>(b) * width) + "," +
           format_double(lo + static_cast<double>(b + 1) * width) + "," +
           std::to_string(counts[b]) + "\n";
  return out;
}

std::vector<std::size_t> positions_of(const Dataset& data, std::span<const std::int64_t> ids) {
  std::vector<std::size_t> out;
  for (std::int64_t id : ids) {
    const auto pos = data.position_of(id);
    require(pos.has_value(), ErrorCode::config, "LOO target id " + std::to_string(id) +
                                                    " is not in the dataset");
    out.push_back(*pos);
  }
  return out;
}

// Runs the K-fold audit and aggregates; nullopt after logging a failure.
std::optional<MemorizationResult> kfold_scores(const EstimatorSpec& spec, const Loaded& loaded,
                                               const FoldPlan& plan, const RunConfig& config,
                                               const std::string& what, std::ostream& log,
                                               bool quiet, LogProbTable* table_out) {
  AuditOptions options{config.workers, progress_to(log, what + " fits", quiet)};
  LogProbTable table = compute_logprob_table(spec, loaded.data, plan, options);
  if (table.partial()) {
    log << what << ": " << table.failures().size() << " fit(s) failed:\n";
    for (const FitFailure& f : table.failures())
      log << "  (rep " << f.rep << ", fold " << f.fold << "): " << f.message << "\n";
    if (!config.force_partial) return std::nullopt;
    log << what << ": continuing with --force-partial; incomplete observations are excluded\n";
  }
  MemorizationResult result = aggregate_scores(table, config.force_partial);
  require(!result.valid_scores().empty(), ErrorCode::compute,
          "every observation was excluded; no scores to report");
  if (loaded.data.labels()) summarize_by_label(result, *loaded.data.labels());
  if (table_out) *table_out = std::move(table);
  return result;
}

// --- commands ------------------------------------------------------------------

int cmd_memscore(const RunConfig& config, std::ostream& log, bool quiet) {
  const Loaded loaded = load(config.dataset);
  const EstimatorSpec spec = effective_spec(config);
  const FoldPlan plan =
      make_fold_plan(loaded.data.size(), config.folds, config.repetitions, config.seed);
  LogProbTable table;
  auto result = kfold_scores(spec, loaded, plan, config, "memscore", log, quiet, &table);
  if (!result) return kExitCompute;

  ReportFile report;
  report.provenance = make_provenance("memscore", config, spec);
  report.plan = plan;
  report.table = std::move(table);
  report.memorization = *result;
  if (report.table->partial())
    report.provenance.notices.push_back("partial table aggregated with --force-partial");

  const fs::path out(config.out);
  write_report(report, out / "report.json");
  write_text_file(out / "scores.csv", scores_csv(*result));
  const auto valid = result->valid_scores();
  write_text_file(out / "score_histogram.csv", score_histogram_csv(valid, config.score_bins));
  write_text_file(out / "score_markers.csv",
                  "name,value\np95," + format_double(quantile(valid, 0.95)) + "\n");
  if (!quiet)
    log << "memscore: median " << format_double(result->summary.median) << ", p95 "
        << format_double(quantile(valid, 0.95)) << "; wrote " << (out / "report.json").string()
        << "\n";
  return kExitOk;
}

int cmd_loo(const RunConfig& config, std::ostream& log, bool quiet) {
  const Loaded loaded = load(config.dataset);
  const EstimatorSpec spec = effective_spec(config);
  const std::vector<std::size_t> targets = positions_of(loaded.data, config.loo_targets);
  const std::size_t n_targets = targets.empty() ? loaded.data.size() : targets.size();
  const std::size_t fits = (n_targets + 1) * config.loo_repetitions;
  if (fits > kLooFitBudget && !config.acknowledge_budget) {
    log << "loo: " << fits << " fits exceed the " << kLooFitBudget
        << "-fit budget; pass --acknowledge-budget to run anyway\n";
    return kExitConfig;
  }
  AuditOptions options{config.workers, progress_to(log, "loo fits", quiet)};
  LooResult result =
      loo_memorization(spec, loaded.data, config.loo_repetitions, config.seed, targets, options);
  for (const auto& w : result.warnings) log << "loo: warning: " << w << "\n";

  ReportFile report;
  report.provenance = make_provenance("loo", config, spec);
  report.loo = result;
  const fs::path out(config.out);
  write_report(report, out / "report.json");
  std::string csv = result.m_se ? "id,u,v,m,u_se,v_se,m_se\n" : "id,u,v,m\n";
  for (std::size_t i = 0; i < result.ids.size(); ++i) {
    csv += std::to_string(result.ids[i]) + "," + format_double(result.u[i]) + "," +
           format_double(result.v[i]) + "," + format_double(result.m[i]);
    if (result.m_se)
      csv += "," + format_double((*result.u_se)[i]) + "," + format_double((*result.v_se)[i]) +
             "," + format_double((*result.m_se)[i]);
    csv += "\n";
  }
  write_text_file(out / "loo_scores.csv", csv);
  return kExitOk;
}

int cmd_nn_ratio(const RunConfig& config, std::ostream& log, bool quiet) {
  Loaded loaded = load(config.dataset);
  if (config.validation) {
    Loaded v = load(*config.validation);
    loaded.validation = std::move(v.data);
  }
  require(loaded.validation.has_value(), ErrorCode::config,
          "nn-ratio needs a validation set (a 'validation' source or synth.validation > 0)");
  const EstimatorSpec spec = effective_spec(config);
  const Dataset& validation = *loaded.validation;

  Dataset samples = validation;
  if (!config.samples_equal_validation) {
    const ModelPtr model =
        fit_estimator(spec, loaded.data, derive_seed(config.seed, SeedStream::sampling, 0));
    require(model->can_sample(), ErrorCode::unsupported,
            std::string("estimator family '") + to_string(spec.family) + "' cannot sample");
    Rng rng(derive_seed(config.seed, SeedStream::sampling, 1));
    samples = Dataset(model->sample(rng, validation.size()), "samples", loaded.data.shape());
  }

  const FoldPlan plan =
      make_fold_plan(loaded.data.size(), config.folds, config.repetitions, config.seed);
  auto result = kfold_scores(spec, loaded, plan, config, "nn-ratio", log, quiet, nullptr);
  if (!result) return kExitCompute;

  const DistanceRatios ratios = distance_ratio(loaded.data, validation, samples, config.workers);
  const RatioReport ratio = ratio_report(ratios, *result, config.bin_width, config.top_fraction);

  ReportFile report;
  report.provenance = make_provenance("nn-ratio", config, spec);
  if (!ratios.downsampled)
    report.provenance.notices.push_back("tabular data: distances computed without downsampling");
  if (config.samples_equal_validation)
    report.provenance.notices.push_back("samples replaced by the validation set (test hook)");
  report.plan = plan;
  report.memorization = *result;
  report.ratio = ratio;

  const fs::path out(config.out);
  write_report(report, out / "report.json");
  write_text_file(out / "ratio_curve.csv", binned_curve_csv(ratio));
  std::string csv = "id,rho,validation_distance,sample_distance,score\n";
  for (std::size_t i = 0; i < ratios.ids.size(); ++i)
    csv += std::to_string(ratios.ids[i]) + "," + format_double(ratios.rho[i]) + "," +
           format_double(ratios.validation_distance[i]) + "," +
           format_double(ratios.sample_distance[i]) + "," + format_double(result->m[i]) + "\n";
  write_text_file(out / "ratios.csv", csv);
  if (!ratio.infinite_ids.empty() && !quiet)
    log << "nn-ratio: " << ratio.infinite_ids.size()
        << " observation(s) have an exact copy among the samples (rho = inf)\n";
  return kExitOk;
}

int cmd_trace(const RunConfig& config, std::ostream& log, bool quiet) {
  const EstimatorSpec spec = effective_spec(config);
  require(is_iterative(spec.family), ErrorCode::config,
          std::string("trace needs an iterative family, got '") + to_string(spec.family) + "'");
  const std::vector<std::size_t> checkpoints =
      config.checkpoints.empty() ? default_checkpoints(spec.epochs) : config.checkpoints;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    require(checkpoints[c] <= spec.epochs, ErrorCode::config,
            "checkpoint " + std::to_string(checkpoints[c]) + " is beyond epoch " +
                std::to_string(spec.epochs));
    require(c == 0 || checkpoints[c] > checkpoints[c - 1], ErrorCode::config,
            "checkpoints must be strictly increasing");
  }
  const Loaded loaded = load(config.dataset);
  const FoldPlan plan =
      make_fold_plan(loaded.data.size(), config.folds, config.repetitions, config.seed);
  AuditOptions options{config.workers, progress_to(log, "trace fits", quiet)};
  const QuantileTrace trace =
      quantile_trace(spec, loaded.data, plan, checkpoints, kTraceLevels, options);

  ReportFile report;
  report.provenance = make_provenance("trace", config, spec);
  report.plan = plan;
  report.trace = trace;
  const fs::path out(config.out);
  write_report(report, out / "report.json");
  std::string csv = "epoch,q95,q999\n";
  for (std::size_t c = 0; c < trace.epochs.size(); ++c)
    csv += std::to_string(trace.epochs[c]) + "," + format_double(trace.quantiles[c][0]) + "," +
           format_double(trace.quantiles[c][1]) + "\n";
  write_text_file(out / "trace.csv", csv);
  return kExitOk;
}

int cmd_mitigate(const RunConfig& config, std::ostream& log, bool quiet) {
  const EstimatorSpec spec = effective_spec(config);
  if (config.strategy == "dp") {
    require(spec.family == Family::dp_histogram, ErrorCode::config,
            "the dp strategy needs the dp-histogram family");
    const Loaded loaded = load(config.dataset);
    const std::size_t T = config.mitigate_repetitions;
    AuditOptions options{config.workers, progress_to(log, "mitigate dp fits", quiet)};
    LooResult loo = loo_memorization(spec, loaded.data, T, config.seed, {}, options);
    require(loo.m_se.has_value(), ErrorCode::config, "the dp bound check needs T >= 2");
    const DpVerdict verdict =
        dp_bound_check(loo.m, *loo.m_se, loo.ids, spec.histogram.epsilon, T);
    ReportFile report;
    report.provenance = make_provenance("mitigate", config, spec);
    report.loo = std::move(loo);
    report.dp_histogram =
        fit_dp_histogram(loaded.data, spec.histogram.axes, spec.histogram.epsilon,
                         derive_seed(config.seed, SeedStream::loo_full_fit, 0));
    report.dp_verdict = verdict;
    write_report(report, fs::path(config.out) / "report.json");
    if (!quiet)
      log << "mitigate dp: max score " << format_double(verdict.max_score) << " +- "
          << format_double(verdict.max_std_error) << " vs epsilon "
          << format_double(verdict.epsilon) << ": " << (verdict.pass ? "pass" : "fail") << "\n";
    return kExitOk;
  }
  require(config.strategy == "outlier", ErrorCode::config,
          "unknown mitigation strategy '" + config.strategy + "'");
  const Loaded loaded = load(config.dataset);
  EstimatorSpec base = spec;
  base.outlier.reset();
  EstimatorSpec wrapped = base;
  wrapped.outlier = config.outlier;
  const FoldPlan plan =
      make_fold_plan(loaded.data.size(), config.folds, config.repetitions, config.seed);
  auto before = kfold_scores(base, loaded, plan, config, "mitigate base", log, quiet, nullptr);
  if (!before) return kExitCompute;
  auto after = kfold_scores(wrapped, loaded, plan, config, "mitigate wrapped", log, quiet, nullptr);
  if (!after) return kExitCompute;
  const MitigationComparison comparison =
      compare_scores("outlier", before->ids, before->m, after->m, loaded.outlier_ids);

  ReportFile report;
  report.provenance = make_provenance("mitigate", config, wrapped);
  report.plan = plan;
  report.memorization = *after;
  report.mitigation = comparison;
  const fs::path out(config.out);
  write_report(report, out / "report.json");
  std::string csv = "id,before,after\n";
  for (std::size_t i = 0; i < comparison.ids.size(); ++i)
    csv += std::to_string(comparison.ids[i]) + "," + format_double(comparison.before[i]) + "," +
           format_double(comparison.after[i]) + "\n";
  write_text_file(out / "mitigation.csv", csv);
  if (!quiet)
    log << "mitigate outlier: max score " << format_double(comparison.max_before) << " -> "
        << format_double(comparison.max_after) << "\n";
  return kExitOk;
}

int cmd_synth(const RunConfig& config, std::ostream& log, bool quiet) {
  require(config.dataset.source == "synth", ErrorCode::config,
          "synth needs a synth dataset source");
  const SynthData s = generate_synth(config.dataset.synth);
  const fs::path out(config.out);
  write_text_file(out / "data.csv", dataset_to_csv(s.data));
  if (s.validation) write_text_file(out / "validation.csv", dataset_to_csv(*s.validation));
  json truth{{"synth", to_json(config.dataset.synth)},
             {"outlier_ids", s.outlier_ids},
             {"duplicate_groups", s.duplicate_groups},
             {"labels", *s.data.labels()}};
  write_text_file(out / "ground_truth.json", truth.dump(1) + "\n");
  if (!quiet) log << "synth: wrote " << s.data.size() << " rows to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

// --- config ----------------------------------------------------------------------

RunConfig run_config_from_json(const json& doc) {
  check_keys(doc,
             {"dataset", "validation", "estimator", "folds", "repetitions", "seed",
              "importance_samples", "checkpoints", "out", "workers", "force_partial",
              "top_fraction", "score_bins", "loo", "nn_ratio", "mitigate"},
             "config");
  RunConfig c;
  const std::string w = "config";
  require(doc.contains("dataset"), ErrorCode::config, "config needs a 'dataset' section");
  c.dataset = source_from_json(doc["dataset"], "dataset");
  if (doc.contains("validation")) c.validation = source_from_json(doc["validation"], "validation");
  if (doc.contains("estimator")) c.estimator = estimator_spec_from_json(doc["estimator"]);
  read(doc, "folds", c.folds, w);
  read(doc, "repetitions", c.repetitions, w);
  read(doc, "seed", c.seed, w);
  if (doc.contains("importance_samples")) {
    std::size_t n = 0;
    read(doc, "importance_samples", n, w);
    c.importance_samples = n;
  }
  read(doc, "checkpoints", c.checkpoints, w);
  read(doc, "out", c.out, w);
  read(doc, "workers", c.workers, w);
  read(doc, "force_partial", c.force_partial, w);
  read(doc, "top_fraction", c.top_fraction, w);
  read(doc, "score_bins", c.score_bins, w);
  if (doc.contains("loo")) {
    const json& j = doc["loo"];
    check_keys(j, {"repetitions", "targets", "acknowledge_budget"}, "loo");
    read(j, "repetitions", c.loo_repetitions, "loo");
    read(j, "targets", c.loo_targets, "loo");
    read(j, "acknowledge_budget", c.acknowledge_budget, "loo");
  }
  if (doc.contains("nn_ratio")) {
    const json& j = doc["nn_ratio"];
    check_keys(j, {"bin_width", "samples_equal_validation"}, "nn_ratio");
    read(j, "bin_width", c.bin_width, "nn_ratio");
    read(j, "samples_equal_validation", c.samples_equal_validation, "nn_ratio");
  }
  if (doc.contains("mitigate")) {
    const json& j = doc["mitigate"];
    check_keys(j, {"strategy", "repetitions", "outlier"}, "mitigate");
    read(j, "strategy", c.strategy, "mitigate");
    read(j, "repetitions", c.mitigate_repetitions, "mitigate");
    if (j.contains("outlier")) {
      check_keys(j["outlier"], {"weight", "variance_factor"}, "mitigate.outlier");
      read(j["outlier"], "weight", c.outlier.weight, "mitigate.outlier");
      read(j["outlier"], "variance_factor", c.outlier.variance_factor, "mitigate.outlier");
    }
  }
  require(c.folds >= 2, ErrorCode::config, "folds must be >= 2");
  require(c.repetitions >= 1, ErrorCode::config, "repetitions must be >= 1");
  require(c.workers >= 1, ErrorCode::config, "workers must be >= 1");
  require(!c.importance_samples || *c.importance_samples >= 1, ErrorCode::config,
          "importance_samples must be >= 1");
  require(c.top_fraction > 0.0 && c.top_fraction <= 1.0, ErrorCode::config,
          "top_fraction must lie in (0, 1]");
  require(c.score_bins >= 1, ErrorCode::config, "score_bins must be >= 1");
  require(c.loo_repetitions >= 1, ErrorCode::config, "loo.repetitions must be >= 1");
  require(c.bin_width > 0.0 && std::isfinite(c.bin_width), ErrorCode::config,
          "nn_ratio.bin_width must be positive");
  require(c.strategy == "outlier" || c.strategy == "dp", ErrorCode::config,
          "unknown mitigation strategy '" + c.strategy + "'");
  require(c.mitigate_repetitions >= 2, ErrorCode::config, "mitigate.repetitions must be >= 2");
  require(c.outlier.weight > 0.0 && c.outlier.weight < 1.0, ErrorCode::config,
          "mitigate.outlier.weight must lie in (0, 1)");
  require(c.outlier.variance_factor >= 1.0, ErrorCode::config,
          "mitigate.outlier.variance_factor must be >= 1");
  return c;
}

json to_json(const RunConfig& c) {
  json j{{"dataset", source_json(c.dataset)},
         {"estimator", to_json(c.estimator)},
         {"folds", c.folds},
         {"repetitions", c.repetitions},
         {"seed", c.seed},
         {"checkpoints", c.checkpoints},
         {"out", c.out},
         {"workers", c.workers},
         {"force_partial", c.force_partial},
         {"top_fraction", c.top_fraction},
         {"score_bins", c.score_bins},
         {"loo",
          {{"repetitions", c.loo_repetitions},
           {"targets", c.loo_targets},
           {"acknowledge_budget", c.acknowledge_budget}}},
         {"nn_ratio",
          {{"bin_width", c.bin_width}, {"samples_equal_validation", c.samples_equal_validation}}},
         {"mitigate",
          {{"strategy", c.strategy},
           {"repetitions", c.mitigate_repetitions},
           {"outlier",
            {{"weight", c.outlier.weight}, {"variance_factor", c.outlier.variance_factor}}}}}};
  if (c.validation) j["validation"] = source_json(*c.validation);
  if (c.importance_samples) j["importance_samples"] = *c.importance_samples;
  return j;
}

std::uint64_t config_hash(const RunConfig& config) {
  json j = to_json(config);
  j.erase("workers");
  j.erase("out");
  return fnv1a64(j.dump());
}

json to_json(const CommandOverrides& o) {
  json j{{"force_partial", o.force_partial},
         {"acknowledge_budget", o.acknowledge_budget},
         {"quiet", o.quiet}};
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  if (o.out) j["out"] = *o.out;
  if (o.repetitions) j["repetitions"] = *o.repetitions;
  if (o.strategy) j["strategy"] = *o.strategy;
  return j;
}

CommandOverrides command_overrides_from_json(const json& doc) {
  if (doc.is_null()) return {};
  check_keys(doc,
             {"seed", "workers", "out", "force_partial", "repetitions", "acknowledge_budget",
              "strategy", "quiet"},
             "options");
  CommandOverrides o;
  const std::string w = "options";
  auto opt = [&](const char* key, auto& field) {
    if (!doc.contains(key)) return;
    typename std::remove_reference_t<decltype(field)>::value_type v{};
    read(doc, key, v, w);
    field = v;
  };
  opt("seed", o.seed);
  opt("workers", o.workers);
  opt("out", o.out);
  opt("repetitions", o.repetitions);
  opt("strategy", o.strategy);
  read(doc, "force_partial", o.force_partial, w);
  read(doc, "acknowledge_budget", o.acknowledge_budget, w);
  read(doc, "quiet", o.quiet, w);
  return o;
}

int run_command(const std::string& command, const json& config_doc,
                const CommandOverrides& overrides, std::ostream& log) {
  static const std::set<std::string> known{"memscore", "loo",      "nn-ratio",
                                           "trace",    "mitigate", "synth"};
  try {
    require(known.count(command) > 0, ErrorCode::config, "unknown command '" + command + "'");
    RunConfig config = run_config_from_json(config_doc);
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.workers) config.workers = *overrides.workers;
    if (overrides.out) config.out = *overrides.out;
    if (overrides.force_partial) config.force_partial = true;
    if (overrides.acknowledge_budget) config.acknowledge_budget = true;
    if (overrides.strategy) config.strategy = *overrides.strategy;
    if (overrides.repetitions) {
      config.loo_repetitions = *overrides.repetitions;
      config.mitigate_repetitions = *overrides.repetitions;
    }
    require(config.workers >= 1, ErrorCode::config, "workers must be >= 1");
    require(config.loo_repetitions >= 1, ErrorCode::config, "T must be >= 1");
    require(config.strategy == "outlier" || config.strategy == "dp", ErrorCode::config,
            "unknown mitigation strategy '" + config.strategy + "'");
    if (command == "mitigate" && config.strategy == "dp")
      require(config.mitigate_repetitions >= 2, ErrorCode::config,
              "the dp bound check needs T >= 2");

    const bool quiet = overrides.quiet;
    if (command == "memscore") return cmd_memscore(config, log, quiet);
    if (command == "loo") return cmd_loo(config, log, quiet);
    if (command == "nn-ratio") return cmd_nn_ratio(config, log, quiet);
    if (command == "trace") return cmd_trace(config, log, quiet);
    if (command == "mitigate") return cmd_mitigate(config, log, quiet);
    return cmd_synth(config, log, quiet);
  } catch (const Error& e) {
    log << command << ": error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::compute ? kExitCompute : kExitConfig;
  } catch (const json::exception& e) {
    log << command << ": configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << command << ": failure: " << e.what() << "\n";
    return kExitCompute;
  }
}

int run_report_command(const std::string& path, std::ostream& out, std::ostream& log) {
  try {
    out << render_report(read_report(path));
    return kExitOk;
  } catch (const Error& e) {
    log << "report: error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::compute ? kExitCompute : kExitConfig;
  }
}

}  // namespace memaudit
