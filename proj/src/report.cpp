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


#include "memaudit/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "memaudit/error.hpp"
#include "memaudit/io.hpp"

namespace memaudit {

using nlohmann::json;

namespace {

json numbers(std::span<const double> values) {
  json a = json::array();
  for (double v : values) a.push_back(number_to_json(v));
  return a;
}

std::vector<double> numbers_from(const json& a) {
  require(a.is_array(), ErrorCode::format, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(a.size());
  for (const json& v : a) out.push_back(number_from_json(v));
  return out;
}

std::string hash_text(std::uint64_t h) { return hex64(h); }

std::uint64_t hash_from(const json& v) {
  require(v.is_string(), ErrorCode::format, "expected a hex hash string");
  const std::string s = v.get<std::string>();
  std::size_t used = 0;
  std::uint64_t h = 0;
  try {
    h = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == s.size() && !s.empty(), ErrorCode::format, "bad hash string '" + s + "'");
  return h;
}

const json& field(const json& obj, const char* key) {
  require(obj.is_object() && obj.contains(key), ErrorCode::format,
          std::string("report is missing field '") + key + "'");
  return obj.at(key);
}

template <typename T>
T get(const json& obj, const char* key) {
  try {
    return field(obj, key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("bad field '") + key + "': " + e.what());
  }
}

// --- sections ------------------------------------------------------------------

json plan_json(const FoldPlan& plan) {
  json holdouts = json::array();
  for (std::size_t r = 0; r < plan.repetitions(); ++r)
    for (std::size_t k = 0; k < plan.folds(); ++k) {
      const auto h = plan.holdout(r, k);
      holdouts.push_back(std::vector<std::size_t>(h.begin(), h.end()));
    }
  return {{"n", plan.n()},
          {"folds", plan.folds()},
          {"repetitions", plan.repetitions()},
          {"seed", plan.seed()},
          {"holdouts", holdouts}};
}

FoldPlan plan_from(const json& j) {
  return FoldPlan::from_holdouts(get<std::size_t>(j, "n"), get<std::size_t>(j, "folds"),
                                 get<std::size_t>(j, "repetitions"),
                                 get<std::uint64_t>(j, "seed"),
                                 get<std::vector<std::vector<std::size_t>>>(j, "holdouts"));
}

json summary_json(const ScoreSummary& s) {
  json p = json::array();
  for (const auto& [level, value] : s.percentiles)
    p.push_back({number_to_json(level), number_to_json(value)});
  return {{"count", s.count},
          {"mean", number_to_json(s.mean)},
          {"median", number_to_json(s.median)},
          {"skewness", number_to_json(s.skewness)},
          {"min", number_to_json(s.min)},
          {"max", number_to_json(s.max)},
          {"percentiles", p}};
}

ScoreSummary summary_from(const json& j) {
  ScoreSummary s;
  s.count = get<std::size_t>(j, "count");
  s.mean = number_from_json(field(j, "mean"));
  s.median = number_from_json(field(j, "median"));
  s.skewness = number_from_json(field(j, "skewness"));
  s.min = number_from_json(field(j, "min"));
  s.max = number_from_json(field(j, "max"));
  for (const json& p : field(j, "percentiles")) {
    require(p.is_array() && p.size() == 2, ErrorCode::format, "bad percentile entry");
    s.percentiles.emplace_back(number_from_json(p[0]), number_from_json(p[1]));
  }
  return s;
}

json memorization_json(const MemorizationResult& r) {
  json labels = json::array();
  for (const LabelSummary& l : r.by_label)
    labels.push_back({{"label", l.label}, {"summary", summary_json(l.summary)}});
  std::vector<int> excluded(r.excluded.begin(), r.excluded.end());
  return {{"spec_hash", hash_text(r.spec_hash)},
          {"ids", r.ids},
          {"u", numbers(r.u)},
          {"v", numbers(r.v)},
          {"m", numbers(r.m)},
          {"heldout_spread", numbers(r.heldout_spread)},
          {"excluded", excluded},
          {"summary", summary_json(r.summary)},
          {"by_label", labels}};
}

MemorizationResult memorization_from(const json& j, const std::optional<FoldPlan>& plan) {
  require(plan.has_value(), ErrorCode::format, "memorization section needs a fold plan");
  MemorizationResult r;
  r.plan = *plan;
  r.spec_hash = hash_from(field(j, "spec_hash"));
  r.ids = get<std::vector<std::int64_t>>(j, "ids");
  r.u = numbers_from(field(j, "u"));
  r.v = numbers_from(field(j, "v"));
  r.m = numbers_from(field(j, "m"));
  r.heldout_spread = numbers_from(field(j, "heldout_spread"));
  for (int e : get<std::vector<int>>(j, "excluded")) r.excluded.push_back(e != 0);
  const std::size_t n = r.ids.size();
  require(r.u.size() == n && r.v.size() == n && r.m.size() == n &&
              r.heldout_spread.size() == n && r.excluded.size() == n,
          ErrorCode::format, "memorization arrays have different lengths");
  r.summary = summary_from(field(j, "summary"));
  for (const json& l : field(j, "by_label"))
    r.by_label.push_back({get<int>(l, "label"), summary_from(field(l, "summary"))});
  return r;
}

json table_json(const LogProbTable& t) {
  json failures = json::array();
  for (const FitFailure& f : t.failures())
    failures.push_back({{"rep", f.rep}, {"fold", f.fold}, {"message", f.message}});
  return {{"spec_hash", hash_text(t.spec_hash())},
          {"ids", t.ids()},
          {"layout", "rep-major, then fold, then observation"},
          {"entries", numbers(t.entries())},
          {"failures", failures}};
}

LogProbTable table_from(const json& j, const std::optional<FoldPlan>& plan) {
  require(plan.has_value(), ErrorCode::format, "table section needs a fold plan");
  LogProbTable t(*plan, get<std::vector<std::int64_t>>(j, "ids"), hash_from(field(j, "spec_hash")));
  t.set_entries(numbers_from(field(j, "entries")));
  for (const json& f : field(j, "failures"))
    t.add_failure({get<std::size_t>(f, "rep"), get<std::size_t>(f, "fold"),
                   get<std::string>(f, "message")});
  return t;
}

json loo_json(const LooResult& r) {
  json j{{"ids", r.ids},
         {"u", numbers(r.u)},
         {"v", numbers(r.v)},
         {"m", numbers(r.m)},
         {"repetitions", r.repetitions},
         {"seed", r.seed},
         {"spec_hash", hash_text(r.spec_hash)},
         {"warnings", r.warnings}};
  if (r.u_se) j["u_se"] = numbers(*r.u_se);
  if (r.v_se) j["v_se"] = numbers(*r.v_se);
  if (r.m_se) j["m_se"] = numbers(*r.m_se);
  return j;
}

LooResult loo_from(const json& j) {
  LooResult r;
  r.ids = get<std::vector<std::int64_t>>(j, "ids");
  r.u = numbers_from(field(j, "u"));
  r.v = numbers_from(field(j, "v"));
  r.m = numbers_from(field(j, "m"));
  r.repetitions = get<std::size_t>(j, "repetitions");
  r.seed = get<std::uint64_t>(j, "seed");
  r.spec_hash = hash_from(field(j, "spec_hash"));
  r.warnings = get<std::vector<std::string>>(j, "warnings");
  if (j.contains("u_se")) r.u_se = numbers_from(j["u_se"]);
  if (j.contains("v_se")) r.v_se = numbers_from(j["v_se"]);
  if (j.contains("m_se")) r.m_se = numbers_from(j["m_se"]);
  return r;
}

json ratio_json(const RatioReport& r) {
  json bins = json::array();
  for (const RatioBin& b : r.bins)
    bins.push_back({{"lo", number_to_json(b.lo)},
                    {"hi", number_to_json(b.hi)},
                    {"count", b.count},
                    {"mean", number_to_json(b.mean)},
                    {"std_error", number_to_json(b.std_error)}});
  return {{"bin_width", number_to_json(r.bin_width)},
          {"fraction", number_to_json(r.fraction)},
          {"bins", bins},
          {"bin_index", r.bin_index},
          {"ids", r.ids},
          {"rho", numbers(r.rho)},
          {"scores", numbers(r.scores)},
          {"top_rho", numbers(r.top_rho)},
          {"regular_rho", numbers(r.regular_rho)},
          {"infinite_ids", r.infinite_ids},
          {"suggests_memorization", r.suggests_memorization},
          {"pearson_r", number_to_json(r.pearson_r)}};
}

RatioReport ratio_from(const json& j) {
  RatioReport r;
  r.bin_width = number_from_json(field(j, "bin_width"));
  r.fraction = number_from_json(field(j, "fraction"));
  for (const json& b : field(j, "bins"))
    r.bins.push_back({number_from_json(field(b, "lo")), number_from_json(field(b, "hi")),
                      get<std::size_t>(b, "count"), number_from_json(field(b, "mean")),
                      number_from_json(field(b, "std_error"))});
  r.bin_index = get<std::vector<std::int64_t>>(j, "bin_index");
  r.ids = get<std::vector<std::int64_t>>(j, "ids");
  r.rho = numbers_from(field(j, "rho"));
  r.scores = numbers_from(field(j, "scores"));
  r.top_rho = numbers_from(field(j, "top_rho"));
  r.regular_rho = numbers_from(field(j, "regular_rho"));
  r.infinite_ids = get<std::vector<std::int64_t>>(j, "infinite_ids");
  r.suggests_memorization = get<std::size_t>(j, "suggests_memorization");
  r.pearson_r = number_from_json(field(j, "pearson_r"));
  return r;
}

json trace_json(const QuantileTrace& t) {
  json q = json::array();
  for (const auto& row : t.quantiles) q.push_back(numbers(row));
  json results = json::array();
  for (const auto& r : t.results) results.push_back(memorization_json(r));
  return {{"epochs", t.epochs}, {"levels", numbers(t.levels)}, {"quantiles", q},
          {"results", results}};
}

QuantileTrace trace_from(const json& j, const std::optional<FoldPlan>& plan) {
  QuantileTrace t;
  t.epochs = get<std::vector<std::size_t>>(j, "epochs");
  t.levels = numbers_from(field(j, "levels"));
  for (const json& row : field(j, "quantiles")) t.quantiles.push_back(numbers_from(row));
  for (const json& r : field(j, "results")) t.results.push_back(memorization_from(r, plan));
  require(t.quantiles.size() == t.epochs.size(), ErrorCode::format,
          "trace quantile rows do not match its epochs");
  return t;
}

json histogram_json(const DpHistogram& h) {
  json axes = json::array();
  for (const HistogramAxis& a : h.axes)
    axes.push_back({{"lo", number_to_json(a.lo)}, {"hi", number_to_json(a.hi)}, {"bins", a.bins}});
  return {{"axes", axes},
          {"masses", numbers(h.masses)},
          {"epsilon", number_to_json(h.epsilon)},
          {"seed", h.seed}};
}

DpHistogram histogram_from(const json& j) {
  DpHistogram h;
  for (const json& a : field(j, "axes"))
    h.axes.push_back({number_from_json(field(a, "lo")), number_from_json(field(a, "hi")),
                      get<std::size_t>(a, "bins")});
  h.masses = numbers_from(field(j, "masses"));
  h.epsilon = number_from_json(field(j, "epsilon"));
  h.seed = get<std::uint64_t>(j, "seed");
  return h;
}

json verdict_json(const DpVerdict& v) {
  return {{"epsilon", number_to_json(v.epsilon)},
          {"max_score", number_to_json(v.max_score)},
          {"max_std_error", number_to_json(v.max_std_error)},
          {"max_id", v.max_id},
          {"threshold", number_to_json(v.threshold)},
          {"repetitions", v.repetitions},
          {"pass", v.pass},
          {"caveat", v.caveat}};
}

DpVerdict verdict_from(const json& j) {
  DpVerdict v;
  v.epsilon = number_from_json(field(j, "epsilon"));
  v.max_score = number_from_json(field(j, "max_score"));
  v.max_std_error = number_from_json(field(j, "max_std_error"));
  v.max_id = get<std::int64_t>(j, "max_id");
  v.threshold = number_from_json(field(j, "threshold"));
  v.repetitions = get<std::size_t>(j, "repetitions");
  v.pass = get<bool>(j, "pass");
  v.caveat = get<std::string>(j, "caveat");
  return v;
}

json mitigation_json(const MitigationComparison& c) {
  return {{"strategy", c.strategy},
          {"ids", c.ids},
          {"before", numbers(c.before)},
          {"after", numbers(c.after)},
          {"focus_ids", c.focus_ids},
          {"max_before", number_to_json(c.max_before)},
          {"max_after", number_to_json(c.max_after)},
          {"focus_max_before", number_to_json(c.focus_max_before)},
          {"focus_max_after", number_to_json(c.focus_max_after)}};
}

MitigationComparison mitigation_from(const json& j) {
  MitigationComparison c;
  c.strategy = get<std::string>(j, "strategy");
  c.ids = get<std::vector<std::int64_t>>(j, "ids");
  c.before = numbers_from(field(j, "before"));
  c.after = numbers_from(field(j, "after"));
  c.focus_ids = get<std::vector<std::int64_t>>(j, "focus_ids");
  c.max_before = number_from_json(field(j, "max_before"));
  c.max_after = number_from_json(field(j, "max_after"));
  c.focus_max_before = number_from_json(field(j, "focus_max_before"));
  c.focus_max_after = number_from_json(field(j, "focus_max_after"));
  return c;
}

json provenance_json(const Provenance& p) {
  json j{{"tool_version", p.tool_version}, {"command", p.command}, {"notices", p.notices}};
  if (p.estimator) j["estimator"] = *p.estimator;
  if (p.spec_hash) j["spec_hash"] = hash_text(*p.spec_hash);
  if (p.config_hash) j["config_hash"] = hash_text(*p.config_hash);
  if (p.seed) j["seed"] = *p.seed;
  if (p.timestamp) j["timestamp"] = *p.timestamp;
  return j;
}

Provenance provenance_from(const json& j) {
  Provenance p;
  p.tool_version = get<std::string>(j, "tool_version");
  p.command = get<std::string>(j, "command");
  p.notices = get<std::vector<std::string>>(j, "notices");
  if (j.contains("estimator")) p.estimator = j["estimator"];
  if (j.contains("spec_hash")) p.spec_hash = hash_from(j["spec_hash"]);
  if (j.contains("config_hash")) p.config_hash = hash_from(j["config_hash"]);
  if (j.contains("seed")) p.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("timestamp")) p.timestamp = get<std::string>(j, "timestamp");
  return p;
}

}  // namespace

json number_to_json(double value) {
  if (std::isfinite(value)) return value;
  return format_double(value);
}

double number_from_json(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(ErrorCode::format, "expected a number, got " + value.dump());
}

json to_json(const ReportFile& r) {
  json j{{"format", kReportFormat},
         {"version", kReportVersion},
         {"provenance", provenance_json(r.provenance)}};
  if (r.plan) j["fold_plan"] = plan_json(*r.plan);
  if (r.table) j["logprob_table"] = table_json(*r.table);
  if (r.memorization) j["memorization"] = memorization_json(*r.memorization);
  if (r.loo) j["loo"] = loo_json(*r.loo);
  if (r.ratio) j["distance_ratio"] = ratio_json(*r.ratio);
  if (r.trace) j["quantile_trace"] = trace_json(*r.trace);
  if (r.dp_histogram) j["dp_histogram"] = histogram_json(*r.dp_histogram);
  if (r.dp_verdict) j["dp_verdict"] = verdict_json(*r.dp_verdict);
  if (r.mitigation) j["mitigation"] = mitigation_json(*r.mitigation);
  return j;
}

ReportFile report_from_json(const json& doc) {
  require(doc.is_object(), ErrorCode::format, "report must be a JSON object");
  require(doc.contains("format") && doc["format"] == kReportFormat, ErrorCode::format,
          "not a memaudit report");
  require(doc.contains("version") && doc["version"].is_number_integer(), ErrorCode::format,
          "report has no integer version");
  const auto version = doc["version"].get<std::int64_t>();
  require(version == kReportVersion, ErrorCode::version,
          "unsupported report version " + std::to_string(version) + " (this build reads " +
              std::to_string(kReportVersion) + ")");
  ReportFile r;
  r.provenance = provenance_from(field(doc, "provenance"));
  if (doc.contains("fold_plan")) r.plan = plan_from(doc["fold_plan"]);
  if (doc.contains("logprob_table")) r.table = table_from(doc["logprob_table"], r.plan);
  if (doc.contains("memorization"))
    r.memorization = memorization_from(doc["memorization"], r.plan);
  if (doc.contains("loo")) r.loo = loo_from(doc["loo"]);
  if (doc.contains("distance_ratio")) r.ratio = ratio_from(doc["distance_ratio"]);
  if (doc.contains("quantile_trace")) r.trace = trace_from(doc["quantile_trace"], r.plan);
  if (doc.contains("dp_histogram")) r.dp_histogram = histogram_from(doc["dp_histogram"]);
  if (doc.contains("dp_verdict")) r.dp_verdict = verdict_from(doc["dp_verdict"]);
  if (doc.contains("mitigation")) r.mitigation = mitigation_from(doc["mitigation"]);
  return r;
}

std::string serialize_report(const ReportFile& report) { return to_json(report).dump(1) + "\n"; }

ReportFile parse_report(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, "report parse error at byte " + std::to_string(e.byte) + ": " +
                                e.what());
  }
  return report_from_json(doc);
}

void write_report(const ReportFile& report, const std::filesystem::path& path) {
  write_text_file(path, serialize_report(report));
}

ReportFile read_report(const std::filesystem::path& path) {
  return parse_report(read_text_file(path));
}

std::string render_report(const ReportFile& r) {
  std::ostringstream os;
  const Provenance& p = r.provenance;
  os << "memaudit report v" << kReportVersion << " (" << p.command << ", tool " << p.tool_version
     << ")\n";
  if (p.spec_hash) os << "  spec hash    " << hex64(*p.spec_hash) << "\n";
  if (p.config_hash) os << "  config hash  " << hex64(*p.config_hash) << "\n";
  if (p.seed) os << "  seed         " << *p.seed << "\n";
  for (const auto& note : p.notices) os << "  notice: " << note << "\n";
  if (r.plan)
    os << "fold plan: n=" << r.plan->n() << " K=" << r.plan->folds()
       << " L=" << r.plan->repetitions() << "\n";
  if (r.table)
    os << "log-probability table: " << r.table->entries().size() << " entries, "
       << r.table->failures().size() << " failed fits\n";
  auto summary = [&](const ScoreSummary& s, const char* indent) {
    os << indent << "count " << s.count << "  mean " << format_double(s.mean) << "  median "
       << format_double(s.median) << "  skewness " << format_double(s.skewness) << "\n";
    os << indent << "min " << format_double(s.min) << "  max " << format_double(s.max) << "\n";
    for (const auto& [level, value] : s.percentiles)
      os << indent << "q" << format_double(level) << " " << format_double(value) << "\n";
  };
  if (r.memorization) {
    os << "memorization scores:\n";
    summary(r.memorization->summary, "  ");
    for (const LabelSummary& l : r.memorization->by_label) {
      os << "  label " << l.label << ":\n";
      summary(l.summary, "    ");
    }
  }
  if (r.loo) {
    double best = -std::numeric_limits<double>::infinity();
    for (double m : r.loo->m) best = std::max(best, m);
    os << "leave-one-out: " << r.loo->ids.size() << " observations, T=" << r.loo->repetitions
       << ", max score " << format_double(best) << (r.loo->m_se ? "" : " (no MC errors)") << "\n";
    for (const auto& w : r.loo->warnings) os << "  warning: " << w << "\n";
  }
  if (r.ratio) {
    os << "distance ratio: pearson r " << format_double(r.ratio->pearson_r) << ", "
       << r.ratio->suggests_memorization << " with rho > 1, " << r.ratio->infinite_ids.size()
       << " infinite\n";
    for (const RatioBin& b : r.ratio->bins)
      os << "  [" << format_double(b.lo) << ", " << format_double(b.hi) << ") n=" << b.count
         << " mean " << format_double(b.mean) << " se " << format_double(b.std_error) << "\n";
  }
  if (r.trace) {
    os << "quantile trace:\n";
    for (std::size_t c = 0; c < r.trace->epochs.size(); ++c) {
      os << "  epoch " << r.trace->epochs[c];
      for (std::size_t q = 0; q < r.trace->levels.size(); ++q)
        os << "  q" << format_double(r.trace->levels[q]) << " "
           << format_double(r.trace->quantiles[c][q]);
      os << "\n";
    }
  }
  if (r.dp_verdict) {
    const DpVerdict& v = *r.dp_verdict;
    os << "DP bound check (epsilon " << format_double(v.epsilon) << ", T=" << v.repetitions
       << "): max score " << format_double(v.max_score) << " +- "
       << format_double(v.max_std_error) << " at id " << v.max_id << " -> "
       << (v.pass ? "PASS" : "FAIL") << "\n  " << v.caveat << "\n";
  }
  if (r.mitigation) {
    const MitigationComparison& c = *r.mitigation;
    os << "mitigation (" << c.strategy << "): max score " << format_double(c.max_before)
       << " -> " << format_double(c.max_after) << "\n";
    if (!c.focus_ids.empty())
      os << "  focus max " << format_double(c.focus_max_before) << " -> "
         << format_double(c.focus_max_after) << "\n";
  }
  return os.str();
}

}  // namespace memaudit
