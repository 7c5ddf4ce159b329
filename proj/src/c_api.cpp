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


#include "memaudit/memaudit.h"

#include <cstring>
#include <iostream>
#include <string>

#include "memaudit/commands.hpp"
#include "memaudit/error.hpp"
#include "memaudit/io.hpp"
#include "memaudit/memscore.hpp"
#include "memaudit/model_io.hpp"
#include "memaudit/numerics.hpp"
#include "memaudit/report.hpp"

struct ma_dataset {
  memaudit::Dataset data;
};
struct ma_fold_plan {
  memaudit::FoldPlan plan;
};
struct ma_model {
  memaudit::ModelPtr model;
  memaudit::EstimatorSpec spec;
};
struct ma_result {
  memaudit::MemorizationResult result;
  memaudit::EstimatorSpec spec;
};

namespace {

thread_local std::string last_error;

ma_status status_of(memaudit::ErrorCode code) {
  using memaudit::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return MA_ERR_INVALID_ARGUMENT;
    case ErrorCode::invalid_dataset: return MA_ERR_INVALID_DATASET;
    case ErrorCode::invalid_plan: return MA_ERR_INVALID_PLAN;
    case ErrorCode::config: return MA_ERR_CONFIG;
    case ErrorCode::format: return MA_ERR_FORMAT;
    case ErrorCode::io: return MA_ERR_IO;
    case ErrorCode::version: return MA_ERR_VERSION;
    case ErrorCode::compute: return MA_ERR_COMPUTE;
    case ErrorCode::unsupported: return MA_ERR_UNSUPPORTED;
  }
  return MA_ERR_INTERNAL;
}

template <typename F>
ma_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return MA_OK;
  } catch (const memaudit::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return MA_ERR_CONFIG;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MA_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return MA_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  memaudit::require(p != nullptr, memaudit::ErrorCode::invalid_argument,
                    std::string(what) + " must not be NULL");
}

memaudit::EstimatorSpec parse_spec(const char* text) {
  need(text, "estimator_json");
  try {
    return memaudit::estimator_spec_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    memaudit::fail(memaudit::ErrorCode::config,
                   "estimator JSON parse error at byte " + std::to_string(e.byte));
  }
}

memaudit::Matrix copy_values(const double* values, std::size_t rows, std::size_t cols) {
  need(values, "values");
  memaudit::require(rows >= 1 && cols >= 1, memaudit::ErrorCode::invalid_dataset,
                    "dataset needs at least one row and column");
  memaudit::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(m.data(), values, rows * cols * sizeof(double));
  return m;
}

}  // namespace

extern "C" {

const char* ma_version(void) { return memaudit::kToolVersion; }

const char* ma_status_string(ma_status status) {
  switch (status) {
    case MA_OK: return "ok";
    case MA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MA_ERR_INVALID_DATASET: return "invalid dataset";
    case MA_ERR_INVALID_PLAN: return "invalid plan";
    case MA_ERR_CONFIG: return "configuration error";
    case MA_ERR_FORMAT: return "format error";
    case MA_ERR_IO: return "i/o error";
    case MA_ERR_VERSION: return "version mismatch";
    case MA_ERR_COMPUTE: return "compute failure";
    case MA_ERR_UNSUPPORTED: return "unsupported";
    case MA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ma_last_error(void) { return last_error.c_str(); }

ma_status ma_dataset_create(const double* values, size_t rows, size_t cols, ma_dataset** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ma_dataset{memaudit::Dataset(copy_values(values, rows, cols), "c-api")};
  });
}

ma_status ma_dataset_create_images(const double* values, size_t count, size_t height,
                                   size_t width, size_t channels, ma_dataset** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ma_dataset{memaudit::Dataset(copy_values(values, count, height * width * channels),
                                            "c-api", memaudit::ImageShape{height, width, channels})};
  });
}

ma_status ma_dataset_load_csv(const char* path, int has_header, ma_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ma_dataset{memaudit::load_csv(path, has_header != 0)};
  });
}

ma_status ma_dataset_load_idx(const char* path, ma_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ma_dataset{memaudit::load_idx(path)};
  });
}

size_t ma_dataset_size(const ma_dataset* data) { return data ? data->data.size() : 0; }
size_t ma_dataset_dim(const ma_dataset* data) { return data ? data->data.dim() : 0; }
void ma_dataset_free(ma_dataset* data) { delete data; }

ma_status ma_fold_plan_create(size_t n, size_t folds, size_t repetitions, uint64_t seed,
                              ma_fold_plan** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ma_fold_plan{memaudit::make_fold_plan(n, folds, repetitions, seed)};
  });
}

ma_status ma_fold_plan_holdout(const ma_fold_plan* plan, size_t rep, size_t fold,
                               const size_t** indices, size_t* count) {
  return guarded([&] {
    need(plan, "plan");
    need(indices, "indices");
    need(count, "count");
    memaudit::require(rep < plan->plan.repetitions() && fold < plan->plan.folds(),
                      memaudit::ErrorCode::invalid_argument, "holdout coordinates out of range");
    const auto h = plan->plan.holdout(rep, fold);
    *indices = h.data();
    *count = h.size();
  });
}

void ma_fold_plan_free(ma_fold_plan* plan) { delete plan; }

ma_status ma_model_fit(const char* estimator_json, const ma_dataset* train, uint64_t seed,
                       ma_model** out) {
  return guarded([&] {
    need(train, "train");
    need(out, "out");
    memaudit::EstimatorSpec spec = parse_spec(estimator_json);
    auto model = memaudit::fit_estimator(spec, train->data, seed);
    *out = new ma_model{std::move(model), std::move(spec)};
  });
}

ma_status ma_model_log_density(const ma_model* model, const double* x, size_t dim,
                               uint64_t eval_seed, double* out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    *out = model->model->log_density({x, dim}, eval_seed);
  });
}

ma_status ma_model_sample(const ma_model* model, uint64_t seed, size_t count, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    memaudit::require(model->model->can_sample(), memaudit::ErrorCode::unsupported,
                      "this model cannot sample");
    memaudit::Rng rng(seed);
    const memaudit::Matrix s = model->model->sample(rng, count);
    std::memcpy(out, s.data(), static_cast<std::size_t>(s.size()) * sizeof(double));
  });
}

ma_status ma_model_save(const ma_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    memaudit::FitProvenance prov;
    prov.spec_hash = memaudit::spec_hash(model->spec);
    memaudit::save_model(*model->model, path, prov);
  });
}

ma_status ma_model_load(const char* path, ma_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto model = memaudit::load_model(path);
    memaudit::EstimatorSpec spec;
    spec.family = model->family();
    *out = new ma_model{std::move(model), spec};
  });
}

void ma_model_free(ma_model* model) { delete model; }

ma_status ma_memscore(const char* estimator_json, const ma_dataset* data,
                      const ma_fold_plan* plan, size_t workers, ma_result** out) {
  return guarded([&] {
    need(data, "data");
    need(plan, "plan");
    need(out, "out");
    memaudit::EstimatorSpec spec = parse_spec(estimator_json);
    memaudit::AuditOptions options;
    options.workers = workers;
    const auto table = memaudit::compute_logprob_table(spec, data->data, plan->plan, options);
    *out = new ma_result{memaudit::aggregate_scores(table), std::move(spec)};
  });
}

size_t ma_result_size(const ma_result* result) { return result ? result->result.ids.size() : 0; }

ma_status ma_result_scores(const ma_result* result, int64_t* ids, double* u, double* v,
                           double* m) {
  return guarded([&] {
    need(result, "result");
    const auto& r = result->result;
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      if (ids) ids[i] = r.ids[i];
      if (u) u[i] = r.u[i];
      if (v) v[i] = r.v[i];
      if (m) m[i] = r.m[i];
    }
  });
}

ma_status ma_result_top_fraction(const ma_result* result, double fraction, int64_t* ids,
                                 size_t capacity, size_t* count) {
  return guarded([&] {
    need(result, "result");
    need(count, "count");
    const auto top = memaudit::top_fraction(result->result, fraction);
    *count = top.size();
    memaudit::require(ids != nullptr || top.empty() || capacity == 0,
                      memaudit::ErrorCode::invalid_argument, "ids must not be NULL");
    memaudit::require(capacity >= top.size() || capacity == 0,
                      memaudit::ErrorCode::invalid_argument,
                      "capacity " + std::to_string(capacity) + " is below the " +
                          std::to_string(top.size()) + " ids selected");
    if (capacity > 0)
      for (std::size_t i = 0; i < top.size(); ++i) ids[i] = top[i];
  });
}

ma_status ma_result_write_report(const ma_result* result, const char* path) {
  return guarded([&] {
    need(result, "result");
    need(path, "path");
    memaudit::ReportFile report;
    report.provenance.command = "c-api memscore";
    report.provenance.estimator = memaudit::to_json(result->spec);
    report.provenance.spec_hash = memaudit::spec_hash(result->spec);
    report.provenance.seed = result->result.plan.seed();
    report.plan = result->result.plan;
    report.memorization = result->result;
    memaudit::write_report(report, path);
  });
}

void ma_result_free(ma_result* result) { delete result; }

ma_status ma_log_sum_exp(const double* values, size_t count, double* out) {
  return guarded([&] {
    need(out, "out");
    memaudit::require(values != nullptr || count == 0, memaudit::ErrorCode::invalid_argument,
                      "values must not be NULL");
    *out = memaudit::log_sum_exp({values, count});
  });
}

ma_status ma_log_mean_exp(const double* values, size_t count, double* out) {
  return guarded([&] {
    need(out, "out");
    memaudit::require(values != nullptr || count == 0, memaudit::ErrorCode::invalid_argument,
                      "values must not be NULL");
    *out = memaudit::log_mean_exp({values, count});
  });
}

ma_status ma_run_command(const char* command, const char* config_json, const char* options_json,
                         int* exit_code) {
  return guarded([&] {
    need(command, "command");
    need(config_json, "config_json");
    need(exit_code, "exit_code");
    nlohmann::json config;
    nlohmann::json options;
    try {
      config = nlohmann::json::parse(config_json);
      if (options_json) options = nlohmann::json::parse(options_json);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << command << ": configuration parse error at byte " << e.byte << "\n";
      *exit_code = memaudit::kExitConfig;
      return;
    }
    memaudit::CommandOverrides overrides;
    try {
      overrides = memaudit::command_overrides_from_json(options);
    } catch (const memaudit::Error& e) {
      std::cerr << command << ": " << e.what() << "\n";
      *exit_code = memaudit::kExitConfig;
      return;
    }
    *exit_code = memaudit::run_command(command, config, overrides, std::cerr);
  });
}

ma_status ma_render_report(const char* path, char** text) {
  return guarded([&] {
    need(path, "path");
    need(text, "text");
    const std::string rendered = memaudit::render_report(memaudit::read_report(path));
    *text = static_cast<char*>(std::malloc(rendered.size() + 1));
    memaudit::require(*text != nullptr, memaudit::ErrorCode::compute, "out of memory");
    std::memcpy(*text, rendered.c_str(), rendered.size() + 1);
  });
}

void ma_string_free(char* text) { std::free(text); }

}  // extern "C"
