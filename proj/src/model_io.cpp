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


#include "memaudit/model_io.hpp"

#include "memaudit/error.hpp"
#include "memaudit/io.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/report.hpp"
#include "memaudit/vae.hpp"

namespace memaudit {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_to_json(m(r, c)));
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", rows}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& values = j.at("values");
  require(values.is_array() && static_cast<Eigen::Index>(values.size()) == rows,
          ErrorCode::format, "matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = values[static_cast<std::size_t>(r)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::format,
            "matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v[i]));
  return a;
}

Vector vector_from(const json& a) {
  require(a.is_array(), ErrorCode::format, "expected a vector");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_from_json(a[i]);
  return v;
}

json gaussian_json(const GaussianParams& p) {
  json j{{"mean", vector_json(p.mean)},
         {"mode", p.mode == CovarianceMode::full ? "full" : "diagonal"}};
  if (p.mode == CovarianceMode::full)
    j["covariance"] = matrix_json(p.covariance);
  else
    j["variances"] = vector_json(p.variances);
  return j;
}

GaussianParams gaussian_from(const json& j) {
  GaussianParams p;
  p.mean = vector_from(j.at("mean"));
  p.mode = j.at("mode").get<std::string>() == "full" ? CovarianceMode::full : CovarianceMode::diagonal;
  if (p.mode == CovarianceMode::full)
    p.covariance = matrix_from(j.at("covariance"));
  else
    p.variances = vector_from(j.at("variances"));
  return p;
}

json params_json(const DensityModel& model) {
  if (const auto* m = dynamic_cast<const OutlierMixtureModel*>(&model))
    return {{"kind", "outlier-mixture"},
            {"weight", number_to_json(m->weight())},
            {"broad", gaussian_json(m->broad())},
            {"base", params_json(*m->base())}};
  if (const auto* m = dynamic_cast<const ConstantModel*>(&model))
    return {{"kind", "constant"}, {"dim", m->dim()}, {"log_density", number_to_json(m->value())}};
  if (const auto* m = dynamic_cast<const GaussianModel*>(&model)) {
    json j = gaussian_json(m->params());
    j["kind"] = "gaussian-mle";
    j["degenerate"] = m->degenerate();
    return j;
  }
  if (const auto* m = dynamic_cast<const KdeModel*>(&model))
    return {{"kind", "kde"},
            {"bandwidth", number_to_json(m->params().bandwidth)},
            {"points", matrix_json(m->params().points)}};
  if (const auto* m = dynamic_cast<const GmmModel*>(&model))
    return {{"kind", "gmm"},
            {"weights", vector_json(m->params().weights)},
            {"means", matrix_json(m->params().means)},
            {"variances", matrix_json(m->params().variances)}};
  if (const auto* m = dynamic_cast<const VaeDensityModel*>(&model)) {
    EstimatorSpec spec;
    spec.family = Family::vae;
    spec.vae = m->model().settings();
    json params = json::array();
    for (double p : m->model().parameters()) params.push_back(number_to_json(p));
    return {{"kind", "vae"},
            {"settings", to_json(spec)},
            {"input_dim", m->model().input_dim()},
            {"logit_space", m->logit_space()},
            {"importance_samples", m->importance_samples()},
            {"parameters", params}};
  }
  if (const auto* m = dynamic_cast<const DpHistogramModel*>(&model)) {
    const DpHistogram& h = m->histogram();
    json axes = json::array();
    for (const HistogramAxis& a : h.axes)
      axes.push_back({{"lo", number_to_json(a.lo)}, {"hi", number_to_json(a.hi)}, {"bins", a.bins}});
    json masses = json::array();
    for (double x : h.masses) masses.push_back(number_to_json(x));
    return {{"kind", "dp-histogram"},
            {"axes", axes},
            {"masses", masses},
            {"epsilon", number_to_json(h.epsilon)},
            {"seed", h.seed}};
  }
  fail(ErrorCode::unsupported, "model type cannot be serialized");
}

ModelPtr params_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "outlier-mixture")
    return std::make_shared<OutlierMixtureModel>(params_from(j.at("base")),
                                                 gaussian_from(j.at("broad")),
                                                 number_from_json(j.at("weight")));
  if (kind == "constant")
    return std::make_shared<ConstantModel>(j.at("dim").get<std::size_t>(),
                                           number_from_json(j.at("log_density")));
  if (kind == "gaussian-mle")
    return std::make_shared<GaussianModel>(gaussian_from(j), j.at("degenerate").get<bool>());
  if (kind == "kde")
    return std::make_shared<KdeModel>(
        KdeParams{matrix_from(j.at("points")), number_from_json(j.at("bandwidth"))});
  if (kind == "gmm")
    return std::make_shared<GmmModel>(GmmParams{vector_from(j.at("weights")),
                                                matrix_from(j.at("means")),
                                                matrix_from(j.at("variances"))});
  if (kind == "vae") {
    const EstimatorSpec spec = estimator_spec_from_json(j.at("settings"));
    VaeModel model = VaeModel::initialize(j.at("input_dim").get<std::size_t>(), spec.vae, 0);
    std::vector<double> params;
    for (const json& p : j.at("parameters")) params.push_back(number_from_json(p));
    model.set_parameters(params);
    return std::make_shared<VaeDensityModel>(std::move(model), j.at("logit_space").get<bool>(),
                                             j.at("importance_samples").get<std::size_t>());
  }
  if (kind == "dp-histogram") {
    DpHistogram h;
    for (const json& a : j.at("axes"))
      h.axes.push_back({number_from_json(a.at("lo")), number_from_json(a.at("hi")),
                        a.at("bins").get<std::size_t>()});
    for (const json& x : j.at("masses")) h.masses.push_back(number_from_json(x));
    h.epsilon = number_from_json(j.at("epsilon"));
    h.seed = j.at("seed").get<std::uint64_t>();
    return std::make_shared<DpHistogramModel>(std::move(h));
  }
  fail(ErrorCode::format, "unknown model kind '" + kind + "'");
}

}  // namespace

json model_to_json(const DensityModel& model, const FitProvenance& provenance) {
  json prov = json::object();
  if (provenance.spec_hash) prov["spec_hash"] = hex64(*provenance.spec_hash);
  if (provenance.seed) prov["seed"] = *provenance.seed;
  if (provenance.rep) prov["rep"] = *provenance.rep;
  if (provenance.fold) prov["fold"] = *provenance.fold;
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"family", to_string(model.family())},
          {"provenance", prov},
          {"model", params_json(model)}};
}

ModelPtr model_from_json(const json& doc, FitProvenance* provenance) {
  require(doc.is_object() && doc.value("format", "") == kModelFormat, ErrorCode::format,
          "not a memaudit model container");
  require(doc.contains("version") && doc["version"].is_number_integer(), ErrorCode::format,
          "model container has no integer version");
  const auto version = doc["version"].get<std::int64_t>();
  require(version == kModelVersion, ErrorCode::version,
          "unsupported model container version " + std::to_string(version));
  try {
    if (provenance) {
      *provenance = {};
      const json& p = doc.at("provenance");
      if (p.contains("spec_hash"))
        provenance->spec_hash = std::stoull(p["spec_hash"].get<std::string>(), nullptr, 16);
      if (p.contains("seed")) provenance->seed = p["seed"].get<std::uint64_t>();
      if (p.contains("rep")) provenance->rep = p["rep"].get<std::size_t>();
      if (p.contains("fold")) provenance->fold = p["fold"].get<std::size_t>();
    }
    return params_from(doc.at("model"));
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("corrupt model container: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(ErrorCode::format, std::string("corrupt model container: ") + e.what());
  }
}

void save_model(const DensityModel& model, const std::filesystem::path& path,
                const FitProvenance& provenance) {
  write_text_file(path, model_to_json(model, provenance).dump(1) + "\n");
}

ModelPtr load_model(const std::filesystem::path& path, FitProvenance* provenance) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, "model parse error at byte " + std::to_string(e.byte));
  }
  return model_from_json(doc, provenance);
}

}  // namespace memaudit
