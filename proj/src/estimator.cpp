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


#include "memaudit/error.hpp"
#include "memaudit/mitigate.hpp"
#include "memaudit/models.hpp"
#include "memaudit/vae.hpp"

namespace memaudit {

namespace {

ModelPtr fit_base(const EstimatorSpec& spec, const Dataset& train, std::uint64_t seed) {
  switch (spec.family) {
    case Family::constant:
      return std::make_shared<ConstantModel>(train.dim(), spec.constant_log_density);
    case Family::gaussian_mle: {
      GaussianFit fit = fit_gaussian_mle(train, spec.covariance);
      return std::make_shared<GaussianModel>(std::move(fit.params), fit.degenerate);
    }
    case Family::kde:
      return std::make_shared<KdeModel>(fit_kde(train, spec.bandwidth));
    case Family::gmm:
      return std::make_shared<GmmModel>(
          fit_gmm_em(train, spec.gmm.components, seed, spec.gmm.max_iters, spec.gmm.tol).params);
    case Family::vae: {
      VaeTrainResult trained = vae_train(train, spec, seed);
      return std::make_shared<VaeDensityModel>(std::move(trained.model),
                                               uses_logit_transform(spec.vae, train),
                                               spec.vae.importance_samples);
    }
    case Family::dp_histogram:
      return std::make_shared<DpHistogramModel>(
          fit_dp_histogram(train, spec.histogram.axes, spec.histogram.epsilon, seed));
  }
  fail(ErrorCode::unsupported, "unknown estimator family");
}

}  // namespace

ModelPtr fit_estimator(const EstimatorSpec& spec, const Dataset& train, std::uint64_t seed) {
  ModelPtr base = fit_base(spec, train, seed);
  if (!spec.outlier) return base;
  return std::make_shared<OutlierMixtureModel>(
      std::move(base), default_broad_component(train, spec.outlier->variance_factor),
      spec.outlier->weight);
}

}  // namespace memaudit
