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

#ifndef MEMAUDIT_ESTIMATOR_SPEC_HPP
#define MEMAUDIT_ESTIMATOR_SPEC_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace memaudit {

enum class Family { constant, gaussian_mle, kde, gmm, vae, dp_histogram };

enum class CovarianceMode { diagonal, full };

enum class Likelihood { bernoulli, diagonal_gaussian, isotropic_gaussian };

// Only one policy exists: seed = derive_seed(master, fold_fit, rep, fold).
enum class SeedPolicy { hash_master_rep_fold };

struct GmmSettings {
  std::size_t components = 2;
  std::size_t max_iters = 200;
  double tol = 1e-8;
};

struct VaeSettings {
  std::size_t latent_dim = 2;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};
  Likelihood likelihood = Likelihood::diagonal_gaussian;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t importance_samples = 128;
  bool dynamic_binarization = false;
  // Unset: enabled for image-tagged data with a Gaussian decoder.
  std::optional<bool> logit_transform;
  double logit_alpha = 1e-6;
};

struct HistogramAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 10;
};

struct DpHistogramSettings {
  std::vector<HistogramAxis> axes;
  double epsilon = 1.0;
};

struct OutlierSettings {
  double weight = 0.01;
  double variance_factor = 100.0;
};

// Complete description of the randomized fitting algorithm. Together with a
// training subset and a derived seed it determines a fitted model bit for bit.
struct EstimatorSpec {
  Family family = Family::kde;
  double constant_log_density = 0.0;
  CovarianceMode covariance = CovarianceMode::diagonal;
  std::optional<double> bandwidth;  // unset: Silverman's rule
  GmmSettings gmm;
  VaeSettings vae;
  DpHistogramSettings histogram;
  std::optional<OutlierSettings> outlier;
  std::size_t epochs = 50;
  SeedPolicy seed_policy = SeedPolicy::hash_master_rep_fold;
};

const char* to_string(Family family);
Family family_from_string(const std::string& name);
const char* to_string(Likelihood likelihood);

// Families whose fits ignore the seed.
bool is_deterministic(Family family);
bool is_iterative(Family family);

// Canonical form: only the fields the family uses are emitted, so the hash
// does not change when unrelated defaults do.
nlohmann::json to_json(const EstimatorSpec& spec);
EstimatorSpec estimator_spec_from_json(const nlohmann::json& doc);

std::uint64_t spec_hash(const EstimatorSpec& spec);

}  // namespace memaudit

#endif  // MEMAUDIT_ESTIMATOR_SPEC_HPP
