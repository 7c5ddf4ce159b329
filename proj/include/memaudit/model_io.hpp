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


#ifndef MEMAUDIT_MODEL_IO_HPP
#define MEMAUDIT_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "memaudit/models.hpp"

namespace memaudit {

inline constexpr int kModelVersion = 1;
inline constexpr const char* kModelFormat = "memaudit-model";

struct FitProvenance {
  std::optional<std::uint64_t> spec_hash;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rep;
  std::optional<std::size_t> fold;
};

// Versioned container: family tag, parameters and fit provenance. Doubles
// round-trip exactly.
nlohmann::json model_to_json(const DensityModel& model, const FitProvenance& provenance = {});
ModelPtr model_from_json(const nlohmann::json& doc, FitProvenance* provenance = nullptr);

void save_model(const DensityModel& model, const std::filesystem::path& path,
                const FitProvenance& provenance = {});
ModelPtr load_model(const std::filesystem::path& path, FitProvenance* provenance = nullptr);

}  // namespace memaudit

#endif  // MEMAUDIT_MODEL_IO_HPP
