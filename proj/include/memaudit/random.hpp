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

#ifndef MEMAUDIT_RANDOM_HPP
#define MEMAUDIT_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace memaudit {

// Stream tags keep seeds derived for different purposes from colliding.
enum class SeedStream : std::uint64_t {
  fold_shuffle = 1,
  fold_fit = 2,
  loo_full_fit = 3,
  loo_heldout_fit = 4,
  evaluation = 5,
  initialization = 6,
  training = 7,
  sampling = 8,
  synthetic = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit hash of (master, stream, a, b). Independent of execution
// order, thread count and platform.
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Seeded generator with explicitly specified variate algorithms. The
// standard distributions are implementation-defined, which would make
// reports differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), rejection sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via the Box-Muller transform; the second variate of each
  // pair is cached.
  double normal();

  double laplace(double scale);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace memaudit

#endif  // MEMAUDIT_RANDOM_HPP
