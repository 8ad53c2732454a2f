// Copyright 2026 The steerq Authors
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

#pragma once

// Seeded sampling of states, unitaries and distributions. Every corpus in the
// library is generated from an Rng built with `Rng::stream(seed, index)` so
// results are reproducible item by item.

#include <cstdint>
#include <random>
#include <vector>

#include "steerq/qmat.hpp"

namespace steerq {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for item `index` of a corpus drawn under `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double uniform();
  double normal();
  int uniform_int(int n);
  std::mt19937_64 &engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Normalized complex Gaussian vector (Haar-random pure state).
Vector random_pure_state(int dim, Rng &rng);

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// R's diagonal absorbed into Q.
Matrix haar_unitary(int dim, Rng &rng);

/// Isometry with `cols` orthonormal columns in dimension `rows`.
Matrix random_isometry(int rows, int cols, Rng &rng);

/// Unit-trace G G^dag for a dim x rank Ginibre G (rank <= 0 means full).
Matrix random_density(int dim, Rng &rng, int rank = 0);

/// Uniform point on the probability simplex.
std::vector<double> random_simplex(int n, Rng &rng);

}  // namespace steerq
