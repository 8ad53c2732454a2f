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

// Local-hidden-state membership. An assemblage is LHS iff it decomposes as
// rho^{a,x} = sum_{lambda : lambda(x) = a} sigma_lambda over the |A|^|X|
// deterministic response functions lambda, with every sigma_lambda PSD.
// lhs_test() decides this by Dykstra's alternating projections between the
// product PSD cone and the affine reconstruction constraints.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "steerq/assemblage.hpp"

namespace steerq {

struct DeterministicStrategy {
  std::vector<int> response;  // response[x] = a
  bool operator==(const DeterministicStrategy &) const = default;
};

/// All |A|^|X| response functions in lexicographic order (x = 0 most significant).
std::vector<DeterministicStrategy> enumerate_strategies(int num_inputs, int num_outputs, int cap = 4096);

struct LhsModel {
  std::vector<DeterministicStrategy> strategies;
  std::vector<HermitianOp> sigma;  // subnormalized hidden states, Tr = p(lambda)
};

Assemblage reconstruct(const LhsModel &model, int dim_B, int num_inputs, int num_outputs);

/// max over (a, x) of || sum_{lambda(x)=a} sigma_lambda - rho^{a,x} ||_max.
double reconstruction_residual(const LhsModel &model, const Assemblage &a);

/// Largest violation of the model's own invariants (PSD, total weight 1).
double model_invariant_residual(const LhsModel &model);

enum class LhsStatus { kFeasible, kInfeasible, kIndeterminate };

const char *lhs_status_name(LhsStatus s);

struct LhsResult {
  LhsStatus status = LhsStatus::kIndeterminate;
  std::optional<LhsModel> model;  // set when feasible
  double residual = 0.0;          // reconstruction residual of the PSD iterate
  int iterations = 0;
};

inline constexpr double kLhsDefaultTol = 1e-8;
inline constexpr int kLhsDefaultMaxIters = 20000;
inline constexpr double kLhsMassTol = 1e-9;

/// Infeasible results carry the best residual reached: a heuristic
/// separation indicator, not a certified witness.
LhsResult lhs_test(const Assemblage &a, double tol = kLhsDefaultTol, int max_iters = kLhsDefaultMaxIters);

/// Random p(lambda) over all strategies and random full-rank hidden states.
std::pair<Assemblage, LhsModel> sample_lhs(int dim_B, int num_inputs, int num_outputs, std::uint64_t seed);

/// n samples cycling dim_B, |X|, |A| through {2, 3}; item k uses seed + k.
std::vector<std::pair<Assemblage, LhsModel>> sample_lhs_corpus(int n, std::uint64_t seed);

}  // namespace steerq
