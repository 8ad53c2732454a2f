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

// Assemblages {rho_B^{a,x}}: construction from a state and POVMs, structural
// validation, the classical-quantum embedding, generators for the BB84 and
// Schmidt/Fourier families, random samplers and two-wing joint assemblages.
//
// Indexing is (a, x) with a fastest everywhere: op index = a + |A| * x.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "steerq/qmat.hpp"

namespace steerq {

inline constexpr double kStructuralTol = 1e-9;

class Assemblage {
 public:
  Assemblage() = default;
  /// Checks shapes only; physical invariants are the business of validate().
  Assemblage(int dim_B, int num_inputs, int num_outputs, std::vector<HermitianOp> ops);

  int dim_B() const { return dim_B_; }
  int num_inputs() const { return num_inputs_; }
  int num_outputs() const { return num_outputs_; }
  int size() const { return static_cast<int>(ops_.size()); }
  int index(int a, int x) const { return a + num_outputs_ * x; }

  const HermitianOp &op(int a, int x) const { return ops_[index(a, x)]; }
  const std::vector<HermitianOp> &ops() const { return ops_; }

  /// p(a|x) = Tr rho^{a,x}.
  double prob(int a, int x) const { return op(a, x).trace(); }
  /// sum_a rho^{a,x}.
  Matrix marginal(int x) const;
  /// Bob's reduced state, averaged over x (identical across x when valid).
  Matrix bob_state() const;

 private:
  int dim_B_ = 0;
  int num_inputs_ = 0;
  int num_outputs_ = 0;
  std::vector<HermitianOp> ops_;
};

struct ValidationReport {
  double max_hermiticity_violation = 0.0;
  double max_psd_violation = 0.0;
  double max_normalization_residual = 0.0;
  double max_nosignaling_residual = 0.0;
  std::vector<std::string> violations;
  bool pass = true;
};

ValidationReport validate(const Assemblage &a);
/// Same checks on raw (possibly non-Hermitian) matrices, as read from disk.
ValidationReport validate_matrices(int dim_B, int num_inputs, int num_outputs, std::span<const Matrix> ops);
/// Throws an argument error naming `context` when validate() fails.
void require_valid(const Assemblage &a, const std::string &context);

/// Registers X, A (Alice's output) and B, plus optional extra registers.
struct CqState {
  HermitianOp state;
  RegisterLayout layout;
  std::vector<double> p_X;
};

void require_distribution(std::span<const double> p, int size, const std::string &what);

CqState embed_cq(const Assemblage &a, std::span<const double> p_X);

/// rho^{a,x} = Tr_A((Lambda_a^x (x) I_B) rho_AB). The layout must consist of
/// registers labelled "A" and "B".
Assemblage from_state_and_povms(const HermitianOp &rho_AB, const RegisterLayout &layout,
                                const std::vector<std::vector<HermitianOp>> &povms);

/// sigma_Z / sigma_X measurements on |Phi+>.
Assemblage bb84();

/// Schmidt-basis and Fourier-basis measurements on sum_j alpha_j |jj>.
Assemblage schmidt_fourier(std::span<const Complex> alpha);
Assemblage schmidt_fourier_real(std::span<const double> alpha);

/// Haar-random pure state on A (x) B with dim A = num_outputs, measured in
/// Haar-random orthonormal bases, one per input.
Assemblage random_assemblage(int dim_B, int num_inputs, int num_outputs, std::uint64_t seed);

/// lambda * a1 + (1 - lambda) * a2, elementwise.
Assemblage mix(const Assemblage &a1, const Assemblage &a2, double lambda);

/// Renames outputs: new op (perm[x][a], x) = old op (a, x).
Assemblage relabel_outputs(const Assemblage &a, const std::vector<std::vector<int>> &perm);

/// Two-wing assemblage rho^{a1,a2,x1,x2} on one shared B (monogamy shape) or
/// on B1 (x) B2 (superadditivity shape), selected by dims_B.size().
/// Index = a1 + |A1| (a2 + |A2| (x1 + |X1| x2)).
class JointAssemblage {
 public:
  JointAssemblage() = default;
  JointAssemblage(std::vector<int> dims_B, int num_outputs1, int num_outputs2, int num_inputs1,
                  int num_inputs2, std::vector<HermitianOp> ops);

  const std::vector<int> &dims_B() const { return dims_B_; }
  int dim_B() const;
  int num_outputs1() const { return na1_; }
  int num_outputs2() const { return na2_; }
  int num_inputs1() const { return nx1_; }
  int num_inputs2() const { return nx2_; }
  int index(int a1, int a2, int x1, int x2) const { return a1 + na1_ * (a2 + na2_ * (x1 + nx1_ * x2)); }
  const HermitianOp &op(int a1, int a2, int x1, int x2) const { return ops_[index(a1, a2, x1, x2)]; }
  const std::vector<HermitianOp> &ops() const { return ops_; }

 private:
  std::vector<int> dims_B_;
  int na1_ = 0, na2_ = 0, nx1_ = 0, nx2_ = 0;
  std::vector<HermitianOp> ops_;
};

JointAssemblage tensor_assemblages(const Assemblage &a1, const Assemblage &a2);

/// Largest violation of the two wing-wise no-signaling conditions.
double bilateral_nosignaling_residual(const JointAssemblage &j);

/// Reduced assemblage of wing 1 or 2; throws an inconsistency error when the
/// bilateral no-signaling conditions fail beyond 1e-9.
Assemblage marginalize(const JointAssemblage &j, int wing);

/// The joint viewed as one assemblage with a = a1 + |A1| a2, x = x1 + |X1| x2.
Assemblage flatten(const JointAssemblage &j);

/// Tripartite state on A (x) C (x) B measured by POVMs on A (wing 1) and C
/// (wing 2); Bob's register B is shared.
JointAssemblage joint_from_state(const HermitianOp &rho_ACB, int dim_A, int dim_C, int dim_B,
                                 const std::vector<std::vector<HermitianOp>> &povms_A,
                                 const std::vector<std::vector<HermitianOp>> &povms_C);

/// Random state of the given rank on A (x) C (x) B (rank 1: Haar pure)
/// measured in num_inputs Haar-random bases on A and on C.
JointAssemblage random_joint_assemblage(int dim_A, int dim_C, int dim_B, int num_inputs, int rank,
                                        std::uint64_t seed);

}  // namespace steerq
