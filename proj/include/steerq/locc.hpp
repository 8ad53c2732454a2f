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

// Bob-to-Alice one-way LOCC: quantum instruments on B, classical channels,
// the post-strategy cq state and the restricted transformations of
// assemblages.

#include <string>
#include <vector>

#include "steerq/assemblage.hpp"
#include "steerq/extension.hpp"
#include "steerq/random.hpp"

namespace steerq {

inline constexpr double kInstrumentTol = 1e-9;
inline constexpr double kChannelTol = 1e-12;
inline constexpr double kBranchFloor = 1e-12;

/// Branches y, each a set of Kraus operators dim_out x dim_in.
class Instrument {
 public:
  Instrument() = default;
  /// Throws an argument error unless sum_{y,t} K^dag K = I within 1e-9.
  Instrument(int dim_in, std::vector<std::vector<Matrix>> branches);

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }
  int num_branches() const { return static_cast<int>(branches_.size()); }
  const std::vector<Matrix> &kraus(int y) const { return branches_[y]; }
  const std::vector<std::vector<Matrix>> &branches() const { return branches_; }
  double completeness_residual() const;

  Matrix apply(int y, const Matrix &rho) const;
  /// Branch y acting on the first factor of B (x) E.
  Matrix apply_extended(int y, const Matrix &rho, int dim_E) const;
  /// Adjoint of apply_extended.
  Matrix adjoint_extended(int y, const Matrix &g, int dim_E) const;

 private:
  int dim_in_ = 0;
  int dim_out_ = 0;
  std::vector<std::vector<Matrix>> branches_;
};

/// Row-stochastic matrix: row = input, column = output.
class ClassicalChannel {
 public:
  ClassicalChannel() = default;
  explicit ClassicalChannel(Eigen::MatrixXd rows);

  static ClassicalChannel identity(int n);
  /// Every input mapped to the distribution `p`.
  static ClassicalChannel constant(int num_in, const std::vector<double> &p);
  static ClassicalChannel deterministic(int num_out, const std::vector<int> &map);

  int num_in() const { return static_cast<int>(m_.rows()); }
  int num_out() const { return static_cast<int>(m_.cols()); }
  double operator()(int out, int in) const { return m_(in, out); }
  const Eigen::MatrixXd &matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Input channel x_f -> x, output channel (a, x, x_f, z) -> a_f and an
/// instrument with branches z. Output-channel rows are indexed
/// a + |A| (x + |X| (x_f + |X_f| z)).
struct RestrictedLoccOp {
  ClassicalChannel input;
  ClassicalChannel output;
  Instrument instrument;

  int num_inputs_final() const { return input.num_in(); }
  int num_outputs_final() const { return output.num_out(); }
};

/// General 1W-LOCC: Alice's input channel may depend on z. Input rows are
/// indexed x_f + |X_f| z, output rows as in RestrictedLoccOp.
struct GeneralLoccOp {
  ClassicalChannel input;
  ClassicalChannel output;
  Instrument instrument;
  int num_inputs_final = 0;
};

/// sum p(x|y) |x><x| (x) |a><a| (x) K_y(rho^{a,x}) (x) |y><y| on X, A, B', Y.
CqState apply_1wlocc(const Assemblage &a, const Instrument &inst, const ClassicalChannel &p_X_given_Y);

struct LoccBranch {
  double probability = 0.0;
  Assemblage assemblage;
};

struct LoccEnsemble {
  std::vector<LoccBranch> branches;
  double dropped_mass = 0.0;  // total p(z) of branches at or below 1e-12
  int dropped_branches = 0;
};

LoccEnsemble apply_general_1wlocc_ensemble(const Assemblage &a, const GeneralLoccOp &op);

Assemblage apply_restricted(const Assemblage &a, const RestrictedLoccOp &op);

/// Image of an extension under a restricted op, with z copied into the
/// extending system: E' = E (x) Z. The result extends apply_restricted(a, op).
NSExtension apply_restricted_extension(const NSExtension &ext, const RestrictedLoccOp &op);

void check_restricted_op(const Assemblage &a, const RestrictedLoccOp &op);

// Instrument library.

Instrument identity_instrument(int dim);
Instrument unitary_instrument(const Matrix &u);
/// Projective measurement in the orthonormal basis given by the columns,
/// keeping the post-measurement state.
Instrument basis_measurement(const Matrix &basis);
/// Discards the input and prepares `sigma`.
Instrument trace_and_prepare(int dim_in, const Matrix &sigma);

/// Complete set of d + 1 mutually unbiased bases for d = 2 and odd primes;
/// computational and Fourier bases otherwise.
std::vector<Matrix> mub_bases(int dim);
/// exp(-i theta (cos phi X + sin phi Y) / 2).
Matrix qubit_rotation(double theta, double phi);

struct NamedInstrument {
  std::string name;
  Instrument instrument;
};

/// identity, MUB measurements, trace-and-prepare of I/d and, for qubits,
/// rotations on a `rotation_grid` x `rotation_grid` (theta, phi) grid.
std::vector<NamedInstrument> instrument_library(int dim, int rotation_grid = 3);

// Samplers for the property harness.

Instrument random_instrument(int dim_in, int dim_out, int num_branches, int num_kraus, Rng &rng);
ClassicalChannel random_channel(int num_in, int num_out, Rng &rng);
RestrictedLoccOp random_restricted_op(const Assemblage &a, Rng &rng, int max_inputs = 3, int max_outputs = 3,
                                      int max_branches = 2);
GeneralLoccOp random_general_op(const Assemblage &a, Rng &rng, int max_inputs = 3, int max_outputs = 3,
                                int max_branches = 3);

}  // namespace steerq
