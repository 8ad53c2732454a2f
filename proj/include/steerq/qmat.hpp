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

// Dense complex Hermitian linear algebra: the carrier type for states and
// effects, tensor factorizations addressed by register label, entropies in
// bits and the projection onto the PSD cone.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace steerq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kEigenFloor = 1e-12;
inline constexpr int kDefaultDimCap = 4096;

/// A finite-dimensional Hermitian matrix. Construction checks Hermiticity
/// (max-norm 1e-10) and finiteness, then stores the exactly Hermitian part.
class HermitianOp {
 public:
  HermitianOp() = default;
  explicit HermitianOp(Matrix m);

  static HermitianOp hermitized(const Matrix &m);
  static HermitianOp identity(int dim);
  static HermitianOp zero(int dim);
  static HermitianOp projector(const Vector &ket);
  static HermitianOp diagonal(std::span<const double> values);
  static HermitianOp diagonal(std::initializer_list<double> values);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix &matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }
  double trace() const { return m_.trace().real(); }

  HermitianOp operator+(const HermitianOp &o) const;
  HermitianOp operator-(const HermitianOp &o) const;
  HermitianOp operator*(double s) const;
  friend HermitianOp operator*(double s, const HermitianOp &h) { return h * s; }

  /// Max-norm distance to another operator of the same dimension.
  double max_abs_diff(const HermitianOp &o) const;

 private:
  Matrix m_;
};

struct Register {
  std::string label;
  int dim = 0;
};

/// Ordered tensor factorization; the first register is the most significant
/// index of the composite basis.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Register> registers);
  RegisterLayout(std::initializer_list<Register> registers)
      : RegisterLayout(std::vector<Register>(registers)) {}

  const std::vector<Register> &registers() const { return regs_; }
  int size() const { return static_cast<int>(regs_.size()); }
  long total_dim() const;
  int index_of(const std::string &label) const;
  bool contains(const std::string &label) const;
  int dim_of(const std::string &label) const { return regs_[index_of(label)].dim; }

 private:
  std::vector<Register> regs_;
};

HermitianOp tensor(const HermitianOp &a, const HermitianOp &b, int dim_cap = kDefaultDimCap);

HermitianOp partial_trace(const HermitianOp &m, const RegisterLayout &layout,
                          const std::vector<std::string> &keep);

/// Von Neumann entropy in bits. Eigenvalues below 1e-12 contribute nothing.
double entropy(const HermitianOp &rho);

/// I(K;L|M) in bits. `m` may be empty, which gives the mutual information.
double cmi(const HermitianOp &state, const RegisterLayout &layout,
           const std::vector<std::string> &k, const std::vector<std::string> &l,
           const std::vector<std::string> &m);

/// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
HermitianOp psd_project(const HermitianOp &m);

namespace linalg {

struct Eigh {
  RealVector values;  // ascending
  Matrix vectors;
};

Eigh eigh(const Matrix &m);
Matrix hermitize(const Matrix &m);
double max_abs(const Matrix &m);
Matrix kron(const Matrix &a, const Matrix &b);

/// For m on A (dim da) tensor B (dim db): Tr_A m and Tr_B m.
Matrix trace_first(const Matrix &m, int da, int db);
Matrix trace_second(const Matrix &m, int da, int db);
/// I_A tensor m  and  m tensor I_B.
Matrix lift_second(const Matrix &m, int da);
Matrix lift_first(const Matrix &m, int db);

/// -sum lambda log2 lambda over eigenvalues above the floor. Works for
/// subnormalized blocks, which is how block-diagonal cq states are handled.
double eta_sum(const RealVector &eigenvalues);
double eta(const Matrix &m);

Matrix psd_part(const Matrix &m);
/// log2 of a PSD matrix with eigenvalues clamped below at `floor`.
Matrix log2_clamped(const Matrix &m, double floor);
Matrix from_eigen(const Eigh &e, const RealVector &values);

/// Orthonormal basis (columns) of the range of a PSD matrix, eigenvalues
/// above `rel_tol * max(1, lambda_max)`.
Matrix support_basis(const Matrix &m, double rel_tol);

/// Reorders tensor factors: factor k of the result is factor perm[k] of `m`,
/// whose factors have dimensions `dims` (first slowest).
Matrix permute_subsystems(const Matrix &m, const std::vector<int> &dims, const std::vector<int> &perm);

}  // namespace linalg
}  // namespace steerq
