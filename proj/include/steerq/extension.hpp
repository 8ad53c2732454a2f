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

// Non-signaling extensions rho_{BE}^{a,x} of an assemblage: partial-trace
// consistency Tr_E rho_{BE}^{a,x} = rho_B^{a,x} plus the extended
// no-signaling condition sum_a rho_{BE}^{a,x} independent of x.
// Operators are ordered B (x) E throughout.

#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "steerq/assemblage.hpp"
#include "steerq/lhs.hpp"

namespace steerq {

struct NSExtension {
  int dim_B = 0;
  int dim_E = 0;
  int num_inputs = 0;
  int num_outputs = 0;
  std::vector<Matrix> ops;  // Hermitian, index a + |A| x, each on B (x) E

  int dim() const { return dim_B * dim_E; }
  const Matrix &op(int a, int x) const { return ops[a + num_outputs * x]; }
};

struct ExtensionResiduals {
  double psd = 0.0;
  double partial_trace = 0.0;
  double nosignaling = 0.0;
  double max() const { return std::max(psd, std::max(partial_trace, nosignaling)); }
};

/// Independent check of the three extension invariants against `a`.
ExtensionResiduals extension_residuals(const NSExtension &ext, const Assemblage &a);

/// Affine constraint system for a fixed E dimension, with its exact
/// Frobenius projector.
class ExtensionConstraints {
 public:
  ExtensionConstraints(const Assemblage &a, int dim_E);

  int dim_B() const { return dim_B_; }
  int dim_E() const { return dim_E_; }
  int num_inputs() const { return nx_; }
  int num_outputs() const { return na_; }
  int blocks() const { return nx_ * na_; }
  const Assemblage &assemblage() const { return assemblage_; }

  /// Nearest point (Frobenius) of the affine set.
  void project_affine(std::vector<Matrix> &blocks) const;
  /// Projection onto the linear subspace parallel to the affine set.
  void project_tangent(std::vector<Matrix> &blocks) const;
  /// Max-norm violation of the two linear constraint families.
  double affine_residual(const std::vector<Matrix> &blocks) const;
  /// Projection onto PSD operators supported in supp(rho^{a,x}) (x) E,
  /// which contains every feasible block.
  Matrix project_cone(const Matrix &block, int index) const;

 private:
  void project_impl(std::vector<Matrix> &blocks, bool affine) const;

  Assemblage assemblage_;
  int dim_B_, dim_E_, nx_, na_;
  std::vector<Matrix> targets_;  // exactly no-signaling copy of the ops
  std::vector<Matrix> support_;  // isometries onto supp(rho^{a,x}) (x) E

  friend NSExtension project(const ExtensionConstraints &, const std::vector<Matrix> &, double, int);
  struct SupportedSystem;
  struct LazySystem {
    std::once_flag once;
    std::shared_ptr<const SupportedSystem> system;
  };
  /// Affine system restricted to the supports, built on first use.
  const SupportedSystem &supported_system() const;
  /// Whether that dense system is small enough to factor.
  bool supported_system_fits() const;
  static constexpr long kSupportedMaxCols = 256;
  static constexpr long kSupportedMaxRows = 4096;
  static constexpr int kAmbientBudget = 200;
  std::shared_ptr<LazySystem> lazy_ = std::make_shared<LazySystem>();
};

ExtensionConstraints build_constraints(const Assemblage &a, int dim_E);

/// rho^{a,x} (x) omega for every (a, x).
NSExtension product_extension(const Assemblage &a, const Matrix &omega);

inline constexpr double kProjectDefaultTol = 1e-10;
inline constexpr int kProjectDefaultMaxIters = 20000;

/// Dykstra alternating projection of `candidate` onto the feasible set.
/// Throws a numeric error carrying the final residual on non-convergence.
NSExtension project(const ExtensionConstraints &c, const std::vector<Matrix> &candidate,
                    double tol = kProjectDefaultTol, int max_iters = kProjectDefaultMaxIters);

/// sum_{lambda : lambda(x)=a} sigma_lambda (x) |lambda><lambda|_E, with E
/// padded with zeros up to `pad_dim`. Throws an inconsistency error when the
/// model does not reconstruct `a` within 1e-8.
NSExtension classical_extension(const Assemblage &a, const LhsModel &model, int pad_dim = 0);

/// True when every operator is block diagonal in the standard basis of E and
/// each diagonal block is a multiple of one state per basis vector, up to
/// `tol` relative to the largest entry. Such an E screens B off from X and A,
/// so I(X A; B | E) = 0 for every input distribution.
bool screens_off(const NSExtension &ext, double tol = 1e-12);

/// Drops strategies whose weight is at most `threshold`.
LhsModel prune_model(const LhsModel &model, double threshold);

/// Every extension of a rank-one assemblage factorizes as
/// rho^{a,x} (x) omega^{a,x}; `affine_dim` is the real dimension of the
/// solution family {omega^{a,x}} and `all_equal` whether the no-signaling
/// equations force a common omega.
struct ForcedProduct {
  int affine_dim = 0;
  bool all_equal = false;
};
struct NotApplicable {};
using PureExtensionSpace = std::variant<ForcedProduct, NotApplicable>;

PureExtensionSpace pure_extension_space(const Assemblage &a, int dim_E);

/// True when pure_extension_space proves the extension is a common product.
bool forced_common_product(const Assemblage &a, int dim_E);

}  // namespace steerq
