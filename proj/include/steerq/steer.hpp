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

// Restricted and unrestricted intrinsic steerability estimators. The inner
// infimum over non-signaling extensions is attacked from a pool of feasible
// starting points by an augmented Lagrangian on factorized blocks
// rho_{BE}^{a,x} = L L^dag, finished by an exact projection, so every inner
// value is attained by a feasible extension and is an upper bound at its
// input distribution. The outer supremum is a grid plus
// Nelder-Mead search and therefore a lower bound.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steerq/assemblage.hpp"
#include "steerq/extension.hpp"
#include "steerq/locc.hpp"

namespace steerq {

struct SteerConfig {
  int dim_E = 0;          // 0: see default_dim_E
  int restarts = 8;       // random feasible starting points
  int grid = 0;           // points per simplex edge; 0: 21 for |X| <= 3, else 6
  int refine_starts = 2;  // pool members refined at each later grid point
  double outer_tol = 1e-3;  // grid points whose pool bound is within this of the incumbent are not refined
  int lbfgs_iters = 300;  // per augmented Lagrangian round
  int alm_rounds = 30;
  double alm_penalty = 100.0;
  int max_refine_dim = 32;  // larger seeds enter the pool but are not refined
  double alm_tol = 1e-8;  // normal-residual norm at which the penalty loop hands over to the final projection
  double project_tol = 1e-10;
  int project_max_iters = 3000;
  int nm_evals = 30;
  int nm_lbfgs_iters = 100;
  double eps_mono = 1e-2;
  double eps_add = 2e-2;
  bool use_lhs_seed = true;
  int threads = 1;
  std::uint64_t seed = 20240601;
};

int grid_resolution(const SteerConfig &cfg, int num_inputs);
/// cfg.dim_E when set, else dim_B * |A|.
int default_dim_E(const Assemblage &a, const SteerConfig &cfg);
/// All distributions with entries k / (g - 1), in lexicographic order.
std::vector<std::vector<double>> simplex_grid(int n, int g);

struct InnerStatus {
  bool converged = true;
  int restarts_used = 0;
  double best = 0.0;
  double median = 0.0;
  double spread = 0.0;  // worst minus best over the starting points
  std::string method;   // "forced-product", "augmented-lagrangian"
};

struct SearchPoint {
  std::vector<double> p_X;
  double value = 0.0;
  bool refined = false;
};

struct SteeringEstimate {
  std::string quantity;  // "ris", "ris_inner", "is_lower"
  double value = 0.0;    // clipped to the dimension bounds
  double raw_value = 0.0;
  std::vector<double> p_X;
  int dim_E = 0;
  bool exact = false;  // extension space provably trivial
  bool inner_upper_bound = true;
  bool outer_lower_bound = true;
  InnerStatus inner;
  std::vector<SearchPoint> trace;
  std::string strategy;
  /// Feasible extensions met during the search, reusable as seeds.
  std::vector<NSExtension> witnesses;
};

/// Bob's side of a strategy: instrument branches y and weights w(x, y), so
/// the blocks are w(x, y) K_y(rho_{BE}^{a,x}).
struct BranchWeights {
  const Instrument *instrument = nullptr;  // null: identity, one branch
  Eigen::MatrixXd w;                       // |X| x |Y|
};

/// I(X A; B | E Y) of the blocks above, in bits. `gradient`, when given,
/// receives the derivative with respect to each rho_{BE}^{a,x}.
double strategy_cmi(const std::vector<Matrix> &ext_ops, int dim_B, int dim_E, int num_inputs, int num_outputs,
                    const BranchWeights &bw, std::vector<Matrix> *gradient = nullptr);

/// I(X A; B | E) of the cq extension built from `ext` and `p_X`. Verifies
/// the extension (1e-7) and that it agrees with I(A; B | E X) within 1e-8.
double cmi_of_extension(const Assemblage &a, std::span<const double> p_X, const NSExtension &ext);

/// Same objective without the checks, for pool scoring.
double extension_value(const NSExtension &ext, std::span<const double> p_X);

SteeringEstimate ris_inner(const Assemblage &a, std::span<const double> p_X, int dim_E, const SteerConfig &cfg);

SteeringEstimate ris(const Assemblage &a, const SteerConfig &cfg, const std::vector<NSExtension> &seeds = {});

struct Strategy {
  std::string name;
  Instrument instrument;
  /// p(x|y); absent means x is drawn from p_X independently of y and p_X is
  /// optimized as in ris.
  std::optional<ClassicalChannel> p_X_given_Y;
};

/// Library strategies: each instrument of instrument_library with an
/// optimized p_X, plus deterministic y -> x maps for measurements.
std::vector<Strategy> default_strategy_library(const Assemblage &a, int rotation_grid = 3);

SteeringEstimate is_lower(const Assemblage &a, const std::vector<Strategy> &library, const SteerConfig &cfg);

/// I(X A; B | E) for a pure state on the "A", "B", "E" registers of
/// `layout` measured on A.
double simulation_rate(const HermitianOp &psi_ABE, const RegisterLayout &layout,
                       const std::vector<std::vector<HermitianOp>> &povms, std::span<const double> p_X);

// Property harness.

struct PropertyReport {
  std::string name;
  double left = 0.0;
  double right = 0.0;
  double slack = 0.0;  // right - left
  double tolerance = 0.0;
  bool pass = false;
  std::string digest;  // of the inputs
  std::string detail;
};

/// left <= right + tolerance, slack = right - left.
PropertyReport make_report(std::string name, double left, double right, double tolerance, std::string digest,
                           std::string detail = {});

/// git-style digest of the shape and the operators at full precision.
std::string assemblage_digest(const Assemblage &a);

std::vector<PropertyReport> check_monotone_restricted(const Assemblage &a, int n_ops, const SteerConfig &cfg);
PropertyReport check_monotone_op(const Assemblage &a, const SteeringEstimate &input, const RestrictedLoccOp &op,
                                 const SteerConfig &cfg, const std::string &name);
PropertyReport check_convexity(const Assemblage &a1, const Assemblage &a2, double lambda, const SteerConfig &cfg);
/// As above with the two single-assemblage estimates already computed.
PropertyReport check_convexity(const Assemblage &a1, const SteeringEstimate &e1, const Assemblage &a2,
                               const SteeringEstimate &e2, double lambda, const SteerConfig &cfg);
PropertyReport check_additivity(const Assemblage &a1, const Assemblage &a2, const SteerConfig &cfg);
PropertyReport check_monogamy(const JointAssemblage &j, const SteerConfig &cfg);

/// Restricted intrinsic steerability of a two-wing assemblage with the
/// input distribution restricted to products p_{X1} p_{X2}.
SteeringEstimate ris_product_inputs(const JointAssemblage &j, const SteerConfig &cfg,
                                    const std::vector<NSExtension> &seeds = {});

struct SuiteOptions {
  bool monotonicity = true;
  bool convexity = true;
  bool additivity = true;
  bool monogamy = true;
  int monotone_ops = 100;
  int convex_pairs = 50;
  int monogamy_scenarios = 20;
  bool bb84_squared = true;  // additivity on bb84 x bb84, checked at twice eps_add
};

/// Reduced search effort for the property suite: 11-point grid, no
/// Nelder-Mead stage, two random restarts.
SteerConfig property_suite_config(SteerConfig cfg);

/// All property checks over corpora drawn from cfg.seed.
std::vector<PropertyReport> run_property_suite(const SuiteOptions &opt, const SteerConfig &cfg);

}  // namespace steerq
