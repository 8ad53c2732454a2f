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

#include "steerq/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steerq/error.hpp"
#include "steerq/random.hpp"

namespace steerq {

std::vector<DeterministicStrategy> enumerate_strategies(int num_inputs, int num_outputs, int cap) {
  if (num_inputs <= 0 || num_outputs <= 0) fail(ErrorKind::kArgument, "strategy counts must be positive");
  long count = 1;
  for (int i = 0; i < num_inputs; ++i) {
    count *= num_outputs;
    if (count > cap) {
      fail(ErrorKind::kCapacity, "|A|^|X| exceeds the strategy cap " + std::to_string(cap));
    }
  }
  std::vector<DeterministicStrategy> out;
  out.reserve(count);
  for (long idx = 0; idx < count; ++idx) {
    DeterministicStrategy s{std::vector<int>(num_inputs)};
    long rem = idx;
    for (int x = num_inputs - 1; x >= 0; --x) {
      s.response[x] = static_cast<int>(rem % num_outputs);
      rem /= num_outputs;
    }
    out.push_back(std::move(s));
  }
  return out;
}

const char *lhs_status_name(LhsStatus s) {
  switch (s) {
    case LhsStatus::kFeasible:
      return "feasible";
    case LhsStatus::kInfeasible:
      return "infeasible";
    case LhsStatus::kIndeterminate:
      return "indeterminate";
  }
  return "unknown";
}

Assemblage reconstruct(const LhsModel &model, int dim_B, int num_inputs, int num_outputs) {
  if (model.strategies.size() != model.sigma.size()) {
    fail(ErrorKind::kInconsistency, "LHS model has mismatched strategy and state counts");
  }
  std::vector<Matrix> acc(static_cast<size_t>(num_inputs) * num_outputs, Matrix::Zero(dim_B, dim_B));
  for (size_t l = 0; l < model.strategies.size(); ++l) {
    const auto &s = model.strategies[l];
    if (static_cast<int>(s.response.size()) != num_inputs || model.sigma[l].dim() != dim_B) {
      fail(ErrorKind::kInconsistency, "LHS model does not match the assemblage shape");
    }
    for (int x = 0; x < num_inputs; ++x) {
      const int a = s.response[x];
      if (a < 0 || a >= num_outputs) fail(ErrorKind::kInconsistency, "strategy output out of range");
      acc[a + num_outputs * x] += model.sigma[l].matrix();
    }
  }
  std::vector<HermitianOp> ops;
  for (auto &m : acc) ops.push_back(HermitianOp::hermitized(m));
  return Assemblage(dim_B, num_inputs, num_outputs, std::move(ops));
}

double reconstruction_residual(const LhsModel &model, const Assemblage &a) {
  const auto r = reconstruct(model, a.dim_B(), a.num_inputs(), a.num_outputs());
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) worst = std::max(worst, r.ops()[i].max_abs_diff(a.ops()[i]));
  return worst;
}

double model_invariant_residual(const LhsModel &model) {
  double worst = 0.0, total = 0.0;
  for (const auto &s : model.sigma) {
    worst = std::max(worst, -linalg::eigh(s.matrix()).values(0));
    total += s.trace();
  }
  return std::max(worst, std::abs(total - 1.0));
}

namespace {

// Affine map sigma -> (sum_{lambda(x)=a} sigma_lambda)_{a,x} acts identically
// on every matrix entry, so its projector only needs the pseudoinverse of the
// small incidence Gram matrix C C^T.
class ReconstructionProjector {
 public:
  ReconstructionProjector(const std::vector<DeterministicStrategy> &strategies, int num_inputs, int num_outputs)
      : nx_(num_inputs), na_(num_outputs) {
    const int rows = nx_ * na_;
    const int cols = static_cast<int>(strategies.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(rows, cols);
    for (int l = 0; l < cols; ++l)
      for (int x = 0; x < nx_; ++x) c(strategies[l].response[x] + na_ * x, l) = 1.0;
    const Eigen::MatrixXd gram = c * c.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd inv = svd.singularValues();
    const double cut = 1e-10 * inv(0);
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > cut ? 1.0 / inv(i) : 0.0;
    gram_pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    incidence_ = c;
  }

  std::vector<Matrix> residuals(const std::vector<Matrix> &sigma, const std::vector<Matrix> &targets) const {
    std::vector<Matrix> res = targets;
    for (auto &r : res) r = -r;
    for (size_t l = 0; l < sigma.size(); ++l)
      for (int row = 0; row < nx_ * na_; ++row)
        if (incidence_(row, l) != 0.0) res[row] += sigma[l];
    return res;
  }

  void project(std::vector<Matrix> &sigma, const std::vector<Matrix> &targets) const {
    const auto res = residuals(sigma, targets);
    const int rows = nx_ * na_;
    std::vector<Matrix> mult(rows, Matrix::Zero(res[0].rows(), res[0].cols()));
    for (int r = 0; r < rows; ++r)
      for (int s = 0; s < rows; ++s)
        if (gram_pinv_(r, s) != 0.0) mult[r] += gram_pinv_(r, s) * res[s];
    for (size_t l = 0; l < sigma.size(); ++l)
      for (int r = 0; r < rows; ++r)
        if (incidence_(r, l) != 0.0) sigma[l] -= mult[r];
  }

 private:
  int nx_, na_;
  Eigen::MatrixXd incidence_;
  Eigen::MatrixXd gram_pinv_;
};

double max_residual(const std::vector<Matrix> &res) {
  double worst = 0.0;
  for (const auto &r : res) worst = std::max(worst, linalg::max_abs(r));
  return worst;
}

// Projection onto PSD matrices supported in span(basis).
Matrix project_supported_psd(const Matrix &m, const Matrix &basis) {
  if (basis.cols() == 0) return Matrix::Zero(m.rows(), m.cols());
  if (basis.cols() == m.rows()) return linalg::psd_part(m);
  const Matrix compressed = basis.adjoint() * m * basis;
  return linalg::hermitize(basis * linalg::psd_part(compressed) * basis.adjoint());
}

// Intersection of the supports of rho^{lambda(x), x} over x.
Matrix strategy_support(const Assemblage &a, const DeterministicStrategy &s) {
  const int d = a.dim_B();
  Matrix complement = Matrix::Zero(d, d);
  for (int x = 0; x < a.num_inputs(); ++x) {
    const Matrix basis = linalg::support_basis(a.op(s.response[x], x).matrix(), 1e-12);
    complement += Matrix::Identity(d, d) - basis * basis.adjoint();
  }
  auto e = linalg::eigh(linalg::hermitize(complement));
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) < 1e-9) cols.push_back(i);
  Matrix basis(d, static_cast<Eigen::Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) basis.col(c) = e.vectors.col(cols[c]);
  return basis;
}

}  // namespace

LhsResult lhs_test(const Assemblage &a, double tol, int max_iters) {
  require_valid(a, "lhs_test");
  if (!(tol > 0.0) || max_iters <= 0) fail(ErrorKind::kArgument, "lhs_test needs tol > 0 and max_iters > 0");
  const auto strategies = enumerate_strategies(a.num_inputs(), a.num_outputs());
  const int n = static_cast<int>(strategies.size());
  const int d = a.dim_B();
  const ReconstructionProjector affine(strategies, a.num_inputs(), a.num_outputs());

  // Targets made exactly no-signaling so the affine set is non-empty.
  std::vector<Matrix> targets;
  const Matrix rho_b = a.bob_state();
  for (int x = 0; x < a.num_inputs(); ++x) {
    const Matrix shift = (rho_b - a.marginal(x)) / a.num_outputs();
    for (int o = 0; o < a.num_outputs(); ++o) targets.push_back(a.op(o, x).matrix() + shift);
  }
  std::vector<Matrix> raw_targets;
  for (const auto &op : a.ops()) raw_targets.push_back(op.matrix());

  std::vector<Matrix> supports;
  for (const auto &s : strategies) supports.push_back(strategy_support(a, s));

  std::vector<Matrix> x_iter(n, Matrix::Zero(d, d));
  std::vector<Matrix> y_iter(n), q(n, Matrix::Zero(d, d));
  LhsResult result;
  double best = std::numeric_limits<double>::infinity();
  double checkpoint = std::numeric_limits<double>::infinity();
  std::vector<Matrix> y_prev = x_iter;

  for (int it = 1; it <= max_iters; ++it) {
    if (it > 1) x_iter = y_prev;
    affine.project(x_iter, targets);
    for (int l = 0; l < n; ++l) {
      y_iter[l] = project_supported_psd(x_iter[l] + q[l], supports[l]);
      q[l] = x_iter[l] + q[l] - y_iter[l];
    }
    y_prev = y_iter;
    const double residual = max_residual(affine.residuals(y_iter, raw_targets));
    best = std::min(best, residual);
    result.iterations = it;
    result.residual = residual;
    double mass = 0.0;
    for (const auto &m : y_iter) mass += m.trace().real();
    // The hidden-state weights must sum to one more tightly than the
    // entrywise reconstruction tolerance accumulates over strategies.
    if (residual <= tol && std::abs(mass - 1.0) <= std::min(tol, kLhsMassTol)) {
      LhsModel model{strategies, {}};
      for (auto &m : y_iter) model.sigma.push_back(HermitianOp::hermitized(m));
      result.status = LhsStatus::kFeasible;
      result.model = std::move(model);
      return result;
    }
    // Stagnation well above the tolerance band means the sets are separated.
    if (it % 500 == 0) {
      if (residual > 100.0 * tol && residual > 0.999 * checkpoint) {
        result.status = LhsStatus::kInfeasible;
        result.residual = best;
        return result;
      }
      checkpoint = residual;
    }
  }
  result.residual = best;
  result.status = best <= 10.0 * tol ? LhsStatus::kIndeterminate : LhsStatus::kInfeasible;
  return result;
}

std::pair<Assemblage, LhsModel> sample_lhs(int dim_B, int num_inputs, int num_outputs, std::uint64_t seed) {
  Rng rng(seed);
  LhsModel model{enumerate_strategies(num_inputs, num_outputs), {}};
  const auto weights = random_simplex(static_cast<int>(model.strategies.size()), rng);
  for (double w : weights) model.sigma.push_back(HermitianOp::hermitized(w * random_density(dim_B, rng)));
  auto a = reconstruct(model, dim_B, num_inputs, num_outputs);
  return {std::move(a), std::move(model)};
}

std::vector<std::pair<Assemblage, LhsModel>> sample_lhs_corpus(int n, std::uint64_t seed) {
  std::vector<std::pair<Assemblage, LhsModel>> out;
  for (int k = 0; k < n; ++k) {
    const int dim_B = 2 + k % 2, num_inputs = 2 + (k / 2) % 2, num_outputs = 2 + (k / 4) % 2;
    out.push_back(sample_lhs(dim_B, num_inputs, num_outputs, seed + static_cast<std::uint64_t>(k)));
  }
  return out;
}

}  // namespace steerq
