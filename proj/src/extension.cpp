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

#include "steerq/extension.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "steerq/error.hpp"

namespace steerq {

namespace {

// Orthonormal real basis of d x d Hermitian matrices (Frobenius inner product).
std::vector<Matrix> hermitian_basis(int d) {
  std::vector<Matrix> basis;
  const double s = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < d; ++j) {
    Matrix m = Matrix::Zero(d, d);
    m(j, j) = 1.0;
    basis.push_back(m);
  }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix re = Matrix::Zero(d, d), im = Matrix::Zero(d, d);
      re(j, k) = re(k, j) = s;
      im(j, k) = Complex(0, s);
      im(k, j) = Complex(0, -s);
      basis.push_back(re);
      basis.push_back(im);
    }
  return basis;
}

}  // namespace

ExtensionResiduals extension_residuals(const NSExtension &ext, const Assemblage &a) {
  if (ext.dim_B != a.dim_B() || ext.num_inputs != a.num_inputs() || ext.num_outputs != a.num_outputs() ||
      static_cast<int>(ext.ops.size()) != a.size()) {
    fail(ErrorKind::kInconsistency, "extension shape does not match the assemblage");
  }
  ExtensionResiduals r;
  const int db = ext.dim_B, de = ext.dim_E;
  std::vector<Matrix> sums(a.num_inputs(), Matrix::Zero(ext.dim(), ext.dim()));
  for (int x = 0; x < a.num_inputs(); ++x) {
    for (int o = 0; o < a.num_outputs(); ++o) {
      const Matrix &m = ext.op(o, x);
      r.psd = std::max(r.psd, -linalg::eigh(linalg::hermitize(m)).values(0));
      r.partial_trace =
          std::max(r.partial_trace, linalg::max_abs(linalg::trace_second(m, db, de) - a.op(o, x).matrix()));
      sums[x] += m;
    }
  }
  for (int x = 1; x < a.num_inputs(); ++x) r.nosignaling = std::max(r.nosignaling, linalg::max_abs(sums[x] - sums[0]));
  r.psd = std::max(r.psd, 0.0);
  return r;
}

ExtensionConstraints::ExtensionConstraints(const Assemblage &a, int dim_E)
    : assemblage_(a), dim_B_(a.dim_B()), dim_E_(dim_E), nx_(a.num_inputs()), na_(a.num_outputs()) {
  if (dim_E < 1) fail(ErrorKind::kArgument, "dim_E must be at least 1");
  if (static_cast<long>(dim_B_) * dim_E > kDefaultDimCap) fail(ErrorKind::kCapacity, "B (x) E exceeds the cap");
  const Matrix rho_b = a.bob_state();
  for (int x = 0; x < nx_; ++x) {
    const Matrix shift = (rho_b - a.marginal(x)) / na_;
    for (int o = 0; o < na_; ++o) targets_.push_back(a.op(o, x).matrix() + shift);
  }
  const Matrix id_e = Matrix::Identity(dim_E, dim_E);
  for (const auto &op : a.ops()) support_.push_back(linalg::kron(linalg::support_basis(op.matrix(), 1e-12), id_e));
}

void ExtensionConstraints::project_impl(std::vector<Matrix> &y, bool affine) const {
  // X_ax = (1-P) Y_ax + R_ax (x) I/dE + (1-P)(mean_x T_x - T_x)/|A|, with
  // P(Z) = Tr_E(Z) (x) I/dE and T_x = sum_a Y_ax.
  const int db = dim_B_, de = dim_E_;
  auto p = [&](const Matrix &z) -> Matrix { return linalg::lift_first(linalg::trace_second(z, db, de), de) / double(de); };
  std::vector<Matrix> t(nx_, Matrix::Zero(db * de, db * de));
  Matrix mean = Matrix::Zero(db * de, db * de);
  for (int x = 0; x < nx_; ++x) {
    for (int o = 0; o < na_; ++o) t[x] += y[o + na_ * x];
    mean += t[x];
  }
  mean /= nx_;
  for (int x = 0; x < nx_; ++x) {
    const Matrix diff = mean - t[x];
    const Matrix shift = (diff - p(diff)) / double(na_);
    for (int o = 0; o < na_; ++o) {
      Matrix &block = y[o + na_ * x];
      block = block - p(block) + shift;
      if (affine) block += linalg::lift_first(targets_[o + na_ * x], de) / double(de);
      block = linalg::hermitize(block);
    }
  }
}

// Feasible blocks are X_i = V_i M_i V_i^dag with V_i the support isometry and
// M_i Hermitian, coordinatized in an orthonormal Hermitian basis so that the
// Frobenius geometry of X and of the coordinates agree. On these coordinates
// the product extension is a relative-interior point of the PSD cone, which
// keeps alternating projections linearly convergent when supports are
// deficient.
struct ExtensionConstraints::SupportedSystem {
  std::vector<int> offset;  // first coordinate of block i
  std::vector<int> rank;    // r_i
  Eigen::MatrixXd lin;      // constraint map on the coordinates
  Eigen::VectorXd rhs;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver;
};

namespace {

// Coordinates in the hermitian_basis order: diagonal, then sqrt(2) Re and
// sqrt(2) Im of each upper entry.
void herm_coords(const Matrix &m, double *out) {
  const int d = static_cast<int>(m.rows());
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int j = 0; j < d; ++j) out[k++] = m(j, j).real();
  for (int j = 0; j < d; ++j)
    for (int l = j + 1; l < d; ++l) {
      out[k++] = r2 * m(j, l).real();
      out[k++] = r2 * m(j, l).imag();
    }
}

Matrix herm_from_coords(const double *v, int d) {
  const double s = 1.0 / std::sqrt(2.0);
  Matrix m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) m(j, j) = v[k++];
  for (int j = 0; j < d; ++j)
    for (int l = j + 1; l < d; ++l) {
      m(j, l) = s * Complex(v[k], v[k + 1]);
      m(l, j) = std::conj(m(j, l));
      k += 2;
    }
  return m;
}

}  // namespace

bool ExtensionConstraints::supported_system_fits() const {
  long cols = 0;
  for (const auto &v : support_) cols += v.cols() * v.cols();
  const long dim = static_cast<long>(dim_B_) * dim_E_;
  const long rows = static_cast<long>(blocks()) * dim_B_ * dim_B_ + (nx_ - 1) * dim * dim;
  return cols <= kSupportedMaxCols && rows <= kSupportedMaxRows;
}

const ExtensionConstraints::SupportedSystem &ExtensionConstraints::supported_system() const {
  std::call_once(lazy_->once, [this] {
    auto sys = std::make_shared<SupportedSystem>();
    const int n = blocks(), db = dim_B_, dim = dim_B_ * dim_E_;
    int cols = 0;
    for (int i = 0; i < n; ++i) {
      sys->offset.push_back(cols);
      sys->rank.push_back(static_cast<int>(support_[i].cols()));
      cols += sys->rank.back() * sys->rank.back();
    }
    const int pt_rows = n * db * db, ns_rows = (nx_ - 1) * dim * dim;
    sys->lin = Eigen::MatrixXd::Zero(pt_rows + ns_rows, cols);
    sys->rhs = Eigen::VectorXd::Zero(pt_rows + ns_rows);
    Eigen::VectorXd unit, reduced_c(db * db), lifted_c(dim * dim);
    for (int i = 0; i < n; ++i) {
      const int x = i / na_, r = sys->rank[i];
      herm_coords(targets_[i], sys->rhs.data() + i * db * db);
      for (int k = 0; k < r * r; ++k) {
        const int col = sys->offset[i] + k;
        unit = Eigen::VectorXd::Unit(r * r, k);
        const Matrix lifted = support_[i] * herm_from_coords(unit.data(), r) * support_[i].adjoint();
        herm_coords(linalg::trace_second(lifted, db, dim_E_), reduced_c.data());
        sys->lin.block(i * db * db, col, db * db, 1) = reduced_c;
        // No-signaling rows: sum_a X_{a,x} - sum_a X_{a,0} for x >= 1.
        herm_coords(lifted, lifted_c.data());
        for (int xr = 1; xr < nx_; ++xr) {
          const double sign = x == xr ? 1.0 : (x == 0 ? -1.0 : 0.0);
          if (sign != 0.0) sys->lin.block(pt_rows + (xr - 1) * dim * dim, col, dim * dim, 1) += sign * lifted_c;
        }
      }
    }
    sys->solver.compute(sys->lin);
    lazy_->system = std::move(sys);
  });
  return *lazy_->system;
}

void ExtensionConstraints::project_affine(std::vector<Matrix> &blocks) const { project_impl(blocks, true); }

void ExtensionConstraints::project_tangent(std::vector<Matrix> &blocks) const { project_impl(blocks, false); }

double ExtensionConstraints::affine_residual(const std::vector<Matrix> &blocks) const {
  double worst = 0.0;
  std::vector<Matrix> sums(nx_, Matrix::Zero(dim_B_ * dim_E_, dim_B_ * dim_E_));
  for (int x = 0; x < nx_; ++x)
    for (int o = 0; o < na_; ++o) {
      const Matrix &m = blocks[o + na_ * x];
      worst = std::max(worst, linalg::max_abs(linalg::trace_second(m, dim_B_, dim_E_) -
                                              assemblage_.op(o, x).matrix()));
      sums[x] += m;
    }
  for (int x = 1; x < nx_; ++x) worst = std::max(worst, linalg::max_abs(sums[x] - sums[0]));
  return worst;
}

Matrix ExtensionConstraints::project_cone(const Matrix &block, int index) const {
  const Matrix &v = support_[index];
  if (v.cols() == 0) return Matrix::Zero(block.rows(), block.cols());
  if (v.cols() == block.rows()) return linalg::psd_part(block);
  return linalg::hermitize(v * linalg::psd_part(v.adjoint() * block * v) * v.adjoint());
}

ExtensionConstraints build_constraints(const Assemblage &a, int dim_E) {
  require_valid(a, "build_constraints");
  return ExtensionConstraints(a, dim_E);
}

NSExtension product_extension(const Assemblage &a, const Matrix &omega) {
  NSExtension ext{a.dim_B(), static_cast<int>(omega.rows()), a.num_inputs(), a.num_outputs(), {}};
  for (const auto &op : a.ops()) ext.ops.push_back(linalg::hermitize(linalg::kron(op.matrix(), omega)));
  return ext;
}

NSExtension project(const ExtensionConstraints &c, const std::vector<Matrix> &candidate, double tol, int max_iters) {
  const int n = c.blocks();
  const int dim = c.dim_B() * c.dim_E();
  if (static_cast<int>(candidate.size()) != n) fail(ErrorKind::kArgument, "candidate has the wrong block count");
  for (const auto &m : candidate)
    if (m.rows() != dim || m.cols() != dim) fail(ErrorKind::kArgument, "candidate block has the wrong dimension");

  NSExtension out{c.dim_B(), c.dim_E(), c.num_inputs(), c.num_outputs(), {}};
  std::vector<Matrix> y(n);
  for (int i = 0; i < n; ++i) y[i] = c.project_cone(linalg::hermitize(candidate[i]), i);
  double residual = c.affine_residual(y);
  bool unchanged = true;
  for (int i = 0; i < n && unchanged; ++i) unchanged = linalg::max_abs(y[i] - candidate[i]) <= tol;
  if (unchanged && residual <= tol) {
    out.ops = candidate;
    for (auto &m : out.ops) m = linalg::hermitize(m);
    return out;
  }

  bool deficient = false;
  for (int i = 0; i < n; ++i) deficient = deficient || c.support_[i].cols() < dim;
  const bool supported = deficient && c.supported_system_fits();
  {
    // Ambient Dykstra. With deficient supports it often stalls, so it only
    // gets a short budget before the support-coordinate iteration takes over.
    const int budget = supported ? std::min(max_iters, ExtensionConstraints::kAmbientBudget) : max_iters;
    const std::vector<Matrix> y0 = y;
    std::vector<Matrix> x = y, q(n, Matrix::Zero(dim, dim));
    for (int it = 0; it < budget; ++it) {
      x = y;
      c.project_affine(x);
      for (int i = 0; i < n; ++i) {
        const Matrix shifted = x[i] + q[i];
        y[i] = c.project_cone(shifted, i);
        q[i] = shifted - y[i];
      }
      residual = c.affine_residual(y);
      if (residual <= tol) {
        out.ops = std::move(y);
        return out;
      }
    }
    y = y0;
  }
  if (supported) {
    // Dykstra on the support coordinates; see SupportedSystem.
    const auto &sys = c.supported_system();
    auto to_coords = [&](int i, const Matrix &m, Eigen::VectorXd &v) {
      herm_coords(c.support_[i].adjoint() * m * c.support_[i], v.data() + sys.offset[i]);
    };
    auto to_matrix = [&](int i, const Eigen::VectorXd &v) { return herm_from_coords(v.data() + sys.offset[i], sys.rank[i]); };
    Eigen::VectorXd yv(sys.lin.cols()), xv, qv = Eigen::VectorXd::Zero(sys.lin.cols());
    for (int i = 0; i < n; ++i) to_coords(i, y[i], yv);
    std::vector<Matrix> lifted(n);
    for (int it = 0; it < max_iters; ++it) {
      xv = yv - sys.solver.solve(sys.lin * yv - sys.rhs);
      const Eigen::VectorXd shifted = xv + qv;
      for (int i = 0; i < n; ++i) {
        if (sys.rank[i] == 0) {
          lifted[i] = Matrix::Zero(dim, dim);
          continue;
        }
        const Matrix psd = linalg::psd_part(to_matrix(i, shifted));
        herm_coords(psd, yv.data() + sys.offset[i]);
        lifted[i] = linalg::hermitize(c.support_[i] * psd * c.support_[i].adjoint());
      }
      qv = shifted - yv;
      residual = c.affine_residual(lifted);
      if (residual <= tol) {
        out.ops = std::move(lifted);
        return out;
      }
    }
  }
  fail(ErrorKind::kNumeric, "extension projection did not converge after " + std::to_string(max_iters) +
                                " iterations (residual " + std::to_string(residual) + ")");
}

LhsModel prune_model(const LhsModel &model, double threshold) {
  LhsModel out;
  for (size_t l = 0; l < model.sigma.size(); ++l) {
    if (model.sigma[l].trace() > threshold) {
      out.strategies.push_back(model.strategies[l]);
      out.sigma.push_back(model.sigma[l]);
    }
  }
  return out;
}

NSExtension classical_extension(const Assemblage &a, const LhsModel &model, int pad_dim) {
  const double residual = reconstruction_residual(model, a);
  if (residual > kLhsDefaultTol) {
    fail(ErrorKind::kInconsistency, "LHS model does not reproduce the assemblage (residual " +
                                        std::to_string(residual) + ")");
  }
  const int n = static_cast<int>(model.strategies.size());
  const int de = std::max(std::max(n, pad_dim), 1);
  const int db = a.dim_B();
  NSExtension ext{db, de, a.num_inputs(), a.num_outputs(),
                  std::vector<Matrix>(a.size(), Matrix::Zero(db * de, db * de))};
  for (int l = 0; l < n; ++l) {
    Matrix flag = Matrix::Zero(de, de);
    flag(l, l) = 1.0;
    const Matrix block = linalg::kron(model.sigma[l].matrix(), flag);
    for (int x = 0; x < a.num_inputs(); ++x) ext.ops[a.index(model.strategies[l].response[x], x)] += block;
  }
  return ext;
}

bool screens_off(const NSExtension &ext, double tol) {
  const int db = ext.dim_B, de = ext.dim_E;
  double scale = 0.0;
  for (const auto &m : ext.ops) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  const double bound = tol * std::max(scale, 1.0);
  for (const auto &m : ext.ops)
    for (int r = 0; r < db * de; ++r)
      for (int c = 0; c < db * de; ++c)
        if (r % de != c % de && std::abs(m(r, c)) > bound) return false;
  for (int e = 0; e < de; ++e) {
    // Reference block: the one with the largest trace at this e.
    const Matrix *ref = nullptr;
    double ref_tr = 0.0;
    std::vector<Matrix> blocks;
    blocks.reserve(ext.ops.size());
    for (const auto &m : ext.ops) {
      Matrix blk(db, db);
      for (int b = 0; b < db; ++b)
        for (int c = 0; c < db; ++c) blk(b, c) = m(b * de + e, c * de + e);
      blocks.push_back(std::move(blk));
    }
    for (const auto &blk : blocks)
      if (blk.trace().real() > ref_tr) {
        ref_tr = blk.trace().real();
        ref = &blk;
      }
    for (const auto &blk : blocks) {
      const Matrix expected = ref == nullptr ? Matrix::Zero(db, db) : Matrix((blk.trace().real() / ref_tr) * *ref);
      if ((blk - expected).cwiseAbs().maxCoeff() > bound) return false;
    }
  }
  return true;
}

PureExtensionSpace pure_extension_space(const Assemblage &a, int dim_E) {
  if (dim_E < 1) fail(ErrorKind::kArgument, "dim_E must be at least 1");
  const int db = a.dim_B();
  std::vector<int> active;                  // ops with non-zero trace
  std::vector<Matrix> rank_one(a.size());   // exact rank-one part
  for (int i = 0; i < a.size(); ++i) {
    const double t = a.ops()[i].trace();
    if (t <= kEigenFloor) continue;
    const auto e = linalg::eigh(a.ops()[i].matrix() / t);
    const double second = db >= 2 ? e.values(db - 2) : 0.0;
    if (second > 1e-6) return NotApplicable{};
    if (second > 1e-9) {
      fail(ErrorKind::kIndeterminate, "rank decision ambiguous: second eigenvalue " + std::to_string(second));
    }
    const Vector v = e.vectors.col(db - 1);
    rank_one[i] = t * e.values(db - 1) * (v * v.adjoint());
    active.push_back(i);
  }

  // Unknowns: omega_i = sum_k c_{i,k} H_k. Homogeneous equations: the
  // differences of sum_a rho^{a,x} (x) omega^{a,x} across x, and Tr omega_i = 0.
  const auto basis = hermitian_basis(dim_E);
  const int nb = static_cast<int>(basis.size());
  const int unknowns = static_cast<int>(active.size()) * nb;
  const int full = db * dim_E;
  const int ns_rows = (a.num_inputs() - 1) * 2 * full * full;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ns_rows + static_cast<int>(active.size()), unknowns);
  for (size_t u = 0; u < active.size(); ++u) {
    const int i = active[u];
    const int x = i / a.num_outputs();
    for (int k = 0; k < nb; ++k) {
      const int col = static_cast<int>(u) * nb + k;
      const Matrix term = linalg::kron(rank_one[i], basis[k]);
      for (int xr = 1; xr < a.num_inputs(); ++xr) {
        double sign = 0.0;
        if (x == xr) sign = 1.0;
        if (x == 0) sign = -1.0;
        if (sign == 0.0) continue;
        const int base = (xr - 1) * 2 * full * full;
        for (int r = 0; r < full; ++r)
          for (int s = 0; s < full; ++s) {
            m(base + 2 * (r * full + s), col) += sign * term(r, s).real();
            m(base + 2 * (r * full + s) + 1, col) += sign * term(r, s).imag();
          }
      }
      m(ns_rows + static_cast<int>(u), col) = basis[k].trace().real();
    }
  }
  if (unknowns == 0) return ForcedProduct{0, true};

  const Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) fail(ErrorKind::kNumeric, "eigensolver failed in pure_extension_space");
  const double scale = std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<int> null_cols;
  for (int k = 0; k < unknowns; ++k)
    if (solver.eigenvalues()(k) <= 1e-14 * scale) null_cols.push_back(k);

  // A null vector is "all equal" when its coefficient blocks coincide.
  bool all_equal = true;
  for (int k : null_cols) {
    const Eigen::VectorXd v = solver.eigenvectors().col(k);
    for (size_t u = 1; u < active.size() && all_equal; ++u) {
      if ((v.segment(u * nb, nb) - v.segment(0, nb)).norm() > 1e-6) all_equal = false;
    }
  }
  return ForcedProduct{static_cast<int>(null_cols.size()), all_equal};
}

bool forced_common_product(const Assemblage &a, int dim_E) {
  const auto r = pure_extension_space(a, dim_E);
  const auto *fp = std::get_if<ForcedProduct>(&r);
  return fp != nullptr && fp->all_equal;
}

}  // namespace steerq
