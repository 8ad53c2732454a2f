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

#include "steerq/qmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "steerq/error.hpp"

namespace steerq {

namespace {

bool all_finite(const Matrix &m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

}  // namespace

HermitianOp::HermitianOp(Matrix m) {
  if (m.rows() != m.cols()) fail(ErrorKind::kArgument, "HermitianOp requires a square matrix");
  if (m.rows() == 0) fail(ErrorKind::kArgument, "HermitianOp requires a positive dimension");
  if (!all_finite(m)) fail(ErrorKind::kArgument, "HermitianOp entries must be finite");
  const double skew = linalg::max_abs(m - m.adjoint());
  if (skew > kHermitianTol) {
    fail(ErrorKind::kArgument, "matrix is not Hermitian (max |M - M^dag| = " + std::to_string(skew) + ")");
  }
  m_ = linalg::hermitize(m);
}

HermitianOp HermitianOp::hermitized(const Matrix &m) { return HermitianOp(linalg::hermitize(m)); }

HermitianOp HermitianOp::identity(int dim) { return HermitianOp(Matrix::Identity(dim, dim)); }

HermitianOp HermitianOp::zero(int dim) { return HermitianOp(Matrix::Zero(dim, dim)); }

HermitianOp HermitianOp::projector(const Vector &ket) { return HermitianOp(ket * ket.adjoint()); }

HermitianOp HermitianOp::diagonal(std::span<const double> values) {
  Matrix m = Matrix::Zero(values.size(), values.size());
  for (size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return HermitianOp(std::move(m));
}

HermitianOp HermitianOp::diagonal(std::initializer_list<double> values) {
  return diagonal(std::span<const double>(values.begin(), values.size()));
}

HermitianOp HermitianOp::operator+(const HermitianOp &o) const {
  if (dim() != o.dim()) fail(ErrorKind::kArgument, "dimension mismatch in HermitianOp sum");
  return hermitized(m_ + o.m_);
}

HermitianOp HermitianOp::operator-(const HermitianOp &o) const {
  if (dim() != o.dim()) fail(ErrorKind::kArgument, "dimension mismatch in HermitianOp difference");
  return hermitized(m_ - o.m_);
}

HermitianOp HermitianOp::operator*(double s) const { return hermitized(m_ * s); }

double HermitianOp::max_abs_diff(const HermitianOp &o) const {
  if (dim() != o.dim()) fail(ErrorKind::kArgument, "dimension mismatch in max_abs_diff");
  return linalg::max_abs(m_ - o.m_);
}

RegisterLayout::RegisterLayout(std::vector<Register> registers) : regs_(std::move(registers)) {
  std::set<std::string> seen;
  for (const auto &r : regs_) {
    if (r.dim <= 0) fail(ErrorKind::kArgument, "register '" + r.label + "' must have positive dimension");
    if (!seen.insert(r.label).second) fail(ErrorKind::kArgument, "duplicate register label '" + r.label + "'");
  }
}

long RegisterLayout::total_dim() const {
  long d = 1;
  for (const auto &r : regs_) d *= r.dim;
  return d;
}

int RegisterLayout::index_of(const std::string &label) const {
  for (int i = 0; i < size(); ++i)
    if (regs_[i].label == label) return i;
  fail(ErrorKind::kArgument, "unknown register label '" + label + "'");
}

bool RegisterLayout::contains(const std::string &label) const {
  return std::any_of(regs_.begin(), regs_.end(), [&](const Register &r) { return r.label == label; });
}

HermitianOp tensor(const HermitianOp &a, const HermitianOp &b, int dim_cap) {
  const long d = static_cast<long>(a.dim()) * b.dim();
  if (d > dim_cap) {
    fail(ErrorKind::kCapacity, "tensor product dimension " + std::to_string(d) + " exceeds cap " +
                                   std::to_string(dim_cap));
  }
  return HermitianOp::hermitized(linalg::kron(a.matrix(), b.matrix()));
}

HermitianOp partial_trace(const HermitianOp &m, const RegisterLayout &layout,
                          const std::vector<std::string> &keep) {
  if (layout.total_dim() != m.dim()) {
    fail(ErrorKind::kArgument, "layout dimension " + std::to_string(layout.total_dim()) +
                                   " does not match operator dimension " + std::to_string(m.dim()));
  }
  if (keep.empty()) fail(ErrorKind::kArgument, "partial_trace needs at least one kept register");
  const int n = layout.size();
  std::vector<bool> kept(n, false);
  for (const auto &label : keep) {
    const int i = layout.index_of(label);
    if (kept[i]) fail(ErrorKind::kArgument, "register '" + label + "' listed twice");
    kept[i] = true;
  }

  // Stride of each register in the composite index (first register slowest).
  std::vector<long> stride(n);
  long s = 1;
  for (int i = n - 1; i >= 0; --i) {
    stride[i] = s;
    s *= layout.registers()[i].dim;
  }
  std::vector<int> kept_regs, traced_regs;
  for (int i = 0; i < n; ++i) (kept[i] ? kept_regs : traced_regs).push_back(i);

  auto offsets = [&](const std::vector<int> &regs) {
    long count = 1;
    for (int r : regs) count *= layout.registers()[r].dim;
    std::vector<long> off(count, 0);
    for (long idx = 0; idx < count; ++idx) {
      long rem = idx, o = 0;
      for (int k = static_cast<int>(regs.size()) - 1; k >= 0; --k) {
        const int d = layout.registers()[regs[k]].dim;
        o += (rem % d) * stride[regs[k]];
        rem /= d;
      }
      off[idx] = o;
    }
    return off;
  };
  const auto kept_off = offsets(kept_regs);
  const auto traced_off = offsets(traced_regs);

  const long dk = static_cast<long>(kept_off.size());
  Matrix out = Matrix::Zero(dk, dk);
  const Matrix &in = m.matrix();
  for (long i = 0; i < dk; ++i) {
    for (long j = 0; j < dk; ++j) {
      Complex acc = 0.0;
      for (long t : traced_off) acc += in(kept_off[i] + t, kept_off[j] + t);
      out(i, j) = acc;
    }
  }
  return HermitianOp::hermitized(out);
}

double entropy(const HermitianOp &rho) {
  const auto e = linalg::eigh(rho.matrix());
  if (e.values(0) < -kPsdTol) {
    fail(ErrorKind::kNotPsd, "entropy of operator with eigenvalue " + std::to_string(e.values(0)));
  }
  return linalg::eta_sum(e.values);
}

double cmi(const HermitianOp &state, const RegisterLayout &layout, const std::vector<std::string> &k,
           const std::vector<std::string> &l, const std::vector<std::string> &m) {
  std::set<std::string> all;
  size_t count = 0;
  for (const auto *group : {&k, &l, &m}) {
    for (const auto &label : *group) {
      layout.index_of(label);
      all.insert(label);
      ++count;
    }
  }
  if (all.size() != count) fail(ErrorKind::kArgument, "cmi register sets must be disjoint");
  if (static_cast<int>(all.size()) != layout.size()) {
    fail(ErrorKind::kArgument, "cmi register sets must cover the layout");
  }
  if (k.empty() || l.empty()) fail(ErrorKind::kArgument, "cmi needs non-empty K and L");

  auto joined = [](std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  auto h = [&](const std::vector<std::string> &regs) {
    if (regs.empty()) return 0.0;
    if (static_cast<int>(regs.size()) == layout.size()) return entropy(state);
    return entropy(partial_trace(state, layout, regs));
  };
  const double value = h(joined(k, m)) + h(joined(l, m)) - h(joined(joined(k, l), m)) - h(m);
  return value;
}

HermitianOp psd_project(const HermitianOp &m) { return HermitianOp::hermitized(linalg::psd_part(m.matrix())); }

namespace linalg {

Eigh eigh(const Matrix &m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::kNumeric, "Hermitian eigensolver did not converge (dim " + std::to_string(m.rows()) + ")");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix hermitize(const Matrix &m) { return (m + m.adjoint()) * 0.5; }

double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix kron(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix trace_first(const Matrix &m, int da, int db) {
  Matrix out = Matrix::Zero(db, db);
  for (int i = 0; i < da; ++i) out += m.block(i * db, i * db, db, db);
  return out;
}

Matrix trace_second(const Matrix &m, int da, int db) {
  Matrix out(da, da);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j) out(i, j) = m.block(i * db, j * db, db, db).trace();
  return out;
}

Matrix lift_second(const Matrix &m, int da) { return kron(Matrix::Identity(da, da), m); }

Matrix lift_first(const Matrix &m, int db) { return kron(m, Matrix::Identity(db, db)); }

double eta_sum(const RealVector &eigenvalues) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double v = eigenvalues(i);
    if (v > kEigenFloor) h -= v * std::log2(v);
  }
  return h;
}

double eta(const Matrix &m) { return eta_sum(eigh(m).values); }

Matrix psd_part(const Matrix &m) {
  auto e = eigh(hermitize(m));
  if (e.values(0) >= 0.0) return hermitize(m);
  return from_eigen(e, e.values.cwiseMax(0.0));
}

Matrix log2_clamped(const Matrix &m, double floor) {
  auto e = eigh(m);
  RealVector v = e.values.unaryExpr([floor](double x) { return std::log2(std::max(x, floor)); });
  return from_eigen(e, v);
}

Matrix from_eigen(const Eigh &e, const RealVector &values) {
  return hermitize(e.vectors * values.cast<Complex>().asDiagonal() * e.vectors.adjoint());
}

Matrix support_basis(const Matrix &m, double rel_tol) {
  auto e = eigh(m);
  const double cut = rel_tol * std::max(1.0, e.values.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < e.values.size(); ++i)
    if (e.values(i) > cut) cols.push_back(i);
  Matrix basis(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) basis.col(c) = e.vectors.col(cols[c]);
  return basis;
}

Matrix permute_subsystems(const Matrix &m, const std::vector<int> &dims, const std::vector<int> &perm) {
  const int n = static_cast<int>(dims.size());
  if (static_cast<int>(perm.size()) != n) fail(ErrorKind::kArgument, "permutation size differs from factor count");
  long total = 1;
  for (int d : dims) total *= d;
  if (total != m.rows() || m.rows() != m.cols()) fail(ErrorKind::kArgument, "factor dimensions do not match");
  std::vector<bool> seen(n, false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) fail(ErrorKind::kArgument, "not a permutation");
    seen[p] = true;
  }
  std::vector<long> stride(n);
  long s = 1;
  for (int i = n - 1; i >= 0; --i) {
    stride[i] = s;
    s *= dims[i];
  }
  // new index -> old index
  std::vector<long> map(total);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx, old = 0;
    for (int k = n - 1; k >= 0; --k) {
      const int d = dims[perm[k]];
      old += (rem % d) * stride[perm[k]];
      rem /= d;
    }
    map[idx] = old;
  }
  Matrix out(total, total);
  for (long r = 0; r < total; ++r)
    for (long c = 0; c < total; ++c) out(r, c) = m(map[r], map[c]);
  return out;
}

}  // namespace linalg
}  // namespace steerq
