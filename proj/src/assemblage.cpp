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

#include "steerq/assemblage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steerq/error.hpp"
#include "steerq/random.hpp"

namespace steerq {

Assemblage::Assemblage(int dim_B, int num_inputs, int num_outputs, std::vector<HermitianOp> ops)
    : dim_B_(dim_B), num_inputs_(num_inputs), num_outputs_(num_outputs), ops_(std::move(ops)) {
  if (dim_B <= 0 || num_inputs <= 0 || num_outputs <= 0) {
    fail(ErrorKind::kArgument, "assemblage dimensions must be positive");
  }
  if (static_cast<long>(ops_.size()) != static_cast<long>(num_inputs) * num_outputs) {
    fail(ErrorKind::kArgument, "assemblage needs |A|*|X| = " + std::to_string(num_inputs * num_outputs) +
                                   " operators, got " + std::to_string(ops_.size()));
  }
  for (const auto &op : ops_) {
    if (op.dim() != dim_B) fail(ErrorKind::kArgument, "assemblage operator has wrong dimension");
  }
}

Matrix Assemblage::marginal(int x) const {
  Matrix m = Matrix::Zero(dim_B_, dim_B_);
  for (int a = 0; a < num_outputs_; ++a) m += op(a, x).matrix();
  return m;
}

Matrix Assemblage::bob_state() const {
  Matrix m = Matrix::Zero(dim_B_, dim_B_);
  for (int x = 0; x < num_inputs_; ++x) m += marginal(x);
  return linalg::hermitize(m / num_inputs_);
}

ValidationReport validate_matrices(int dim_B, int num_inputs, int num_outputs, std::span<const Matrix> ops) {
  if (static_cast<long>(ops.size()) != static_cast<long>(num_inputs) * num_outputs) {
    fail(ErrorKind::kArgument, "operator count does not match |A|*|X|");
  }
  ValidationReport r;
  for (const auto &m : ops) {
    if (m.rows() != dim_B || m.cols() != dim_B) fail(ErrorKind::kArgument, "operator has wrong dimension");
    r.max_hermiticity_violation = std::max(r.max_hermiticity_violation, linalg::max_abs(m - m.adjoint()));
    const double lo = linalg::eigh(linalg::hermitize(m)).values(0);
    r.max_psd_violation = std::max(r.max_psd_violation, -lo);
  }
  std::vector<Matrix> sums(num_inputs, Matrix::Zero(dim_B, dim_B));
  for (int x = 0; x < num_inputs; ++x) {
    for (int a = 0; a < num_outputs; ++a) sums[x] += ops[a + num_outputs * x];
    r.max_normalization_residual = std::max(r.max_normalization_residual, std::abs(sums[x].trace().real() - 1.0));
  }
  for (int x = 0; x < num_inputs; ++x)
    for (int y = x + 1; y < num_inputs; ++y)
      r.max_nosignaling_residual = std::max(r.max_nosignaling_residual, linalg::max_abs(sums[x] - sums[y]));

  auto check = [&](double value, double tol, const char *name) {
    if (value > tol) r.violations.push_back(name);
  };
  check(r.max_hermiticity_violation, kHermitianTol, "hermiticity");
  check(r.max_psd_violation, kStructuralTol, "positivity");
  check(r.max_normalization_residual, kStructuralTol, "normalization");
  check(r.max_nosignaling_residual, kStructuralTol, "no-signaling");
  r.pass = r.violations.empty();
  return r;
}

ValidationReport validate(const Assemblage &a) {
  std::vector<Matrix> raw;
  raw.reserve(a.ops().size());
  for (const auto &op : a.ops()) raw.push_back(op.matrix());
  return validate_matrices(a.dim_B(), a.num_inputs(), a.num_outputs(), raw);
}

void require_valid(const Assemblage &a, const std::string &context) {
  const auto r = validate(a);
  if (!r.pass) {
    std::string names;
    for (const auto &v : r.violations) names += (names.empty() ? "" : ", ") + v;
    fail(ErrorKind::kArgument, context + ": assemblage fails validation (" + names + ")");
  }
}

void require_distribution(std::span<const double> p, int size, const std::string &what) {
  if (static_cast<int>(p.size()) != size) {
    fail(ErrorKind::kArgument, what + " must have length " + std::to_string(size));
  }
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) fail(ErrorKind::kArgument, what + " has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::kArgument, what + " does not sum to 1");
}

CqState embed_cq(const Assemblage &a, std::span<const double> p_X) {
  require_distribution(p_X, a.num_inputs(), "p_X");
  const int nx = a.num_inputs(), na = a.num_outputs(), db = a.dim_B();
  const int dim = nx * na * db;
  Matrix state = Matrix::Zero(dim, dim);
  for (int x = 0; x < nx; ++x) {
    for (int o = 0; o < na; ++o) {
      const int offset = (x * na + o) * db;
      state.block(offset, offset, db, db) = p_X[x] * a.op(o, x).matrix();
    }
  }
  return {HermitianOp(state), RegisterLayout{{"X", nx}, {"A", na}, {"B", db}},
          std::vector<double>(p_X.begin(), p_X.end())};
}

namespace {

void check_povm(const std::vector<HermitianOp> &povm, int dim, const std::string &what) {
  if (povm.empty()) fail(ErrorKind::kArgument, what + " has no effects");
  Matrix total = Matrix::Zero(dim, dim);
  for (const auto &e : povm) {
    if (e.dim() != dim) fail(ErrorKind::kArgument, what + " effect has wrong dimension");
    if (linalg::eigh(e.matrix()).values(0) < -kStructuralTol) {
      fail(ErrorKind::kArgument, what + " has a non-PSD effect");
    }
    total += e.matrix();
  }
  if (linalg::max_abs(total - Matrix::Identity(dim, dim)) > kStructuralTol) {
    fail(ErrorKind::kArgument, what + " effects do not sum to the identity");
  }
}

void check_state(const HermitianOp &rho, const std::string &what) {
  if (std::abs(rho.trace() - 1.0) > kStructuralTol) fail(ErrorKind::kArgument, what + " must have unit trace");
  if (linalg::eigh(rho.matrix()).values(0) < -kStructuralTol) fail(ErrorKind::kArgument, what + " must be PSD");
}

}  // namespace

Assemblage from_state_and_povms(const HermitianOp &rho_AB, const RegisterLayout &layout,
                                const std::vector<std::vector<HermitianOp>> &povms) {
  if (layout.size() != 2 || !layout.contains("A") || !layout.contains("B")) {
    fail(ErrorKind::kArgument, "layout must consist of registers A and B");
  }
  if (layout.total_dim() != rho_AB.dim()) fail(ErrorKind::kArgument, "layout does not match state dimension");
  check_state(rho_AB, "rho_AB");
  if (povms.empty()) fail(ErrorKind::kArgument, "at least one POVM is required");
  const int da = layout.dim_of("A"), db = layout.dim_of("B");
  const bool a_first = layout.index_of("A") == 0;
  const int na = static_cast<int>(povms.front().size());
  std::vector<HermitianOp> ops;
  for (size_t x = 0; x < povms.size(); ++x) {
    if (static_cast<int>(povms[x].size()) != na) {
      fail(ErrorKind::kArgument, "all POVMs must have the same number of outcomes");
    }
    check_povm(povms[x], da, "POVM " + std::to_string(x));
    for (const auto &effect : povms[x]) {
      const Matrix id = Matrix::Identity(db, db);
      const Matrix lifted = a_first ? linalg::kron(effect.matrix(), id) : linalg::kron(id, effect.matrix());
      const Matrix prod = lifted * rho_AB.matrix();
      const Matrix reduced = a_first ? linalg::trace_first(prod, da, db) : linalg::trace_second(prod, db, da);
      ops.push_back(HermitianOp::hermitized(reduced));
    }
  }
  return Assemblage(db, static_cast<int>(povms.size()), na, std::move(ops));
}

Assemblage bb84() {
  const double h = 0.5;
  Vector zero(2), one(2), plus(2), minus(2);
  zero << 1, 0;
  one << 0, 1;
  plus << std::sqrt(h), std::sqrt(h);
  minus << std::sqrt(h), -std::sqrt(h);
  Matrix p_plus(2, 2), p_minus(2, 2);
  p_plus << 0.5, 0.5, 0.5, 0.5;
  p_minus << 0.5, -0.5, -0.5, 0.5;
  return Assemblage(2, 2, 2,
                    {HermitianOp::projector(zero) * h, HermitianOp::projector(one) * h,
                     HermitianOp(p_plus * h), HermitianOp(p_minus * h)});
}

Assemblage schmidt_fourier(std::span<const Complex> alpha) {
  const int d = static_cast<int>(alpha.size());
  if (d < 1) fail(ErrorKind::kArgument, "schmidt_fourier needs at least one coefficient");
  double norm = 0.0;
  for (const auto &c : alpha) {
    if (std::abs(c) == 0.0) fail(ErrorKind::kArgument, "Schmidt coefficients must be non-zero");
    norm += std::norm(c);
  }
  if (std::abs(norm - 1.0) > 1e-12) fail(ErrorKind::kArgument, "Schmidt coefficients must have unit norm");

  std::vector<HermitianOp> ops;
  for (int j = 0; j < d; ++j) {
    Matrix m = Matrix::Zero(d, d);
    m(j, j) = std::norm(alpha[j]);
    ops.emplace_back(m);
  }
  for (int j = 0; j < d; ++j) {
    // Z(j)^dag |psi> = sum_k alpha_k e^{-2 pi i j k / d} |k>.
    Vector v(d);
    for (int k = 0; k < d; ++k) {
      const double phase = -2.0 * std::numbers::pi * j * k / d;
      v(k) = alpha[k] * std::polar(1.0, phase);
    }
    ops.push_back(HermitianOp::projector(v) * (1.0 / d));
  }
  return Assemblage(d, 2, d, std::move(ops));
}

Assemblage schmidt_fourier_real(std::span<const double> alpha) {
  std::vector<Complex> c(alpha.begin(), alpha.end());
  return schmidt_fourier(c);
}

Assemblage random_assemblage(int dim_B, int num_inputs, int num_outputs, std::uint64_t seed) {
  Rng rng(seed);
  const int da = num_outputs;
  const Vector psi = random_pure_state(da * dim_B, rng);
  const HermitianOp rho = HermitianOp::projector(psi);
  std::vector<std::vector<HermitianOp>> povms;
  for (int x = 0; x < num_inputs; ++x) {
    const Matrix u = haar_unitary(da, rng);
    std::vector<HermitianOp> povm;
    for (int a = 0; a < da; ++a) povm.push_back(HermitianOp::projector(u.col(a)));
    povms.push_back(std::move(povm));
  }
  return from_state_and_povms(rho, RegisterLayout{{"A", da}, {"B", dim_B}}, povms);
}

JointAssemblage random_joint_assemblage(int dim_A, int dim_C, int dim_B, int num_inputs, int rank,
                                        std::uint64_t seed) {
  Rng rng(seed);
  const HermitianOp rho = HermitianOp::hermitized(random_density(dim_A * dim_C * dim_B, rng, rank));
  auto povms = [&](int d) {
    std::vector<std::vector<HermitianOp>> out;
    for (int x = 0; x < num_inputs; ++x) {
      const Matrix u = haar_unitary(d, rng);
      std::vector<HermitianOp> povm;
      for (int a = 0; a < d; ++a) povm.push_back(HermitianOp::projector(u.col(a)));
      out.push_back(std::move(povm));
    }
    return out;
  };
  const auto povms_A = povms(dim_A);
  const auto povms_C = povms(dim_C);
  return joint_from_state(rho, dim_A, dim_C, dim_B, povms_A, povms_C);
}

Assemblage mix(const Assemblage &a1, const Assemblage &a2, double lambda) {
  if (a1.dim_B() != a2.dim_B() || a1.num_inputs() != a2.num_inputs() || a1.num_outputs() != a2.num_outputs()) {
    fail(ErrorKind::kArgument, "mixed assemblages must have the same shape");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::kArgument, "mixing weight must lie in [0, 1]");
  std::vector<HermitianOp> ops;
  for (int i = 0; i < a1.size(); ++i) {
    ops.push_back(HermitianOp::hermitized(lambda * a1.ops()[i].matrix() + (1.0 - lambda) * a2.ops()[i].matrix()));
  }
  return Assemblage(a1.dim_B(), a1.num_inputs(), a1.num_outputs(), std::move(ops));
}

Assemblage relabel_outputs(const Assemblage &a, const std::vector<std::vector<int>> &perm) {
  if (static_cast<int>(perm.size()) != a.num_inputs()) fail(ErrorKind::kArgument, "one permutation per input");
  std::vector<HermitianOp> ops(a.size());
  for (int x = 0; x < a.num_inputs(); ++x) {
    std::vector<int> seen(a.num_outputs(), 0);
    if (static_cast<int>(perm[x].size()) != a.num_outputs()) fail(ErrorKind::kArgument, "bad permutation length");
    for (int o = 0; o < a.num_outputs(); ++o) {
      const int to = perm[x][o];
      if (to < 0 || to >= a.num_outputs() || seen[to]++) fail(ErrorKind::kArgument, "not a permutation");
      ops[a.index(to, x)] = a.op(o, x);
    }
  }
  return Assemblage(a.dim_B(), a.num_inputs(), a.num_outputs(), std::move(ops));
}

JointAssemblage::JointAssemblage(std::vector<int> dims_B, int num_outputs1, int num_outputs2, int num_inputs1,
                                 int num_inputs2, std::vector<HermitianOp> ops)
    : dims_B_(std::move(dims_B)),
      na1_(num_outputs1),
      na2_(num_outputs2),
      nx1_(num_inputs1),
      nx2_(num_inputs2),
      ops_(std::move(ops)) {
  if (dims_B_.empty() || dims_B_.size() > 2) fail(ErrorKind::kArgument, "dims_B must have one or two entries");
  for (int d : dims_B_)
    if (d <= 0) fail(ErrorKind::kArgument, "dims_B entries must be positive");
  if (na1_ <= 0 || na2_ <= 0 || nx1_ <= 0 || nx2_ <= 0) fail(ErrorKind::kArgument, "wing sizes must be positive");
  if (static_cast<long>(ops_.size()) != static_cast<long>(na1_) * na2_ * nx1_ * nx2_) {
    fail(ErrorKind::kArgument, "joint assemblage has the wrong number of operators");
  }
  for (const auto &op : ops_)
    if (op.dim() != dim_B()) fail(ErrorKind::kArgument, "joint operator has wrong dimension");
}

int JointAssemblage::dim_B() const {
  int d = 1;
  for (int v : dims_B_) d *= v;
  return d;
}

JointAssemblage tensor_assemblages(const Assemblage &a1, const Assemblage &a2) {
  const int na1 = a1.num_outputs(), na2 = a2.num_outputs(), nx1 = a1.num_inputs(), nx2 = a2.num_inputs();
  std::vector<HermitianOp> ops(static_cast<size_t>(na1) * na2 * nx1 * nx2);
  JointAssemblage shape({a1.dim_B(), a2.dim_B()}, na1, na2, nx1, nx2,
                        std::vector<HermitianOp>(ops.size(), HermitianOp::zero(a1.dim_B() * a2.dim_B())));
  for (int x2 = 0; x2 < nx2; ++x2)
    for (int x1 = 0; x1 < nx1; ++x1)
      for (int o2 = 0; o2 < na2; ++o2)
        for (int o1 = 0; o1 < na1; ++o1)
          ops[shape.index(o1, o2, x1, x2)] = tensor(a1.op(o1, x1), a2.op(o2, x2));
  return JointAssemblage({a1.dim_B(), a2.dim_B()}, na1, na2, nx1, nx2, std::move(ops));
}

namespace {

// sum over the other wing's outputs, for fixed (own a, own x, other x).
Matrix wing_sum(const JointAssemblage &j, int wing, int a, int x, int other_x) {
  Matrix m = Matrix::Zero(j.dim_B(), j.dim_B());
  if (wing == 1) {
    for (int o2 = 0; o2 < j.num_outputs2(); ++o2) m += j.op(a, o2, x, other_x).matrix();
  } else {
    for (int o1 = 0; o1 < j.num_outputs1(); ++o1) m += j.op(o1, a, other_x, x).matrix();
  }
  return m;
}

}  // namespace

double bilateral_nosignaling_residual(const JointAssemblage &j) {
  double worst = 0.0;
  for (int x1 = 0; x1 < j.num_inputs1(); ++x1)
    for (int o1 = 0; o1 < j.num_outputs1(); ++o1) {
      const Matrix ref = wing_sum(j, 1, o1, x1, 0);
      for (int x2 = 1; x2 < j.num_inputs2(); ++x2)
        worst = std::max(worst, linalg::max_abs(wing_sum(j, 1, o1, x1, x2) - ref));
    }
  for (int x2 = 0; x2 < j.num_inputs2(); ++x2)
    for (int o2 = 0; o2 < j.num_outputs2(); ++o2) {
      const Matrix ref = wing_sum(j, 2, o2, x2, 0);
      for (int x1 = 1; x1 < j.num_inputs1(); ++x1)
        worst = std::max(worst, linalg::max_abs(wing_sum(j, 2, o2, x2, x1) - ref));
    }
  return worst;
}

Assemblage marginalize(const JointAssemblage &j, int wing) {
  if (wing != 1 && wing != 2) fail(ErrorKind::kArgument, "wing must be 1 or 2");
  const double residual = bilateral_nosignaling_residual(j);
  if (residual > kStructuralTol) {
    fail(ErrorKind::kInconsistency, "bilateral no-signaling violated (residual " + std::to_string(residual) + ")");
  }
  const int na = wing == 1 ? j.num_outputs1() : j.num_outputs2();
  const int nx = wing == 1 ? j.num_inputs1() : j.num_inputs2();
  const bool split = j.dims_B().size() == 2;
  const int d1 = j.dims_B().front(), d2 = split ? j.dims_B().back() : 1;
  std::vector<HermitianOp> ops;
  for (int x = 0; x < nx; ++x) {
    for (int o = 0; o < na; ++o) {
      Matrix m = wing_sum(j, wing, o, x, 0);
      if (split) m = wing == 1 ? linalg::trace_second(m, d1, d2) : linalg::trace_first(m, d1, d2);
      ops.push_back(HermitianOp::hermitized(m));
    }
  }
  const int db = !split ? d1 : (wing == 1 ? d1 : d2);
  return Assemblage(db, nx, na, std::move(ops));
}

Assemblage flatten(const JointAssemblage &j) {
  const int na = j.num_outputs1() * j.num_outputs2();
  const int nx = j.num_inputs1() * j.num_inputs2();
  std::vector<HermitianOp> ops;
  ops.reserve(static_cast<size_t>(na) * nx);
  for (int x2 = 0; x2 < j.num_inputs2(); ++x2)
    for (int x1 = 0; x1 < j.num_inputs1(); ++x1)
      for (int o2 = 0; o2 < j.num_outputs2(); ++o2)
        for (int o1 = 0; o1 < j.num_outputs1(); ++o1) ops.push_back(j.op(o1, o2, x1, x2));
  return Assemblage(j.dim_B(), nx, na, std::move(ops));
}

JointAssemblage joint_from_state(const HermitianOp &rho_ACB, int dim_A, int dim_C, int dim_B,
                                 const std::vector<std::vector<HermitianOp>> &povms_A,
                                 const std::vector<std::vector<HermitianOp>> &povms_C) {
  if (rho_ACB.dim() != dim_A * dim_C * dim_B) fail(ErrorKind::kArgument, "state dimension mismatch");
  check_state(rho_ACB, "rho_ACB");
  if (povms_A.empty() || povms_C.empty()) fail(ErrorKind::kArgument, "each wing needs at least one POVM");
  const int na1 = static_cast<int>(povms_A.front().size());
  const int na2 = static_cast<int>(povms_C.front().size());
  for (size_t i = 0; i < povms_A.size(); ++i) {
    if (static_cast<int>(povms_A[i].size()) != na1) fail(ErrorKind::kArgument, "ragged POVMs on A");
    check_povm(povms_A[i], dim_A, "POVM A" + std::to_string(i));
  }
  for (size_t i = 0; i < povms_C.size(); ++i) {
    if (static_cast<int>(povms_C[i].size()) != na2) fail(ErrorKind::kArgument, "ragged POVMs on C");
    check_povm(povms_C[i], dim_C, "POVM C" + std::to_string(i));
  }
  const int nx1 = static_cast<int>(povms_A.size()), nx2 = static_cast<int>(povms_C.size());
  std::vector<HermitianOp> ops(static_cast<size_t>(na1) * na2 * nx1 * nx2, HermitianOp::zero(dim_B));
  JointAssemblage shape({dim_B}, na1, na2, nx1, nx2, ops);
  const Matrix id_b = Matrix::Identity(dim_B, dim_B);
  for (int x2 = 0; x2 < nx2; ++x2)
    for (int x1 = 0; x1 < nx1; ++x1)
      for (int o2 = 0; o2 < na2; ++o2)
        for (int o1 = 0; o1 < na1; ++o1) {
          const Matrix effect = linalg::kron(linalg::kron(povms_A[x1][o1].matrix(), povms_C[x2][o2].matrix()), id_b);
          const Matrix reduced = linalg::trace_first(effect * rho_ACB.matrix(), dim_A * dim_C, dim_B);
          ops[shape.index(o1, o2, x1, x2)] = HermitianOp::hermitized(reduced);
        }
  return JointAssemblage({dim_B}, na1, na2, nx1, nx2, std::move(ops));
}

}  // namespace steerq
