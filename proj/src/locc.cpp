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

#include "steerq/locc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steerq/error.hpp"

namespace steerq {

Instrument::Instrument(int dim_in, std::vector<std::vector<Matrix>> branches)
    : dim_in_(dim_in), branches_(std::move(branches)) {
  if (dim_in <= 0) fail(ErrorKind::kArgument, "instrument input dimension must be positive");
  if (branches_.empty()) fail(ErrorKind::kArgument, "instrument has no branches");
  dim_out_ = -1;
  for (const auto &branch : branches_) {
    if (branch.empty()) fail(ErrorKind::kArgument, "instrument branch has no Kraus operators");
    for (const auto &k : branch) {
      if (k.cols() != dim_in) fail(ErrorKind::kArgument, "Kraus operator has the wrong input dimension");
      if (dim_out_ < 0) dim_out_ = static_cast<int>(k.rows());
      if (k.rows() != dim_out_ || dim_out_ == 0) fail(ErrorKind::kArgument, "Kraus output dimensions differ");
      if (!k.allFinite()) fail(ErrorKind::kArgument, "Kraus operator has non-finite entries");
    }
  }
  const double r = completeness_residual();
  if (r > kInstrumentTol) {
    fail(ErrorKind::kArgument, "instrument is not trace preserving (residual " + std::to_string(r) + ")");
  }
}

double Instrument::completeness_residual() const {
  Matrix total = Matrix::Zero(dim_in_, dim_in_);
  for (const auto &branch : branches_)
    for (const auto &k : branch) total += k.adjoint() * k;
  return linalg::max_abs(total - Matrix::Identity(dim_in_, dim_in_));
}

Matrix Instrument::apply(int y, const Matrix &rho) const {
  Matrix out = Matrix::Zero(dim_out_, dim_out_);
  for (const auto &k : branches_[y]) out += k * rho * k.adjoint();
  return linalg::hermitize(out);
}

Matrix Instrument::apply_extended(int y, const Matrix &rho, int dim_E) const {
  const int n = dim_out_ * dim_E;
  Matrix out = Matrix::Zero(n, n);
  for (const auto &k : branches_[y]) {
    const Matrix ke = linalg::lift_first(k, dim_E);
    out += ke * rho * ke.adjoint();
  }
  return out;
}

Matrix Instrument::adjoint_extended(int y, const Matrix &g, int dim_E) const {
  const int n = dim_in_ * dim_E;
  Matrix out = Matrix::Zero(n, n);
  for (const auto &k : branches_[y]) {
    const Matrix ke = linalg::lift_first(k, dim_E);
    out += ke.adjoint() * g * ke;
  }
  return out;
}

ClassicalChannel::ClassicalChannel(Eigen::MatrixXd rows) : m_(std::move(rows)) {
  if (m_.rows() == 0 || m_.cols() == 0) fail(ErrorKind::kArgument, "channel must be non-empty");
  for (int i = 0; i < m_.rows(); ++i) {
    for (int j = 0; j < m_.cols(); ++j) {
      if (!std::isfinite(m_(i, j)) || m_(i, j) < 0.0) fail(ErrorKind::kArgument, "channel has a negative entry");
    }
    if (std::abs(m_.row(i).sum() - 1.0) > kChannelTol) {
      fail(ErrorKind::kArgument, "channel row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

ClassicalChannel ClassicalChannel::identity(int n) { return ClassicalChannel(Eigen::MatrixXd::Identity(n, n)); }

ClassicalChannel ClassicalChannel::constant(int num_in, const std::vector<double> &p) {
  Eigen::MatrixXd m(num_in, p.size());
  for (int i = 0; i < num_in; ++i)
    for (size_t j = 0; j < p.size(); ++j) m(i, j) = p[j];
  return ClassicalChannel(m);
}

ClassicalChannel ClassicalChannel::deterministic(int num_out, const std::vector<int> &map) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(map.size(), num_out);
  for (size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0 || map[i] >= num_out) fail(ErrorKind::kArgument, "deterministic map out of range");
    m(i, map[i]) = 1.0;
  }
  return ClassicalChannel(m);
}

CqState apply_1wlocc(const Assemblage &a, const Instrument &inst, const ClassicalChannel &p_X_given_Y) {
  if (inst.dim_in() != a.dim_B()) fail(ErrorKind::kArgument, "instrument input dimension differs from dim_B");
  if (p_X_given_Y.num_in() != inst.num_branches() || p_X_given_Y.num_out() != a.num_inputs()) {
    fail(ErrorKind::kArgument, "p(x|y) must be |Y| x |X|");
  }
  const int nx = a.num_inputs(), na = a.num_outputs(), db = inst.dim_out(), ny = inst.num_branches();
  const int dim = nx * na * db * ny;
  Matrix state = Matrix::Zero(dim, dim);
  std::vector<double> p_X(nx, 0.0);
  for (int x = 0; x < nx; ++x)
    for (int o = 0; o < na; ++o)
      for (int y = 0; y < ny; ++y) {
        const double w = p_X_given_Y(x, y);
        if (w == 0.0) continue;
        const Matrix out = w * inst.apply(y, a.op(o, x).matrix());
        p_X[x] += out.trace().real();
        // X, A, B', Y with Y fastest.
        for (int r = 0; r < db; ++r)
          for (int s = 0; s < db; ++s)
            state(((x * na + o) * db + r) * ny + y, ((x * na + o) * db + s) * ny + y) = out(r, s);
      }
  const double tr = state.trace().real();
  if (std::abs(tr - 1.0) > kInstrumentTol * 10) {
    fail(ErrorKind::kInconsistency, "post-strategy state has trace " + std::to_string(tr));
  }
  return {HermitianOp(state), RegisterLayout{{"X", nx}, {"A", na}, {"B", db}, {"Y", ny}}, p_X};
}

void check_restricted_op(const Assemblage &a, const RestrictedLoccOp &op) {
  if (op.instrument.dim_in() != a.dim_B()) fail(ErrorKind::kArgument, "instrument input dimension differs from dim_B");
  if (op.input.num_out() != a.num_inputs()) fail(ErrorKind::kArgument, "input channel must output |X| symbols");
  const long rows = static_cast<long>(a.num_outputs()) * a.num_inputs() * op.input.num_in() *
                    op.instrument.num_branches();
  if (op.output.num_in() != rows) {
    fail(ErrorKind::kArgument, "output channel needs " + std::to_string(rows) + " rows");
  }
}

Assemblage apply_restricted(const Assemblage &a, const RestrictedLoccOp &op) {
  check_restricted_op(a, op);
  const int nx = a.num_inputs(), na = a.num_outputs(), nz = op.instrument.num_branches();
  const int nxf = op.input.num_in(), naf = op.output.num_out(), db = op.instrument.dim_out();
  std::vector<Matrix> images(a.size() * nz);
  for (int z = 0; z < nz; ++z)
    for (int i = 0; i < a.size(); ++i) images[i + a.size() * z] = op.instrument.apply(z, a.ops()[i].matrix());
  std::vector<HermitianOp> ops;
  for (int xf = 0; xf < nxf; ++xf)
    for (int af = 0; af < naf; ++af) {
      Matrix m = Matrix::Zero(db, db);
      for (int z = 0; z < nz; ++z)
        for (int x = 0; x < nx; ++x) {
          const double px = op.input(x, xf);
          if (px == 0.0) continue;
          for (int o = 0; o < na; ++o) {
            const double w = px * op.output(af, o + na * (x + nx * (xf + nxf * z)));
            if (w != 0.0) m += w * images[a.index(o, x) + a.size() * z];
          }
        }
      ops.push_back(HermitianOp::hermitized(m));
    }
  // ops were pushed with a_f fastest, matching index a_f + |A_f| x_f.
  return Assemblage(db, nxf, naf, std::move(ops));
}

NSExtension apply_restricted_extension(const NSExtension &ext, const RestrictedLoccOp &op) {
  const int nx = ext.num_inputs, na = ext.num_outputs, nz = op.instrument.num_branches();
  const int nxf = op.input.num_in(), naf = op.output.num_out(), db = op.instrument.dim_out();
  if (op.instrument.dim_in() != ext.dim_B || op.input.num_out() != nx ||
      op.output.num_in() != static_cast<long>(na) * nx * nxf * nz) {
    fail(ErrorKind::kArgument, "restricted op does not fit the extension");
  }
  const int de = ext.dim_E, de_out = de * nz, dim = db * de_out;
  std::vector<Matrix> images(ext.ops.size() * nz);
  for (int z = 0; z < nz; ++z) {
    Matrix flag = Matrix::Zero(nz, nz);
    flag(z, z) = 1.0;
    for (size_t i = 0; i < ext.ops.size(); ++i)
      images[i + ext.ops.size() * z] = linalg::kron(op.instrument.apply_extended(z, ext.ops[i], de), flag);
  }
  NSExtension out{db, de_out, nxf, naf, {}};
  for (int xf = 0; xf < nxf; ++xf)
    for (int af = 0; af < naf; ++af) {
      Matrix m = Matrix::Zero(dim, dim);
      for (int z = 0; z < nz; ++z)
        for (int x = 0; x < nx; ++x) {
          const double px = op.input(x, xf);
          if (px == 0.0) continue;
          for (int o = 0; o < na; ++o) {
            const double w = px * op.output(af, o + na * (x + nx * (xf + nxf * z)));
            if (w != 0.0) m += w * images[o + na * x + ext.ops.size() * z];
          }
        }
      out.ops.push_back(linalg::hermitize(m));
    }
  return out;
}

LoccEnsemble apply_general_1wlocc_ensemble(const Assemblage &a, const GeneralLoccOp &op) {
  const int nx = a.num_inputs(), na = a.num_outputs(), nz = op.instrument.num_branches();
  const int nxf = op.num_inputs_final, naf = op.output.num_out(), db = op.instrument.dim_out();
  if (op.instrument.dim_in() != a.dim_B()) fail(ErrorKind::kArgument, "instrument input dimension differs from dim_B");
  if (nxf <= 0 || op.input.num_in() != nxf * nz || op.input.num_out() != nx) {
    fail(ErrorKind::kArgument, "input channel must map (x_f, z) to x");
  }
  if (op.output.num_in() != static_cast<long>(na) * nx * nxf * nz) {
    fail(ErrorKind::kArgument, "output channel must map (a, x, x_f, z) to a_f");
  }
  const Matrix rho_b = a.bob_state();
  LoccEnsemble ens;
  double kept = 0.0;
  for (int z = 0; z < nz; ++z) {
    const double pz = op.instrument.apply(z, rho_b).trace().real();
    if (pz <= kBranchFloor) {
      ens.dropped_mass += std::max(pz, 0.0);
      ++ens.dropped_branches;
      continue;
    }
    std::vector<Matrix> images(a.size());
    for (int i = 0; i < a.size(); ++i) images[i] = op.instrument.apply(z, a.ops()[i].matrix());
    std::vector<HermitianOp> ops;
    for (int xf = 0; xf < nxf; ++xf)
      for (int af = 0; af < naf; ++af) {
        Matrix m = Matrix::Zero(db, db);
        for (int x = 0; x < nx; ++x) {
          const double px = op.input(x, xf + nxf * z);
          if (px == 0.0) continue;
          for (int o = 0; o < na; ++o) {
            const double w = px * op.output(af, o + na * (x + nx * (xf + nxf * z)));
            if (w != 0.0) m += w * images[a.index(o, x)];
          }
        }
        ops.push_back(HermitianOp::hermitized(m / pz));
      }
    ens.branches.push_back({pz, Assemblage(db, nxf, naf, std::move(ops))});
    kept += pz;
  }
  if (ens.branches.empty()) fail(ErrorKind::kNumeric, "every instrument branch has vanishing probability");
  for (auto &b : ens.branches) b.probability /= kept;
  return ens;
}

Instrument identity_instrument(int dim) { return Instrument(dim, {{Matrix::Identity(dim, dim)}}); }

Instrument unitary_instrument(const Matrix &u) { return Instrument(static_cast<int>(u.cols()), {{u}}); }

Instrument basis_measurement(const Matrix &basis) {
  const int d = static_cast<int>(basis.rows());
  std::vector<std::vector<Matrix>> branches;
  for (int b = 0; b < basis.cols(); ++b) branches.push_back({basis.col(b) * basis.col(b).adjoint()});
  return Instrument(d, std::move(branches));
}

Instrument trace_and_prepare(int dim_in, const Matrix &sigma) {
  const auto e = linalg::eigh(linalg::hermitize(sigma));
  std::vector<Matrix> kraus;
  for (int i = 0; i < e.values.size(); ++i) {
    if (e.values(i) <= kEigenFloor) continue;
    for (int j = 0; j < dim_in; ++j) {
      Matrix k = Matrix::Zero(sigma.rows(), dim_in);
      k.col(j) = std::sqrt(e.values(i)) * e.vectors.col(i);
      kraus.push_back(k);
    }
  }
  return Instrument(dim_in, {kraus});
}

std::vector<Matrix> mub_bases(int dim) {
  std::vector<Matrix> bases{Matrix::Identity(dim, dim)};
  if (dim == 2) {
    Matrix x(2, 2), y(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    x << s, s, s, -s;
    y << s, s, Complex(0, s), Complex(0, -s);
    bases.push_back(x);
    bases.push_back(y);
    return bases;
  }
  bool prime = dim > 2;
  for (int q = 2; q * q <= dim; ++q) prime = prime && dim % q != 0;
  // Odd prime d: columns m of basis k are omega^{k j^2 + m j} / sqrt(d).
  // Otherwise only the Fourier basis is added.
  const int families = prime ? dim : 1;
  for (int k = 0; k < families; ++k) {
    Matrix b(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int m = 0; m < dim; ++m)
        b(j, m) = std::polar(1.0 / std::sqrt(dim), 2.0 * std::numbers::pi * ((k * j * j + m * j) % dim) / dim);
    bases.push_back(b);
  }
  return bases;
}

Matrix qubit_rotation(double theta, double phi) {
  const Complex i(0, 1);
  Matrix u(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u << c, -i * s * std::exp(-i * phi), -i * s * std::exp(i * phi), c;
  return u;
}

std::vector<NamedInstrument> instrument_library(int dim, int rotation_grid) {
  std::vector<NamedInstrument> lib{{"identity", identity_instrument(dim)}};
  const auto bases = mub_bases(dim);
  for (size_t k = 0; k < bases.size(); ++k) lib.push_back({"mub-" + std::to_string(k), basis_measurement(bases[k])});
  lib.push_back({"trace-and-prepare", trace_and_prepare(dim, Matrix::Identity(dim, dim) / double(dim))});
  if (dim == 2 && rotation_grid > 0) {
    for (int t = 1; t <= rotation_grid; ++t)
      for (int p = 0; p < rotation_grid; ++p) {
        const double theta = std::numbers::pi * t / (rotation_grid + 1);
        const double phi = 2.0 * std::numbers::pi * p / rotation_grid;
        lib.push_back({"rotation-" + std::to_string(t) + "-" + std::to_string(p),
                       unitary_instrument(qubit_rotation(theta, phi))});
      }
  }
  return lib;
}

Instrument random_instrument(int dim_in, int dim_out, int num_branches, int num_kraus, Rng &rng) {
  const Matrix v = random_isometry(dim_out * num_branches * num_kraus, dim_in, rng);
  std::vector<std::vector<Matrix>> branches(num_branches);
  for (int y = 0; y < num_branches; ++y)
    for (int t = 0; t < num_kraus; ++t)
      branches[y].push_back(v.block((y * num_kraus + t) * dim_out, 0, dim_out, dim_in));
  return Instrument(dim_in, std::move(branches));
}

ClassicalChannel random_channel(int num_in, int num_out, Rng &rng) {
  Eigen::MatrixXd m(num_in, num_out);
  for (int i = 0; i < num_in; ++i) {
    // Half the rows deterministic, so relabelings and coarse-grainings occur.
    if (rng.uniform() < 0.5) {
      m.row(i).setZero();
      m(i, rng.uniform_int(num_out)) = 1.0;
    } else {
      const auto p = random_simplex(num_out, rng);
      for (int j = 0; j < num_out; ++j) m(i, j) = p[j];
    }
  }
  return ClassicalChannel(m);
}

RestrictedLoccOp random_restricted_op(const Assemblage &a, Rng &rng, int max_inputs, int max_outputs,
                                      int max_branches) {
  const int nxf = 1 + rng.uniform_int(max_inputs);
  const int naf = 1 + rng.uniform_int(max_outputs);
  const int nz = 1 + rng.uniform_int(max_branches);
  const int nk = 1 + rng.uniform_int(2);
  const int rows = a.num_outputs() * a.num_inputs() * nxf * nz;
  return {random_channel(nxf, a.num_inputs(), rng), random_channel(rows, naf, rng),
          random_instrument(a.dim_B(), a.dim_B(), nz, nk, rng)};
}

GeneralLoccOp random_general_op(const Assemblage &a, Rng &rng, int max_inputs, int max_outputs, int max_branches) {
  const int nxf = 1 + rng.uniform_int(max_inputs);
  const int naf = 1 + rng.uniform_int(max_outputs);
  const int nz = 1 + rng.uniform_int(max_branches);
  const int rows = a.num_outputs() * a.num_inputs() * nxf * nz;
  return {random_channel(nxf * nz, a.num_inputs(), rng), random_channel(rows, naf, rng),
          random_instrument(a.dim_B(), a.dim_B(), nz, 1 + rng.uniform_int(2), rng), nxf};
}

}  // namespace steerq
