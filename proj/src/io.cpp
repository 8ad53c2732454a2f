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


#include "steerq/io.hpp"

#include <fstream>
#include <sstream>

#include "steerq/error.hpp"

namespace steerq {

namespace {

const Json &field(const Json &j, const std::string &key, const std::string &what) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::kArgument, what + ": missing field '" + key + "'");
  return j.at(key);
}

int positive_int(const Json &j, const std::string &key, const std::string &what) {
  const Json &v = field(j, key, what);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    fail(ErrorKind::kArgument, what + ": '" + key + "' must be a positive integer");
  }
  return v.get<int>();
}

double number(const Json &v, const std::string &what) {
  if (!v.is_number()) fail(ErrorKind::kArgument, what + ": expected a number");
  return v.get<double>();
}

const Json &array_of(const Json &v, size_t n, const std::string &what) {
  if (!v.is_array() || v.size() != n) {
    fail(ErrorKind::kArgument, what + ": expected an array of length " + std::to_string(n));
  }
  return v;
}

Matrix square_matrix(const Json &v, int dim, const std::string &what) {
  Matrix m = matrix_from_json(v, what);
  if (m.rows() != dim || m.cols() != dim) {
    fail(ErrorKind::kArgument, what + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  return m;
}

HermitianOp hermitian(const Matrix &m, const std::string &what) {
  if (linalg::max_abs(m - m.adjoint()) > kStructuralTol) fail(ErrorKind::kArgument, what + ": not Hermitian");
  return HermitianOp::hermitized(m);
}

Json vector_json(const std::vector<double> &v) { return Json(v); }

}  // namespace

Json to_json(const Matrix &m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json &j, const std::string &what) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::kArgument, what + ": a matrix is a non-empty list of rows");
  const size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) fail(ErrorKind::kArgument, what + ": empty matrix row");
  Matrix m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(ErrorKind::kArgument, what + ": ragged matrix rows");
    for (size_t c = 0; c < cols; ++c) {
      const Json &e = j[r][c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        fail(ErrorKind::kArgument, what + ": entry (" + std::to_string(r) + ", " + std::to_string(c) +
                                       ") must be [re, im]");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

RawAssemblage raw_assemblage_from_json(const Json &j) {
  RawAssemblage raw;
  raw.dim_B = positive_int(j, "dim_B", "assemblage");
  raw.num_inputs = positive_int(j, "num_inputs", "assemblage");
  raw.num_outputs = positive_int(j, "num_outputs", "assemblage");
  const Json &ops = array_of(field(j, "ops", "assemblage"), raw.num_inputs, "assemblage ops");
  raw.ops.resize(static_cast<size_t>(raw.num_inputs * raw.num_outputs));
  for (int x = 0; x < raw.num_inputs; ++x) {
    array_of(ops[x], raw.num_outputs, "assemblage ops[" + std::to_string(x) + "]");
    for (int a = 0; a < raw.num_outputs; ++a) {
      raw.ops[a + raw.num_outputs * x] =
          square_matrix(ops[x][a], raw.dim_B, "ops[" + std::to_string(x) + "][" + std::to_string(a) + "]");
    }
  }
  return raw;
}

Assemblage assemblage_from_json(const Json &j) {
  const RawAssemblage raw = raw_assemblage_from_json(j);
  std::vector<HermitianOp> ops;
  for (size_t i = 0; i < raw.ops.size(); ++i) {
    ops.push_back(hermitian(raw.ops[i], "assemblage operator " + std::to_string(i)));
  }
  return Assemblage(raw.dim_B, raw.num_inputs, raw.num_outputs, std::move(ops));
}

Json to_json(const Assemblage &a) {
  Json ops = Json::array();
  for (int x = 0; x < a.num_inputs(); ++x) {
    Json row = Json::array();
    for (int o = 0; o < a.num_outputs(); ++o) row.push_back(to_json(a.op(o, x).matrix()));
    ops.push_back(std::move(row));
  }
  return {{"dim_B", a.dim_B()}, {"num_inputs", a.num_inputs()}, {"num_outputs", a.num_outputs()}, {"ops", ops}};
}

Json to_json(const JointAssemblage &j) {
  Json ops = Json::array();
  for (int x1 = 0; x1 < j.num_inputs1(); ++x1) {
    Json by_x2 = Json::array();
    for (int x2 = 0; x2 < j.num_inputs2(); ++x2) {
      Json by_a1 = Json::array();
      for (int a1 = 0; a1 < j.num_outputs1(); ++a1) {
        Json by_a2 = Json::array();
        for (int a2 = 0; a2 < j.num_outputs2(); ++a2) by_a2.push_back(to_json(j.op(a1, a2, x1, x2).matrix()));
        by_a1.push_back(std::move(by_a2));
      }
      by_x2.push_back(std::move(by_a1));
    }
    ops.push_back(std::move(by_x2));
  }
  return {{"dims_B", j.dims_B()},           {"num_inputs1", j.num_inputs1()}, {"num_inputs2", j.num_inputs2()},
          {"num_outputs1", j.num_outputs1()}, {"num_outputs2", j.num_outputs2()}, {"ops", ops}};
}

JointAssemblage joint_assemblage_from_json(const Json &j) {
  const Json &dims_json = field(j, "dims_B", "joint assemblage");
  if (!dims_json.is_array() || dims_json.empty() || dims_json.size() > 2) {
    fail(ErrorKind::kArgument, "joint assemblage: 'dims_B' must list one or two dimensions");
  }
  std::vector<int> dims;
  int dim = 1;
  for (const auto &d : dims_json) {
    if (!d.is_number_integer() || d.get<int>() <= 0) fail(ErrorKind::kArgument, "joint assemblage: bad dims_B");
    dims.push_back(d.get<int>());
    dim *= dims.back();
  }
  const int nx1 = positive_int(j, "num_inputs1", "joint assemblage"), nx2 = positive_int(j, "num_inputs2", "joint assemblage");
  const int na1 = positive_int(j, "num_outputs1", "joint assemblage"),
            na2 = positive_int(j, "num_outputs2", "joint assemblage");
  const Json &ops = array_of(field(j, "ops", "joint assemblage"), nx1, "joint ops");
  std::vector<HermitianOp> out(static_cast<size_t>(na1 * na2 * nx1 * nx2));
  for (int x1 = 0; x1 < nx1; ++x1) {
    array_of(ops[x1], nx2, "joint ops[x1]");
    for (int x2 = 0; x2 < nx2; ++x2) {
      array_of(ops[x1][x2], na1, "joint ops[x1][x2]");
      for (int a1 = 0; a1 < na1; ++a1) {
        array_of(ops[x1][x2][a1], na2, "joint ops[x1][x2][a1]");
        for (int a2 = 0; a2 < na2; ++a2) {
          const std::string what = "joint ops[" + std::to_string(x1) + "][" + std::to_string(x2) + "][" +
                                   std::to_string(a1) + "][" + std::to_string(a2) + "]";
          out[a1 + na1 * (a2 + na2 * (x1 + nx1 * x2))] = hermitian(square_matrix(ops[x1][x2][a1][a2], dim, what), what);
        }
      }
    }
  }
  return JointAssemblage(dims, na1, na2, nx1, nx2, std::move(out));
}

Json to_json(const LhsModel &m) {
  Json strategies = Json::array(), sigma = Json::array();
  for (const auto &s : m.strategies) strategies.push_back(s.response);
  for (const auto &s : m.sigma) sigma.push_back(to_json(s.matrix()));
  return {{"strategies", strategies}, {"sigma", sigma}};
}

LhsModel lhs_model_from_json(const Json &j) {
  const Json &strategies = field(j, "strategies", "LHS model");
  const Json &sigma = field(j, "sigma", "LHS model");
  if (!strategies.is_array() || !sigma.is_array() || strategies.size() != sigma.size()) {
    fail(ErrorKind::kArgument, "LHS model: 'strategies' and 'sigma' must be arrays of equal length");
  }
  LhsModel m;
  for (size_t i = 0; i < strategies.size(); ++i) {
    DeterministicStrategy s;
    if (!strategies[i].is_array()) fail(ErrorKind::kArgument, "LHS model: a strategy is a list of outputs");
    for (const auto &a : strategies[i]) {
      if (!a.is_number_integer() || a.get<int>() < 0) fail(ErrorKind::kArgument, "LHS model: bad output label");
      s.response.push_back(a.get<int>());
    }
    m.strategies.push_back(std::move(s));
    m.sigma.push_back(hermitian(matrix_from_json(sigma[i], "sigma"), "sigma[" + std::to_string(i) + "]"));
  }
  return m;
}

Json to_json(const NSExtension &e) {
  Json ops = Json::array();
  for (int x = 0; x < e.num_inputs; ++x) {
    Json row = Json::array();
    for (int a = 0; a < e.num_outputs; ++a) row.push_back(to_json(e.op(a, x)));
    ops.push_back(std::move(row));
  }
  return {{"dim_B", e.dim_B},
          {"dim_E", e.dim_E},
          {"num_inputs", e.num_inputs},
          {"num_outputs", e.num_outputs},
          {"ops", ops}};
}

NSExtension extension_from_json(const Json &j) {
  NSExtension e;
  e.dim_B = positive_int(j, "dim_B", "extension");
  e.dim_E = positive_int(j, "dim_E", "extension");
  e.num_inputs = positive_int(j, "num_inputs", "extension");
  e.num_outputs = positive_int(j, "num_outputs", "extension");
  const Json &ops = array_of(field(j, "ops", "extension"), e.num_inputs, "extension ops");
  e.ops.resize(static_cast<size_t>(e.num_inputs * e.num_outputs));
  for (int x = 0; x < e.num_inputs; ++x) {
    array_of(ops[x], e.num_outputs, "extension ops[x]");
    for (int a = 0; a < e.num_outputs; ++a) {
      const std::string what = "extension ops[" + std::to_string(x) + "][" + std::to_string(a) + "]";
      e.ops[a + e.num_outputs * x] = hermitian(square_matrix(ops[x][a], e.dim(), what), what).matrix();
    }
  }
  return e;
}

Json to_json(const Instrument &inst) {
  Json branches = Json::array();
  for (const auto &branch : inst.branches()) {
    Json kraus = Json::array();
    for (const auto &k : branch) kraus.push_back(to_json(k));
    branches.push_back({{"kraus", kraus}});
  }
  return {{"branches", branches}};
}

Instrument instrument_from_json(const Json &j) {
  const Json &branches = field(j, "branches", "instrument");
  if (!branches.is_array() || branches.empty()) fail(ErrorKind::kArgument, "instrument: 'branches' must be non-empty");
  std::vector<std::vector<Matrix>> out;
  int dim_in = -1;
  for (const auto &b : branches) {
    const Json &kraus = field(b, "kraus", "instrument branch");
    if (!kraus.is_array() || kraus.empty()) fail(ErrorKind::kArgument, "instrument: empty Kraus list");
    std::vector<Matrix> ks;
    for (const auto &k : kraus) {
      ks.push_back(matrix_from_json(k, "Kraus operator"));
      if (dim_in < 0) dim_in = static_cast<int>(ks.back().cols());
    }
    out.push_back(std::move(ks));
  }
  return Instrument(dim_in, std::move(out));
}

Json to_json(const ClassicalChannel &c) {
  Json rows = Json::array();
  for (int r = 0; r < c.num_in(); ++r) {
    Json row = Json::array();
    for (int o = 0; o < c.num_out(); ++o) row.push_back(c.matrix()(r, o));
    rows.push_back(std::move(row));
  }
  return rows;
}

ClassicalChannel channel_from_json(const Json &j) {
  if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty()) {
    fail(ErrorKind::kArgument, "channel: expected a non-empty list of rows");
  }
  Eigen::MatrixXd m(j.size(), j.front().size());
  for (size_t r = 0; r < j.size(); ++r) {
    array_of(j[r], m.cols(), "channel row");
    for (int c = 0; c < m.cols(); ++c) m(r, c) = number(j[r][c], "channel entry");
  }
  return ClassicalChannel(m);
}

Json to_json(const ValidationReport &r) {
  return {{"pass", r.pass},
          {"max_hermiticity_violation", r.max_hermiticity_violation},
          {"max_psd_violation", r.max_psd_violation},
          {"max_normalization_residual", r.max_normalization_residual},
          {"max_nosignaling_residual", r.max_nosignaling_residual},
          {"violations", r.violations}};
}

Json to_json(const CqState &s) {
  Json layout = Json::array();
  for (const auto &reg : s.layout.registers()) layout.push_back({{"label", reg.label}, {"dim", reg.dim}});
  return {{"layout", layout}, {"p_X", vector_json(s.p_X)}, {"state", to_json(s.state.matrix())}};
}

Json to_json(const LhsResult &r) {
  Json out = {{"status", lhs_status_name(r.status)}, {"residual", r.residual}, {"iterations", r.iterations}};
  out["model"] = r.model ? to_json(*r.model) : Json(nullptr);
  return out;
}

Json to_json(const SteeringEstimate &e) {
  Json trace = Json::array();
  for (const auto &p : e.trace) trace.push_back({{"p_X", vector_json(p.p_X)}, {"value", p.value}, {"refined", p.refined}});
  return {{"quantity", e.quantity},
          {"value", e.value},
          {"raw_value", e.raw_value},
          {"p_X", vector_json(e.p_X)},
          {"dim_E", e.dim_E},
          {"exact", e.exact},
          {"inner_upper_bound", e.inner_upper_bound},
          {"outer_lower_bound", e.outer_lower_bound},
          {"strategy", e.strategy},
          {"inner",
           {{"converged", e.inner.converged},
            {"restarts_used", e.inner.restarts_used},
            {"best", e.inner.best},
            {"median", e.inner.median},
            {"spread", e.inner.spread},
            {"method", e.inner.method}}},
          {"trace", trace}};
}

Json to_json(const PropertyReport &r) {
  return {{"name", r.name},   {"left", r.left},     {"right", r.right},   {"slack", r.slack},
          {"tolerance", r.tolerance}, {"pass", r.pass}, {"digest", r.digest}, {"detail", r.detail}};
}

Json to_json(const RunConfig &rc) {
  const SteerConfig &c = rc.steer;
  return {{"seed", c.seed},
          {"dim_E", c.dim_E},
          {"restarts", c.restarts},
          {"grid", c.grid},
          {"refine_starts", c.refine_starts},
          {"lbfgs_iters", c.lbfgs_iters},
          {"alm_rounds", c.alm_rounds},
          {"alm_penalty", c.alm_penalty},
          {"max_refine_dim", c.max_refine_dim},
          {"project_max_iters", c.project_max_iters},
          {"nm_evals", c.nm_evals},
          {"nm_lbfgs_iters", c.nm_lbfgs_iters},
          {"use_lhs_seed", c.use_lhs_seed},
          {"threads", c.threads},
          {"out", rc.out},
          {"tolerances",
           {{"outer_tol", c.outer_tol},
            {"alm_tol", c.alm_tol},
            {"project_tol", c.project_tol},
            {"eps_mono", c.eps_mono},
            {"eps_add", c.eps_add},
            {"bb84", rc.verify.bb84},
            {"schmidt", rc.verify.schmidt},
            {"maximally_entangled", rc.verify.maximally_entangled},
            {"lhs", rc.verify.lhs}}}};
}

namespace {

void reject_unknown(const Json &j, const Json &defaults, const std::string &what) {
  if (!j.is_object()) fail(ErrorKind::kArgument, what + ": expected an object");
  for (const auto &[key, v] : j.items()) {
    if (!defaults.contains(key)) fail(ErrorKind::kArgument, what + ": unknown key '" + key + "'");
  }
}

void read_count(const Json &j, const char *key, int &out, int min) {
  if (!j.contains(key)) return;
  const Json &v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < min) {
    fail(ErrorKind::kArgument, std::string("config: '") + key + "' must be an integer >= " + std::to_string(min));
  }
  out = v.get<int>();
}

void read_positive(const Json &j, const char *key, double &out) {
  if (!j.contains(key)) return;
  const double v = number(j.at(key), std::string("config '") + key + "'");
  if (!(v > 0.0)) fail(ErrorKind::kArgument, std::string("config: '") + key + "' must be positive");
  out = v;
}

}  // namespace

RunConfig config_from_json(const Json &j) {
  RunConfig rc;
  const Json defaults = to_json(rc);
  reject_unknown(j, defaults, "config");
  SteerConfig &c = rc.steer;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail(ErrorKind::kArgument, "config: 'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  read_count(j, "dim_E", c.dim_E, 0);
  read_count(j, "restarts", c.restarts, 0);
  read_count(j, "grid", c.grid, 0);
  if (c.grid == 1) fail(ErrorKind::kArgument, "config: 'grid' needs at least two points per edge");
  read_count(j, "refine_starts", c.refine_starts, 1);
  read_count(j, "lbfgs_iters", c.lbfgs_iters, 1);
  read_count(j, "alm_rounds", c.alm_rounds, 1);
  read_positive(j, "alm_penalty", c.alm_penalty);
  read_count(j, "max_refine_dim", c.max_refine_dim, 1);
  read_count(j, "project_max_iters", c.project_max_iters, 1);
  read_count(j, "nm_evals", c.nm_evals, 0);
  read_count(j, "nm_lbfgs_iters", c.nm_lbfgs_iters, 1);
  read_count(j, "threads", c.threads, 1);
  if (j.contains("use_lhs_seed")) {
    if (!j.at("use_lhs_seed").is_boolean()) fail(ErrorKind::kArgument, "config: 'use_lhs_seed' must be a boolean");
    c.use_lhs_seed = j.at("use_lhs_seed").get<bool>();
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) fail(ErrorKind::kArgument, "config: 'out' must be a string");
    rc.out = j.at("out").get<std::string>();
  }
  if (j.contains("tolerances")) {
    const Json &t = j.at("tolerances");
    reject_unknown(t, defaults.at("tolerances"), "config tolerances");
    read_positive(t, "outer_tol", c.outer_tol);
    read_positive(t, "alm_tol", c.alm_tol);
    read_positive(t, "project_tol", c.project_tol);
    read_positive(t, "eps_mono", c.eps_mono);
    read_positive(t, "eps_add", c.eps_add);
    read_positive(t, "bb84", rc.verify.bb84);
    read_positive(t, "schmidt", rc.verify.schmidt);
    read_positive(t, "maximally_entangled", rc.verify.maximally_entangled);
    read_positive(t, "lhs", rc.verify.lhs);
  }
  return rc;
}

Json parse_json(const std::string &text, const std::string &source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorKind::kArgument, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

Json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kArgument, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

void write_json_file(const std::string &path, const Json &j) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kArgument, "cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorKind::kArgument, "write to '" + path + "' failed");
}

}  // namespace steerq
