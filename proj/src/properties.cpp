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

#include <cmath>
#include <cstdio>
#include <set>

#include "steerq/digest.hpp"
#include "steerq/error.hpp"
#include "steerq/lhs.hpp"
#include "steerq/parallel.hpp"
#include "steerq/steer.hpp"

namespace steerq {

namespace {

void append_matrix(std::string &out, const Matrix &m) {
  char buf[64];
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", m(r, c).real(), m(r, c).imag());
      out += buf;
    }
}

std::string serialize(const Assemblage &a) {
  std::string out = "assemblage " + std::to_string(a.dim_B()) + " " + std::to_string(a.num_inputs()) + " " +
                    std::to_string(a.num_outputs()) + "\n";
  for (const auto &op : a.ops()) append_matrix(out, op.matrix());
  return out;
}

std::string serialize(const RestrictedLoccOp &op) {
  std::string out = "restricted-op\n";
  append_matrix(out, op.input.matrix().cast<Complex>());
  append_matrix(out, op.output.matrix().cast<Complex>());
  for (const auto &branch : op.instrument.branches()) {
    out += "branch\n";
    for (const auto &k : branch) append_matrix(out, k);
  }
  return out;
}

// Distinct pool members that are best somewhere on the grid.
std::vector<int> grid_winners(const SteeringEstimate &est, int num_inputs, const SteerConfig &cfg) {
  std::set<int> winners;
  for (const auto &p : simplex_grid(num_inputs, grid_resolution(cfg, num_inputs))) {
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < est.witnesses.size(); ++i) {
      const double v = extension_value(est.witnesses[i], p);
      if (v < best_v) {
        best_v = v;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) winners.insert(best);
  }
  return {winners.begin(), winners.end()};
}

Matrix pad_E(const Matrix &m, int db, int de, int de_new) {
  if (de == de_new) return m;
  Matrix out = Matrix::Zero(db * de_new, db * de_new);
  for (int b1 = 0; b1 < db; ++b1)
    for (int b2 = 0; b2 < db; ++b2) out.block(b1 * de_new, b2 * de_new, de, de) = m.block(b1 * de, b2 * de, de, de);
  return out;
}

NSExtension flag_mixture(const NSExtension &e1, const NSExtension &e2, double lambda) {
  const int de = std::max(e1.dim_E, e2.dim_E), db = e1.dim_B;
  Matrix f0 = Matrix::Zero(2, 2), f1 = Matrix::Zero(2, 2);
  f0(0, 0) = 1.0;
  f1(1, 1) = 1.0;
  NSExtension out{db, 2 * de, e1.num_inputs, e1.num_outputs, {}};
  for (size_t i = 0; i < e1.ops.size(); ++i) {
    out.ops.push_back(lambda * linalg::kron(pad_E(e1.ops[i], db, e1.dim_E, de), f0) +
                      (1.0 - lambda) * linalg::kron(pad_E(e2.ops[i], db, e2.dim_E, de), f1));
  }
  return out;
}

// Extension of flatten(tensor(a1, a2)) on (B1 B2)(E1 E2).
NSExtension tensor_extension(const NSExtension &e1, const NSExtension &e2) {
  const int na1 = e1.num_outputs, na2 = e2.num_outputs, nx1 = e1.num_inputs, nx2 = e2.num_inputs;
  NSExtension out{e1.dim_B * e2.dim_B, e1.dim_E * e2.dim_E, nx1 * nx2, na1 * na2, {}};
  out.ops.resize(static_cast<size_t>(na1 * na2 * nx1 * nx2));
  const std::vector<int> dims{e1.dim_B, e1.dim_E, e2.dim_B, e2.dim_E};
  for (int x2 = 0; x2 < nx2; ++x2)
    for (int x1 = 0; x1 < nx1; ++x1)
      for (int a2 = 0; a2 < na2; ++a2)
        for (int a1 = 0; a1 < na1; ++a1) {
          const int a = a1 + na1 * a2, x = x1 + nx1 * x2;
          out.ops[a + na1 * na2 * x] =
              linalg::permute_subsystems(linalg::kron(e1.op(a1, x1), e2.op(a2, x2)), dims, {0, 2, 1, 3});
        }
  return out;
}

// Distinct pool members that are best somewhere on the product grid.
std::vector<int> product_grid_winners(const SteeringEstimate &est, int n1, int n2, int g1, int g2) {
  std::set<int> winners;
  std::vector<bool> zero(est.witnesses.size());
  for (size_t i = 0; i < est.witnesses.size(); ++i) zero[i] = screens_off(est.witnesses[i]);
  for (const auto &p2 : simplex_grid(n2, g2))
    for (const auto &p1 : simplex_grid(n1, g1)) {
      std::vector<double> p(n1 * n2);
      for (int x2 = 0; x2 < n2; ++x2)
        for (int x1 = 0; x1 < n1; ++x1) p[x1 + n1 * x2] = p1[x1] * p2[x2];
      int best = -1;
      double best_v = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < est.witnesses.size(); ++i) {
        const double v = zero[i] ? 0.0 : extension_value(est.witnesses[i], p);
        if (v < best_v) {
          best_v = v;
          best = static_cast<int>(i);
        }
      }
      if (best >= 0) winners.insert(best);
    }
  return {winners.begin(), winners.end()};
}

// Extension of wing `wing` of j obtained from a joint extension by averaging
// the other wing's input with `p_other`. With `keep_other` the other wing's
// input and output are kept as a classical register appended to E, which
// splits the joint CMI by the chain rule.
NSExtension wing_extension(const JointAssemblage &j, const NSExtension &joint, int wing,
                           const std::vector<double> &p_other, bool keep_other) {
  const int na1 = j.num_outputs1(), na2 = j.num_outputs2(), nx1 = j.num_inputs1(), nx2 = j.num_inputs2();
  const int na = wing == 1 ? na1 : na2, nx = wing == 1 ? nx1 : nx2;
  const int na_o = wing == 1 ? na2 : na1, nx_o = wing == 1 ? nx2 : nx1;
  const int flag_dim = keep_other ? na_o * nx_o : 1;
  const int db = joint.dim_B, de = joint.dim_E * flag_dim;
  NSExtension out{db, de, nx, na, std::vector<Matrix>(na * nx, Matrix::Zero(db * de, db * de))};
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a)
      for (int xo = 0; xo < nx_o; ++xo)
        for (int ao = 0; ao < na_o; ++ao) {
          const int a1 = wing == 1 ? a : ao, a2 = wing == 1 ? ao : a;
          const int x1 = wing == 1 ? x : xo, x2 = wing == 1 ? xo : x;
          const Matrix &m = joint.op(a1 + na1 * a2, x1 + nx1 * x2);
          Matrix flag = Matrix::Zero(flag_dim, flag_dim);
          flag(keep_other ? ao + na_o * xo : 0, keep_other ? ao + na_o * xo : 0) = 1.0;
          out.ops[a + na * x] += p_other[xo] * linalg::kron(m, flag);
        }
  return out;
}

std::vector<double> wing_marginal(const std::vector<double> &p, int n1, int n2, int wing) {
  std::vector<double> out(wing == 1 ? n1 : n2, 0.0);
  for (int x2 = 0; x2 < n2; ++x2)
    for (int x1 = 0; x1 < n1; ++x1) out[wing == 1 ? x1 : x2] += p[x1 + n1 * x2];
  return out;
}

RestrictedLoccOp identity_op(const Assemblage &a) {
  const int na = a.num_outputs(), nx = a.num_inputs();
  std::vector<int> map(na * nx * nx);
  for (int xf = 0; xf < nx; ++xf)
    for (int x = 0; x < nx; ++x)
      for (int o = 0; o < na; ++o) map[o + na * (x + nx * xf)] = o;
  return {ClassicalChannel::identity(nx), ClassicalChannel::deterministic(na, map), identity_instrument(a.dim_B())};
}

}  // namespace

std::string assemblage_digest(const Assemblage &a) { return git_blob_digest(serialize(a)); }

PropertyReport make_report(std::string name, double left, double right, double tolerance, std::string digest,
                           std::string detail) {
  PropertyReport r;
  r.name = std::move(name);
  r.left = left;
  r.right = right;
  r.slack = right - left;
  r.tolerance = tolerance;
  r.pass = r.slack >= -tolerance;
  r.digest = std::move(digest);
  r.detail = std::move(detail);
  return r;
}

PropertyReport check_monotone_op(const Assemblage &a, const SteeringEstimate &input, const RestrictedLoccOp &op,
                                 const SteerConfig &cfg, const std::string &name) {
  const Assemblage out = apply_restricted(a, op);
  std::vector<NSExtension> seeds;
  for (const auto &w : input.witnesses) seeds.push_back(apply_restricted_extension(w, op));
  const SteeringEstimate est = ris(out, cfg, seeds);
  return make_report(name, est.value, input.value, cfg.eps_mono, git_blob_digest(serialize(a) + serialize(op)),
                     "output |X|=" + std::to_string(out.num_inputs()) + " |A|=" + std::to_string(out.num_outputs()));
}

std::vector<PropertyReport> check_monotone_restricted(const Assemblage &a, int n_ops, const SteerConfig &cfg) {
  const SteeringEstimate input = ris(a, cfg);
  std::vector<PropertyReport> reports(n_ops);
  SteerConfig inner = cfg;
  inner.threads = 1;
  parallel_for(n_ops, cfg.threads, [&](int k) {
    Rng rng = Rng::stream(cfg.seed, 5000 + k);
    const RestrictedLoccOp op = k == 0 ? identity_op(a) : random_restricted_op(a, rng);
    reports[k] = check_monotone_op(a, input, op, inner, "monotonicity[" + std::to_string(k) + "]");
  });
  return reports;
}

PropertyReport check_convexity(const Assemblage &a1, const Assemblage &a2, double lambda, const SteerConfig &cfg) {
  if (a1.dim_B() != a2.dim_B() || a1.num_inputs() != a2.num_inputs() || a1.num_outputs() != a2.num_outputs()) {
    fail(ErrorKind::kArgument, "convexity needs assemblages of the same shape");
  }
  return check_convexity(a1, ris(a1, cfg), a2, ris(a2, cfg), lambda, cfg);
}

PropertyReport check_convexity(const Assemblage &a1, const SteeringEstimate &e1, const Assemblage &a2,
                               const SteeringEstimate &e2, double lambda, const SteerConfig &cfg) {
  if (a1.dim_B() != a2.dim_B() || a1.num_inputs() != a2.num_inputs() || a1.num_outputs() != a2.num_outputs()) {
    fail(ErrorKind::kArgument, "convexity needs assemblages of the same shape");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::kArgument, "lambda must lie in [0, 1]");
  const Assemblage m = mix(a1, a2, lambda);
  std::vector<NSExtension> seeds;
  const auto w1 = grid_winners(e1, a1.num_inputs(), cfg), w2 = grid_winners(e2, a2.num_inputs(), cfg);
  for (int i : w1)
    for (int j : w2) seeds.push_back(flag_mixture(e1.witnesses[i], e2.witnesses[j], lambda));
  const SteeringEstimate em = ris(m, cfg, seeds);
  return make_report("convexity", em.value, lambda * e1.value + (1.0 - lambda) * e2.value, cfg.eps_mono,
                     git_blob_digest(serialize(a1) + serialize(a2) + std::to_string(lambda)),
                     "lambda=" + std::to_string(lambda));
}

PropertyReport check_additivity(const Assemblage &a1, const Assemblage &a2, const SteerConfig &cfg) {
  if (a1.dim_B() * a2.dim_B() > 9 || a1.num_inputs() > 2 || a1.num_outputs() > 2 || a2.num_inputs() > 2 ||
      a2.num_outputs() > 2) {
    fail(ErrorKind::kCapacity, "additivity check is limited to product dim_B <= 9 and 2x2 wings");
  }
  const SteeringEstimate e1 = ris(a1, cfg), e2 = ris(a2, cfg);
  const Assemblage joint = flatten(tensor_assemblages(a1, a2));
  std::vector<NSExtension> seeds;
  const auto w1 = grid_winners(e1, a1.num_inputs(), cfg), w2 = grid_winners(e2, a2.num_inputs(), cfg);
  for (int i : w1)
    for (int j : w2) seeds.push_back(tensor_extension(e1.witnesses[i], e2.witnesses[j]));
  const SteeringEstimate ej = ris(joint, cfg, seeds);
  PropertyReport r = make_report("additivity", ej.value, e1.value + e2.value, cfg.eps_add,
                                 git_blob_digest(serialize(a1) + serialize(a2)));
  r.pass = std::abs(r.slack) <= cfg.eps_add;
  return r;
}

PropertyReport check_monogamy(const JointAssemblage &j, const SteerConfig &cfg) {
  if (j.dims_B().size() != 1) fail(ErrorKind::kArgument, "monogamy needs a single shared B");
  const SteeringEstimate ej = ris_product_inputs(j, cfg);
  const Assemblage m1 = marginalize(j, 1), m2 = marginalize(j, 2);
  const int n1 = j.num_inputs1(), n2 = j.num_inputs2();
  const std::vector<double> p1 = wing_marginal(ej.p_X, n1, n2, 1), p2 = wing_marginal(ej.p_X, n1, n2, 2);
  std::vector<NSExtension> seeds1, seeds2;
  // Seeds that split the joint value by the chain rule. Registers carrying
  // the other wing are only used when they are exactly feasible, since
  // projecting them is expensive.
  auto push = [](std::vector<NSExtension> &seeds, NSExtension e, const Assemblage &m, bool keep) {
    if (!keep || extension_residuals(e, m).max() <= 1e-8) seeds.push_back(std::move(e));
  };
  for (int w : product_grid_winners(ej, n1, n2, grid_resolution(cfg, n1), grid_resolution(cfg, n2)))
    for (bool keep : {false, true}) {
      // When E already screens B off, the averaged seeds have value zero.
      if (keep && screens_off(ej.witnesses[w])) continue;
      push(seeds1, wing_extension(j, ej.witnesses[w], 1, p2, keep), m1, keep);
      push(seeds2, wing_extension(j, ej.witnesses[w], 2, p1, keep), m2, keep);
    }
  const SteeringEstimate e1 = ris(m1, cfg, seeds1), e2 = ris(m2, cfg, seeds2);
  return make_report("monogamy", e1.value + e2.value, ej.value, cfg.eps_mono, git_blob_digest(serialize(flatten(j))));
}

SteerConfig property_suite_config(SteerConfig cfg) {
  cfg.grid = 11;
  cfg.nm_evals = 0;
  cfg.restarts = 2;
  return cfg;
}

std::vector<PropertyReport> run_property_suite(const SuiteOptions &opt, const SteerConfig &cfg) {
  std::vector<PropertyReport> out;
  auto named = [](PropertyReport r, const std::string &name) {
    r.name = name;
    return r;
  };
  const std::uint64_t seed = cfg.seed;
  const std::vector<double> alpha8{std::sqrt(0.8), std::sqrt(0.2)}, alpha95{std::sqrt(0.95), std::sqrt(0.05)};
  if (opt.monotonicity && opt.monotone_ops > 0) {
    const std::vector<std::pair<std::string, Assemblage>> inputs{
        {"bb84", bb84()},
        {"schmidt-0.8", schmidt_fourier_real(alpha8)},
        {"random", random_assemblage(2, 2, 2, seed + 1)},
        {"lhs", sample_lhs(2, 2, 2, seed + 2).first}};
    const int n = static_cast<int>(inputs.size());
    for (int i = 0; i < n; ++i) {
      const int count = opt.monotone_ops / n + (i < opt.monotone_ops % n ? 1 : 0);
      if (count == 0) continue;
      auto reports = check_monotone_restricted(inputs[i].second, count, cfg);
      for (size_t k = 0; k < reports.size(); ++k)
        out.push_back(named(reports[k], "monotonicity[" + inputs[i].first + "/" + std::to_string(k) + "]"));
    }
  }
  if (opt.convexity && opt.convex_pairs > 0) {
    const std::vector<Assemblage> base{bb84(),
                                       relabel_outputs(bb84(), {{1, 0}, {0, 1}}),
                                       schmidt_fourier_real(alpha8),
                                       schmidt_fourier_real(alpha95),
                                       random_assemblage(2, 2, 2, seed + 3),
                                       random_assemblage(2, 2, 2, seed + 4),
                                       sample_lhs(2, 2, 2, seed + 5).first,
                                       sample_lhs(2, 2, 2, seed + 6).first};
    const int n = static_cast<int>(base.size());
    std::vector<SteeringEstimate> est(n);
    SteerConfig inner = cfg;
    inner.threads = 1;
    parallel_for(n, cfg.threads, [&](int i) { est[i] = ris(base[i], inner); });
    std::vector<PropertyReport> reports(opt.convex_pairs);
    parallel_for(opt.convex_pairs, cfg.threads, [&](int k) {
      Rng rng = Rng::stream(seed, 7000 + k);
      const int i = rng.uniform_int(n), j = (i + 1 + rng.uniform_int(n - 1)) % n;
      const double lambda = rng.uniform();
      reports[k] = named(check_convexity(base[i], est[i], base[j], est[j], lambda, inner),
                         "convexity[" + std::to_string(k) + "]");
    });
    out.insert(out.end(), reports.begin(), reports.end());
  }
  if (opt.additivity) {
    const Assemblage l1 = sample_lhs(2, 2, 2, seed + 7).first, l2 = sample_lhs(2, 2, 2, seed + 8).first;
    out.push_back(named(check_additivity(bb84(), l1, cfg), "additivity[bb84 x lhs]"));
    out.push_back(named(check_additivity(l1, l2, cfg), "additivity[lhs x lhs]"));
    if (opt.bb84_squared) {
      PropertyReport r = named(check_additivity(bb84(), bb84(), cfg), "additivity[bb84 x bb84]");
      r.tolerance = 2.0 * cfg.eps_add;
      r.pass = std::abs(r.slack) <= r.tolerance;
      out.push_back(r);
    }
  }
  if (opt.monogamy && opt.monogamy_scenarios > 0) {
    std::vector<PropertyReport> reports(opt.monogamy_scenarios);
    SteerConfig inner = cfg;
    inner.threads = 1;
    parallel_for(opt.monogamy_scenarios, cfg.threads, [&](int k) {
      const JointAssemblage j = random_joint_assemblage(2, 2, 2, 2, 1 + k % 2, seed + 9000 + k);
      reports[k] = named(check_monogamy(j, inner), "monogamy[" + std::to_string(k) + "]");
    });
    out.insert(out.end(), reports.begin(), reports.end());
  }
  return out;
}

}  // namespace steerq
