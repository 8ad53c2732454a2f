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


#include "steerq/steer.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "steerq/error.hpp"
#include "steerq/lhs.hpp"
#include "steerq/random.hpp"

namespace steerq {
namespace {

double h2(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

SteerConfig fast_config() {
  SteerConfig cfg;
  cfg.grid = 11;
  cfg.nm_evals = 0;
  cfg.restarts = 2;
  return cfg;
}

HermitianOp ket(std::initializer_list<double> v) {
  Vector k(v.size());
  int i = 0;
  for (double c : v) k(i++) = c;
  return HermitianOp::projector(k.normalized());
}

std::vector<std::vector<HermitianOp>> zx_povms() {
  return {{ket({1, 0}), ket({0, 1})}, {ket({1, 1}), ket({1, -1})}};
}

// Oracle: builds rho_{X A B E} block by block and evaluates the generic cmi.
double explicit_cmi(const NSExtension &e, std::span<const double> p) {
  const RegisterLayout lay{{"X", e.num_inputs}, {"A", e.num_outputs}, {"B", e.dim_B}, {"E", e.dim_E}};
  Matrix rho = Matrix::Zero(lay.total_dim(), lay.total_dim());
  for (int x = 0; x < e.num_inputs; ++x)
    for (int o = 0; o < e.num_outputs; ++o) {
      const int at = (x * e.num_outputs + o) * e.dim();
      rho.block(at, at, e.dim(), e.dim()) = p[x] * e.op(o, x);
    }
  return cmi(HermitianOp::hermitized(rho), lay, {"X", "A"}, {"B"}, {"E"});
}

TEST(CmiOfExtension, Examples) {
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(cmi_of_extension(bb84(), half, product_extension(bb84(), Matrix::Identity(2, 2) / 2.0)), 1.0, 1e-12);
  const auto [l, model] = sample_lhs(2, 2, 2, 41);
  EXPECT_LE(cmi_of_extension(l, half, classical_extension(l, model)), 1e-9);
  const Assemblage s = schmidt_fourier_real(std::vector<double>{std::sqrt(0.8), std::sqrt(0.2)});
  for (double p : {0.1, 0.5, 0.9}) {
    const std::vector<double> px{p, 1 - p};
    EXPECT_NEAR(cmi_of_extension(s, px, product_extension(s, Matrix::Identity(1, 1))), 0.721928, 1e-6);
  }
}

TEST(CmiOfExtension, MatchesExplicitState) {
  Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const Assemblage a = random_assemblage(2, 2, 2 + t % 2, 700 + t);
    const ExtensionConstraints c = build_constraints(a, 2);
    NSExtension e = product_extension(a, random_density(2, rng));
    for (auto &m : e.ops) m += 1e-3 * (random_density(4, rng) - random_density(4, rng));
    e = project(c, e.ops);
    const auto p = random_simplex(a.num_inputs(), rng);
    EXPECT_NEAR(cmi_of_extension(a, p, e), explicit_cmi(e, p), 1e-9);
  }
}

TEST(CmiOfExtension, RejectsInvalidExtension) {
  NSExtension e = product_extension(bb84(), Matrix::Identity(2, 2) / 2.0);
  e.ops[0](0, 0) += 0.01;
  EXPECT_THROW(cmi_of_extension(bb84(), std::vector<double>{0.5, 0.5}, e), Error);
}

TEST(StrategyCmi, GradientMatchesFiniteDifferences) {
  Rng rng(43);
  const Assemblage a = random_assemblage(2, 2, 2, 44);
  std::vector<Matrix> ops;
  for (int i = 0; i < a.size(); ++i) ops.push_back(random_density(4, rng) * (0.2 + 0.05 * i));
  BranchWeights bw;
  bw.w = (Eigen::MatrixXd(2, 1) << 0.3, 0.7).finished();
  std::vector<Matrix> grad;
  strategy_cmi(ops, 2, 2, 2, 2, bw, &grad);
  const double h = 1e-6;
  for (int t = 0; t < 5; ++t) {
    const int i = t % a.size();
    Matrix dir = random_density(4, rng) - random_density(4, rng);
    auto plus = ops, minus = ops;
    plus[i] += h * dir;
    minus[i] -= h * dir;
    const double fd = (strategy_cmi(plus, 2, 2, 2, 2, bw) - strategy_cmi(minus, 2, 2, 2, 2, bw)) / (2 * h);
    const double analytic = (grad[i].adjoint() * dir).trace().real();
    EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(SimplexGrid, CountsAndOrder) {
  const auto g = simplex_grid(2, 3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[1][0], 0.5);
  EXPECT_EQ(simplex_grid(3, 21).size(), 231u);  // C(22, 2)
}

TEST(RisInner, TrivialEnvironmentIsEmbeddingCmi) {
  const Assemblage a = random_assemblage(2, 2, 2, 45);
  const std::vector<double> p{0.4, 0.6};
  const CqState s = embed_cq(a, p);
  const double direct = cmi(s.state, s.layout, {"X", "A"}, {"B"}, {});
  EXPECT_NEAR(ris_inner(a, p, 1, fast_config()).value, direct, 1e-9);
}

TEST(RisInner, Bb84IsFlatAtOne) {
  const SteeringEstimate e = ris_inner(bb84(), std::vector<double>{0.5, 0.5}, 2, fast_config());
  EXPECT_NEAR(e.value, 1.0, 2e-3);
  EXPECT_TRUE(e.exact);
}

TEST(RisInner, LhsReachesZero) {
  const auto [a, model] = sample_lhs(2, 2, 2, 46);
  EXPECT_LE(ris_inner(a, std::vector<double>{0.5, 0.5}, 4, fast_config()).value, 5e-3);
}

TEST(RisInner, NonIncreasingInDimE) {
  const Assemblage a = schmidt_fourier_real(std::vector<double>{std::sqrt(0.8), std::sqrt(0.2)});
  const std::vector<double> p{0.3, 0.7};
  double prev = ris_inner(a, p, 1, fast_config()).value;
  for (int de = 2; de <= 4; ++de) {
    const double v = ris_inner(a, p, de, fast_config()).value;
    EXPECT_LE(v, prev + 2e-3);
    prev = v;
  }
}

TEST(Ris, PaperExamples) {
  EXPECT_NEAR(ris(bb84(), fast_config()).value, 1.0, 2e-3);
  const Assemblage s = schmidt_fourier_real(std::vector<double>{std::sqrt(0.8), std::sqrt(0.2)});
  EXPECT_NEAR(ris(s, fast_config()).value, h2(0.8), 5e-3);
  const auto [l, model] = sample_lhs(2, 2, 2, 47);
  EXPECT_LE(ris(l, fast_config()).value, 5e-3);
}

TEST(Ris, BoundsOnRandomAssemblages) {
  for (int t = 0; t < 4; ++t) {
    const Assemblage a = random_assemblage(2, 2, 2, 800 + t);
    const SteeringEstimate e = ris(a, fast_config());
    EXPECT_GE(e.value, -1e-8);
    EXPECT_LE(e.value, 1.0 + 1e-8);
    EXPECT_EQ(e.quantity, "ris");
  }
}

TEST(Ris, DeterministicForFixedSeed) {
  const Assemblage a = random_assemblage(2, 2, 2, 48);
  EXPECT_EQ(ris(a, fast_config()).value, ris(a, fast_config()).value);
}

TEST(IsLower, IdentityLibraryReducesToRis) {
  const Assemblage a = random_assemblage(2, 2, 2, 49);
  const std::vector<Strategy> lib{{"identity", identity_instrument(2), std::nullopt}};
  const SteeringEstimate is = is_lower(a, lib, fast_config());
  const SteeringEstimate r = ris(a, fast_config());
  EXPECT_NEAR(is.value, r.value, 1e-2);
}

TEST(IsLower, Bb84AndMaximallyEntangledHitOneBit) {
  const double s = 1 / std::sqrt(2.0);
  for (const Assemblage &a : {bb84(), schmidt_fourier_real(std::vector<double>{s, s})}) {
    const SteeringEstimate e = is_lower(a, default_strategy_library(a, 1), fast_config());
    EXPECT_NEAR(e.value, 1.0, 2e-3);
  }
}

TEST(IsLower, EmptyLibraryIsArgumentError) { EXPECT_THROW(is_lower(bb84(), {}, fast_config()), Error); }

TEST(SimulationRate, Examples) {
  const std::vector<double> half{0.5, 0.5};
  // Phi_AB (x) |0>_E with BB84 measurements.
  Vector phi = Vector::Zero(8);
  phi(0) = phi(6) = 1 / std::sqrt(2.0);
  const RegisterLayout abe{{"A", 2}, {"B", 2}, {"E", 2}};
  EXPECT_NEAR(simulation_rate(HermitianOp::projector(phi), abe, zx_povms(), half), 1.0, 1e-9);

  Vector prod = Vector::Zero(8);
  prod(0) = 1.0;
  EXPECT_NEAR(simulation_rate(HermitianOp::projector(prod), abe, zx_povms(), half), 0.0, 1e-12);

  // E purifies a maximally mixed A, B trivial.
  const RegisterLayout a1e{{"A", 2}, {"B", 1}, {"E", 2}};
  Vector pur = Vector::Zero(4);
  pur(0) = pur(3) = 1 / std::sqrt(2.0);
  EXPECT_NEAR(simulation_rate(HermitianOp::projector(pur), a1e, zx_povms(), half), 0.0, 1e-12);

  const HermitianOp mixed = HermitianOp::identity(8) * 0.125;
  EXPECT_THROW(simulation_rate(mixed, abe, zx_povms(), half), Error);
}

TEST(Properties, MonotoneExamples) {
  const SteerConfig cfg = fast_config();
  const SteeringEstimate in = ris(bb84(), cfg);
  std::vector<int> fwd, coarse;
  for (int xf = 0; xf < 2; ++xf)
    for (int x = 0; x < 2; ++x)
      for (int o = 0; o < 2; ++o) {
        fwd.push_back(o);
        coarse.push_back(0);
      }
  const RestrictedLoccOp identity{ClassicalChannel::identity(2), ClassicalChannel::deterministic(2, fwd),
                                  identity_instrument(2)};
  const PropertyReport id = check_monotone_op(bb84(), in, identity, cfg, "identity");
  EXPECT_TRUE(id.pass);
  EXPECT_NEAR(id.slack, 0.0, 1e-2);

  const RestrictedLoccOp cg{ClassicalChannel::identity(2), ClassicalChannel::deterministic(2, coarse),
                            identity_instrument(2)};
  const PropertyReport c = check_monotone_op(bb84(), in, cg, cfg, "coarse");
  EXPECT_TRUE(c.pass);
  EXPECT_LE(c.left, 5e-3);

  RestrictedLoccOp u = identity;
  u.instrument = unitary_instrument(qubit_rotation(0.4, 1.1));
  const PropertyReport r = check_monotone_op(bb84(), in, u, cfg, "unitary");
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.left, in.value, 1e-2);
}

TEST(Properties, ConvexityExamples) {
  const SteerConfig cfg = fast_config();
  const Assemblage b = bb84();
  const Assemblage r = relabel_outputs(b, {{1, 0}, {0, 1}});
  for (double lambda : {0.0, 1.0}) {
    const PropertyReport p = check_convexity(b, r, lambda, cfg);
    EXPECT_TRUE(p.pass);
    EXPECT_NEAR(p.slack, 0.0, 1e-2);
  }
  const PropertyReport half = check_convexity(b, r, 0.5, cfg);
  EXPECT_TRUE(half.pass);
  EXPECT_LE(half.left, 1.0 + cfg.eps_mono);
  const PropertyReport lhs = check_convexity(sample_lhs(2, 2, 2, 50).first, sample_lhs(2, 2, 2, 51).first, 0.3, cfg);
  EXPECT_TRUE(lhs.pass);
  EXPECT_LE(lhs.left, 5e-3);
  EXPECT_THROW(check_convexity(b, random_assemblage(3, 2, 2, 1), 0.5, cfg), Error);
}

TEST(Properties, AdditivityLhsTimesLhs) {
  const PropertyReport p =
      check_additivity(sample_lhs(2, 2, 2, 52).first, sample_lhs(2, 2, 2, 53).first, fast_config());
  EXPECT_TRUE(p.pass);
  EXPECT_LE(p.left, 1e-2);
}

TEST(Properties, MonogamyTrivialWingAndGhz) {
  const SteerConfig cfg = fast_config();
  // Bell state on A B with a one-dimensional C measured trivially.
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1 / std::sqrt(2.0);
  const std::vector<std::vector<HermitianOp>> trivial{{HermitianOp::identity(1)}};
  const JointAssemblage j = joint_from_state(HermitianOp::projector(bell), 2, 1, 2, zx_povms(), trivial);
  const PropertyReport p = check_monogamy(j, cfg);
  EXPECT_TRUE(p.pass);
  EXPECT_NEAR(p.left, p.right, 1e-2);
  EXPECT_NEAR(p.right, 1.0, 1e-2);

  Vector ghz = Vector::Zero(8);
  ghz(0) = ghz(7) = 1 / std::sqrt(2.0);
  EXPECT_TRUE(check_monogamy(joint_from_state(HermitianOp::projector(ghz), 2, 2, 2, zx_povms(), zx_povms()), cfg).pass);
}

TEST(Properties, ReportArithmetic) {
  const PropertyReport r = make_report("x", 1.0, 0.995, 1e-2, "d");
  EXPECT_DOUBLE_EQ(r.slack, 0.995 - 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(make_report("y", 1.0, 0.98, 1e-2, "d").pass);
}

}  // namespace
}  // namespace steerq
