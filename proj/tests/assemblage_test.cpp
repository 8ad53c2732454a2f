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

#include <gtest/gtest.h>

#include <cmath>

#include "steerq/error.hpp"
#include "steerq/io.hpp"
#include "steerq/lhs.hpp"
#include "steerq/random.hpp"

namespace steerq {
namespace {

constexpr double kPi = 3.14159265358979323846;

HermitianOp ket_projector(std::initializer_list<Complex> v) {
  Vector k(v.size());
  int i = 0;
  for (Complex c : v) k(i++) = c;
  return HermitianOp::projector(k);
}

HermitianOp bell() { return ket_projector({1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0)}); }

std::vector<std::vector<HermitianOp>> zx_povms() {
  const double s = 1 / std::sqrt(2.0);
  return {{ket_projector({1, 0}), ket_projector({0, 1})}, {ket_projector({s, s}), ket_projector({s, -s})}};
}

double max_diff(const Assemblage &a, const Assemblage &b) {
  double d = 0.0;
  for (int i = 0; i < a.size(); ++i) d = std::max(d, a.ops()[i].max_abs_diff(b.ops()[i]));
  return d;
}

TEST(FromStateAndPovms, BellWithZAndX) {
  const Assemblage a = from_state_and_povms(bell(), RegisterLayout{{"A", 2}, {"B", 2}}, zx_povms());
  const double s = 1 / std::sqrt(2.0);
  EXPECT_LE(a.op(0, 0).max_abs_diff(0.5 * ket_projector({1, 0})), 1e-15);
  EXPECT_LE(a.op(1, 0).max_abs_diff(0.5 * ket_projector({0, 1})), 1e-15);
  EXPECT_LE(a.op(0, 1).max_abs_diff(0.5 * ket_projector({s, s})), 1e-15);
  EXPECT_LE(a.op(1, 1).max_abs_diff(0.5 * ket_projector({s, -s})), 1e-15);
}

TEST(FromStateAndPovms, ProductStateGivesScaledMarginal) {
  Rng rng(1);
  const HermitianOp ra = HermitianOp::hermitized(random_density(2, rng)), rb = HermitianOp::hermitized(random_density(3, rng));
  const auto povms = zx_povms();
  const Assemblage a = from_state_and_povms(tensor(ra, rb), RegisterLayout{{"A", 2}, {"B", 3}}, povms);
  for (int x = 0; x < 2; ++x)
    for (int o = 0; o < 2; ++o) {
      const double p = (povms[x][o].matrix() * ra.matrix()).trace().real();
      EXPECT_LE(a.op(o, x).max_abs_diff(p * rb), 1e-14);
    }
}

TEST(FromStateAndPovms, TrivialPovmOnBell) {
  const std::vector<std::vector<HermitianOp>> povm{{HermitianOp::identity(2) * 0.5, HermitianOp::identity(2) * 0.5}};
  const Assemblage a = from_state_and_povms(bell(), RegisterLayout{{"A", 2}, {"B", 2}}, povm);
  for (int o = 0; o < 2; ++o) EXPECT_LE(a.op(o, 0).max_abs_diff(HermitianOp::identity(2) * 0.25), 1e-15);
}

TEST(FromStateAndPovms, RejectsIncompletePovmAndBadDims) {
  const std::vector<std::vector<HermitianOp>> bad{{ket_projector({1, 0}), ket_projector({1, 0})}};
  EXPECT_THROW(from_state_and_povms(bell(), RegisterLayout{{"A", 2}, {"B", 2}}, bad), Error);
  EXPECT_THROW(from_state_and_povms(bell(), RegisterLayout{{"A", 2}, {"B", 3}}, zx_povms()), Error);
}

TEST(FromStateAndPovms, RandomDrawsValidate) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const int da = 2 + t % 2, db = 2 + (t / 2) % 2;
    const HermitianOp rho = HermitianOp::hermitized(random_density(da * db, rng));
    std::vector<std::vector<HermitianOp>> povms;
    for (int x = 0; x < 2; ++x) {
      const Matrix u = haar_unitary(da, rng);
      std::vector<HermitianOp> povm;
      for (int o = 0; o < da; ++o) povm.push_back(HermitianOp::projector(u.col(o)));
      povms.push_back(povm);
    }
    const Assemblage a = from_state_and_povms(rho, RegisterLayout{{"A", da}, {"B", db}}, povms);
    ASSERT_TRUE(validate(a).pass);
    const CqState s = embed_cq(a, std::vector<double>{0.3, 0.7});
    const HermitianOp xb = partial_trace(s.state, s.layout, {"X", "B"});
    EXPECT_LE(cmi(xb, RegisterLayout{{"X", 2}, {"B", db}}, {"X"}, {"B"}, {}), 1e-9);
  }
}

TEST(Validate, Examples) {
  const ValidationReport ok = validate(bb84());
  EXPECT_TRUE(ok.pass);
  EXPECT_LE(ok.max_psd_violation, 1e-12);
  EXPECT_LE(ok.max_normalization_residual, 1e-12);
  EXPECT_LE(ok.max_nosignaling_residual, 1e-12);

  std::vector<HermitianOp> ops = bb84().ops();
  ops[0] = ops[0] * 1.1;
  const ValidationReport scaled = validate(Assemblage(2, 2, 2, ops));
  EXPECT_FALSE(scaled.pass);
  EXPECT_NEAR(scaled.max_normalization_residual, 0.05, 1e-12);

  Matrix sx(2, 2);
  sx << 0, 0.05, 0.05, 0;
  ops = bb84().ops();
  ops[2] = HermitianOp(ops[2].matrix() + sx);
  ops[3] = HermitianOp(ops[3].matrix() + sx);
  const ValidationReport signaling = validate(Assemblage(2, 2, 2, ops));
  EXPECT_FALSE(signaling.pass);
  EXPECT_NEAR(signaling.max_nosignaling_residual, 0.1, 1e-12);
}

TEST(Validate, NamesNonHermitianOperators) {
  const Assemblage b = bb84();
  std::vector<Matrix> ops;
  for (const auto &op : b.ops()) ops.push_back(op.matrix());
  ops[1](0, 1) = Complex(0.0, 0.2);
  const ValidationReport r = validate_matrices(2, 2, 2, ops);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.max_hermiticity_violation, 0.2, 1e-15);
  ASSERT_FALSE(r.violations.empty());
}

TEST(EmbedCq, BB84) {
  const CqState s = embed_cq(bb84(), std::vector<double>{0.5, 0.5});
  EXPECT_EQ(s.state.dim(), 8);
  EXPECT_NEAR(s.state.trace(), 1.0, 1e-15);
  // Oracle: explicit block-diagonal assembly.
  Matrix expected = Matrix::Zero(8, 8);
  for (int x = 0; x < 2; ++x)
    for (int o = 0; o < 2; ++o) expected.block((x * 2 + o) * 2, (x * 2 + o) * 2, 2, 2) = 0.5 * bb84().op(o, x).matrix();
  EXPECT_LE(linalg::max_abs(s.state.matrix() - expected), 1e-15);
  const HermitianOp xb = partial_trace(s.state, s.layout, {"X", "B"});
  EXPECT_NEAR(cmi(xb, RegisterLayout{{"X", 2}, {"B", 2}}, {"X"}, {"B"}, {}), 0.0, 1e-12);
}

TEST(EmbedCq, DegenerateDistributionAndErrors) {
  const CqState s = embed_cq(bb84(), std::vector<double>{1.0, 0.0});
  EXPECT_LE(linalg::max_abs(s.state.matrix().bottomRightCorner(4, 4)), 0.0);
  EXPECT_THROW(embed_cq(bb84(), std::vector<double>{0.6, 0.6}), Error);
  EXPECT_THROW(embed_cq(bb84(), std::vector<double>{1.0}), Error);
  EXPECT_THROW(embed_cq(bb84(), std::vector<double>{1.5, -0.5}), Error);
}

TEST(Bb84, States) {
  const Assemblage a = bb84();
  EXPECT_LE(a.op(0, 0).max_abs_diff(HermitianOp::diagonal({0.5, 0.0})), 0.0);
  for (int x = 0; x < 2; ++x)
    for (int o = 0; o < 2; ++o) EXPECT_NEAR(a.prob(o, x), 0.5, 1e-15);
  EXPECT_TRUE(validate(a).pass);
}

TEST(SchmidtFourier, Examples) {
  const double s = 1 / std::sqrt(2.0);
  EXPECT_LE(max_diff(schmidt_fourier_real(std::vector<double>{s, s}), bb84()), 1e-12);
  const Assemblage a = schmidt_fourier_real(std::vector<double>{std::sqrt(0.8), std::sqrt(0.2)});
  EXPECT_LE(a.op(0, 0).max_abs_diff(HermitianOp::diagonal({0.8, 0.0})), 1e-15);
  EXPECT_LE(a.op(1, 0).max_abs_diff(HermitianOp::diagonal({0.0, 0.2})), 1e-15);
  const double t = 1 / std::sqrt(3.0);
  const Assemblage u = schmidt_fourier_real(std::vector<double>{t, t, t});
  EXPECT_LE(linalg::max_abs(u.marginal(1) - Matrix::Identity(3, 3) / 3.0), 1e-15);
  EXPECT_TRUE(validate(u).pass);
}

TEST(SchmidtFourier, FourierWingMatchesDefinition) {
  const std::vector<Complex> alpha{std::sqrt(0.5), Complex(0.0, std::sqrt(0.3)), std::sqrt(0.2)};
  const Assemblage a = schmidt_fourier(alpha);
  const Vector psi = Eigen::Map<const Vector>(alpha.data(), 3);
  for (int j = 0; j < 3; ++j) {
    Vector shifted(3);
    for (int k = 0; k < 3; ++k) shifted(k) = std::conj(std::polar(1.0, 2 * kPi * j * k / 3.0)) * psi(k);
    EXPECT_LE(linalg::max_abs(a.op(j, 1).matrix() - shifted * shifted.adjoint() / 3.0), 1e-14);
  }
}

TEST(SchmidtFourier, RejectsZeroCoefficientAndBadNorm) {
  EXPECT_THROW(schmidt_fourier_real(std::vector<double>{1.0, 0.0}), Error);
  EXPECT_THROW(schmidt_fourier_real(std::vector<double>{0.9, 0.9}), Error);
}

TEST(Joint, TensorAndMarginals) {
  const Assemblage b = bb84();
  const Assemblage l = sample_lhs(2, 2, 2, 3).first;
  const JointAssemblage j = tensor_assemblages(b, l);
  EXPECT_EQ(j.dim_B(), 4);
  EXPECT_EQ(j.ops().size(), 16u);
  EXPECT_LE(bilateral_nosignaling_residual(j), 1e-15);
  EXPECT_LE(max_diff(marginalize(j, 1), b), 1e-12);
  EXPECT_LE(max_diff(marginalize(j, 2), l), 1e-12);
  for (int x1 = 0; x1 < 2; ++x1)
    for (int x2 = 0; x2 < 2; ++x2)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) EXPECT_NEAR(j.op(a1, a2, x1, x2).trace(), b.prob(a1, x1) * l.prob(a2, x2), 1e-14);
  EXPECT_TRUE(validate(flatten(j)).pass);
}

TEST(Joint, MonogamyShapeMarginals) {
  // GHZ measured with Z/X on A and on C: the wing marginals are the
  // assemblages of the reduced AB and CB states.
  Vector ghz = Vector::Zero(8);
  ghz(0) = ghz(7) = 1 / std::sqrt(2.0);
  const HermitianOp rho = HermitianOp::projector(ghz);
  const JointAssemblage j = joint_from_state(rho, 2, 2, 2, zx_povms(), zx_povms());
  EXPECT_EQ(j.dims_B().size(), 1u);
  const HermitianOp rho_ab = partial_trace(rho, RegisterLayout{{"A", 2}, {"C", 2}, {"B", 2}}, {"A", "B"});
  EXPECT_LE(max_diff(marginalize(j, 1), from_state_and_povms(rho_ab, RegisterLayout{{"A", 2}, {"B", 2}}, zx_povms())),
            1e-14);
}

TEST(Joint, SignalingJointIsRejected) {
  std::vector<HermitianOp> ops = tensor_assemblages(bb84(), bb84()).ops();
  Matrix shift = Matrix::Zero(4, 4);
  shift(0, 0) = 0.05;
  shift(1, 1) = -0.05;
  ops[0] = HermitianOp(ops[0].matrix() + shift);
  ops[1] = HermitianOp(ops[1].matrix() - shift);
  const JointAssemblage j({2, 2}, 2, 2, 2, 2, ops);
  try {
    marginalize(j, 1);
    FAIL() << "expected an inconsistency error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInconsistency);
  }
}

TEST(Joint, RandomJointIsBilateralNoSignaling) {
  for (int s = 0; s < 5; ++s) {
    const JointAssemblage j = random_joint_assemblage(2, 2, 2, 2, 1 + s % 2, s);
    EXPECT_LE(bilateral_nosignaling_residual(j), 1e-12);
    EXPECT_TRUE(validate(flatten(j)).pass);
  }
}

TEST(Assemblage, JsonRoundTripIsBitExact) {
  const Assemblage a = random_assemblage(3, 2, 3, 11);
  const Assemblage b = assemblage_from_json(parse_json(to_json(a).dump(), "round trip"));
  for (int i = 0; i < a.size(); ++i) EXPECT_EQ((a.ops()[i].matrix() - b.ops()[i].matrix()).norm(), 0.0);
}

TEST(Assemblage, MixAndRelabel) {
  const Assemblage r = relabel_outputs(bb84(), {{1, 0}, {0, 1}});
  EXPECT_LE(r.op(0, 0).max_abs_diff(bb84().op(1, 0)), 0.0);
  const Assemblage m = mix(bb84(), r, 0.5);
  EXPECT_LE(m.op(0, 0).max_abs_diff(HermitianOp::identity(2) * 0.25), 1e-15);
  EXPECT_THROW(mix(bb84(), random_assemblage(3, 2, 2, 1), 0.5), Error);
}

}  // namespace
}  // namespace steerq
