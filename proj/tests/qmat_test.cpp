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

#include <gtest/gtest.h>

#include <cmath>

#include "steerq/error.hpp"
#include "steerq/random.hpp"

namespace steerq {
namespace {

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(v.size(), v.size());
  int i = 0;
  for (double d : v) {
    m(i, i) = d;
    ++i;
  }
  return m;
}

HermitianOp bell() {
  Vector phi = Vector::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  return HermitianOp::projector(phi);
}

TEST(HermitianOp, RejectsNonHermitianAndNonFinite) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1e-3;
  EXPECT_THROW(HermitianOp{m}, Error);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(HermitianOp{m}, Error);
  Matrix near = Matrix::Identity(2, 2);
  near(0, 1) = 1e-12;
  const HermitianOp h(near);
  EXPECT_EQ(linalg::max_abs(h.matrix() - h.matrix().adjoint()), 0.0);
}

TEST(RegisterLayout, RejectsDuplicateLabelsAndBadDims) {
  EXPECT_THROW(RegisterLayout({{"A", 2}, {"A", 2}}), Error);
  EXPECT_THROW(RegisterLayout({{"A", 0}}), Error);
}

TEST(Tensor, Examples) {
  EXPECT_LE(linalg::max_abs(tensor(HermitianOp::identity(2), HermitianOp::identity(2)).matrix() -
                            Matrix::Identity(4, 4)),
            0.0);
  EXPECT_LE(linalg::max_abs(tensor(HermitianOp::diagonal({1, 0}), HermitianOp::diagonal({0, 1})).matrix() -
                            diag({0, 1, 0, 0})),
            0.0);
  EXPECT_LE(linalg::max_abs(tensor(HermitianOp::diagonal({0.5, -0.5}), HermitianOp::identity(2)).matrix() -
                            diag({0.5, 0.5, -0.5, -0.5})),
            0.0);
}

TEST(Tensor, CapacityError) {
  try {
    tensor(HermitianOp::identity(64), HermitianOp::identity(128));
    FAIL() << "expected a capacity error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapacity);
  }
}

TEST(PartialTrace, Examples) {
  const RegisterLayout ab{{"A", 2}, {"B", 2}};
  EXPECT_LE(linalg::max_abs(partial_trace(bell(), ab, {"A"}).matrix() - Matrix::Identity(2, 2) / 2.0), 1e-15);
  const HermitianOp d = HermitianOp::diagonal({0.1, 0.2, 0.3, 0.4});
  EXPECT_LE(linalg::max_abs(partial_trace(d, ab, {"B"}).matrix() - diag({0.4, 0.6})), 1e-15);
  Rng rng(1);
  const HermitianOp rho = HermitianOp::hermitized(random_density(3, rng));
  const HermitianOp omega = HermitianOp::hermitized(0.3 * random_density(2, rng));
  const HermitianOp out = partial_trace(tensor(rho, omega), RegisterLayout{{"B", 3}, {"E", 2}}, {"B"});
  EXPECT_LE(linalg::max_abs(out.matrix() - 0.3 * rho.matrix()), 1e-12);
  EXPECT_THROW(partial_trace(d, ab, {"C"}), Error);
}

TEST(PartialTrace, KeepsRequestedOrderAndTrace) {
  Rng rng(2);
  const HermitianOp rho = HermitianOp::hermitized(random_density(12, rng));
  const RegisterLayout l{{"A", 2}, {"B", 3}, {"C", 2}};
  const HermitianOp ac = partial_trace(rho, l, {"A", "C"});
  EXPECT_NEAR(ac.trace(), 1.0, 1e-12);
  // Oracle: explicit index sums.
  Matrix expected = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int b = 0; b < 3; ++b) expected(a * 2 + c, a2 * 2 + c2) += rho(a * 6 + b * 2 + c, a2 * 6 + b * 2 + c2);
  EXPECT_LE(linalg::max_abs(ac.matrix() - expected), 1e-14);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(HermitianOp::diagonal({0.5, 0.5})), 1.0, 1e-12);
  EXPECT_NEAR(entropy(bell()), 0.0, 1e-12);
  EXPECT_NEAR(entropy(HermitianOp::diagonal({0.8, 0.2})), -0.8 * std::log2(0.8) - 0.2 * std::log2(0.2), 1e-12);
  EXPECT_THROW(entropy(HermitianOp::diagonal({1.1, -0.1})), Error);
}

TEST(Entropy, AdditiveOnProducts) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const HermitianOp a = HermitianOp::hermitized(random_density(2, rng));
    const HermitianOp b = HermitianOp::hermitized(random_density(3, rng));
    EXPECT_NEAR(entropy(tensor(a, b)), entropy(a) + entropy(b), 1e-9);
  }
}

TEST(Cmi, Examples) {
  Rng rng(4);
  const RegisterLayout klm{{"K", 2}, {"L", 2}, {"M", 2}};
  const HermitianOp product =
      tensor(tensor(HermitianOp::hermitized(random_density(2, rng)), HermitianOp::hermitized(random_density(2, rng))),
             HermitianOp::hermitized(random_density(2, rng)));
  EXPECT_NEAR(cmi(product, klm, {"K"}, {"L"}, {"M"}), 0.0, 1e-12);
  Matrix ghz_diag = Matrix::Zero(8, 8);
  ghz_diag(0, 0) = ghz_diag(7, 7) = 0.5;
  EXPECT_NEAR(cmi(HermitianOp(ghz_diag), klm, {"K"}, {"L"}, {"M"}), 0.0, 1e-12);
  EXPECT_NEAR(cmi(bell(), RegisterLayout{{"A", 2}, {"B", 2}}, {"A"}, {"B"}, {}), 2.0, 1e-12);
  EXPECT_THROW(cmi(product, klm, {"K"}, {"K"}, {"M", "L"}), Error);
  EXPECT_THROW(cmi(product, klm, {"K"}, {"L"}, {}), Error);
}

TEST(Cmi, BB84CqStateGivesOneBit) {
  // (1/2) sum_x |x><x| (x) (1/2) sum_a |a><a| (x) |psi_ax><psi_ax| with the
  // Z and X eigenbases, and a trivial E.
  const double s = 1.0 / std::sqrt(2.0);
  const Vector kets[2][2] = {{(Vector(2) << 1, 0).finished(), (Vector(2) << 0, 1).finished()},
                             {(Vector(2) << s, s).finished(), (Vector(2) << s, -s).finished()}};
  Matrix state = Matrix::Zero(8, 8);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) state.block((x * 2 + a) * 2, (x * 2 + a) * 2, 2, 2) = 0.25 * kets[x][a] * kets[x][a].adjoint();
  const HermitianOp with_e = tensor(HermitianOp(state), HermitianOp::identity(1));
  EXPECT_NEAR(cmi(with_e, RegisterLayout{{"X", 2}, {"A", 2}, {"B", 2}, {"E", 1}}, {"X", "A"}, {"B"}, {"E"}), 1.0,
              1e-12);
}

TEST(Cmi, StrongSubadditivityOnRandomStates) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const HermitianOp rho = HermitianOp::hermitized(random_density(8, rng, 1 + t % 8));
    EXPECT_GE(cmi(rho, RegisterLayout{{"K", 2}, {"L", 2}, {"M", 2}}, {"K"}, {"L"}, {"M"}), -1e-8);
  }
}

TEST(PsdProject, Examples) {
  Rng rng(6);
  const HermitianOp rho = HermitianOp::hermitized(random_density(3, rng));
  EXPECT_LE(linalg::max_abs(psd_project(rho).matrix() - rho.matrix()), 1e-12);
  EXPECT_LE(linalg::max_abs(psd_project(HermitianOp::diagonal({1, -1})).matrix() - diag({1, 0})), 1e-15);
  Matrix sx(2, 2);
  sx << 0, 1, 1, 0;
  EXPECT_LE(linalg::max_abs(psd_project(HermitianOp(sx)).matrix() - 0.5 * (Matrix::Identity(2, 2) + sx)), 1e-14);
  const Matrix g = Matrix::Random(4, 4);
  const HermitianOp once = psd_project(HermitianOp::hermitized(g + g.adjoint()));
  EXPECT_LE(linalg::max_abs(psd_project(once).matrix() - once.matrix()), 1e-10);
}

TEST(Linalg, PermuteSubsystemsMatchesKronOrder) {
  Rng rng(7);
  const Matrix a = random_density(2, rng), b = random_density(3, rng), c = random_density(2, rng);
  const Matrix abc = linalg::kron(linalg::kron(a, b), c);
  const Matrix cab = linalg::permute_subsystems(abc, {2, 3, 2}, {2, 0, 1});
  EXPECT_LE(linalg::max_abs(cab - linalg::kron(linalg::kron(c, a), b)), 1e-15);
}

TEST(Linalg, EighIsDeterministic) {
  Rng rng(8);
  const Matrix m = random_density(6, rng);
  const auto e1 = linalg::eigh(m), e2 = linalg::eigh(m);
  EXPECT_EQ((e1.values - e2.values).norm(), 0.0);
  EXPECT_EQ((e1.vectors - e2.vectors).norm(), 0.0);
  EXPECT_LE(linalg::max_abs(linalg::from_eigen(e1, e1.values) - m), 1e-14);
}

}  // namespace
}  // namespace steerq
