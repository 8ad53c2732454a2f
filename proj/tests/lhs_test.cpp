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

#include <gtest/gtest.h>

#include <cmath>

#include "steerq/error.hpp"
#include "steerq/random.hpp"

namespace steerq {
namespace {

// Independent soundness check: rebuilds each conditional state by summing the
// hidden states whose response matches, without going through reconstruct().
// Positivity and total mass are held to 1e-9 separately.
double independent_residual(const LhsModel &m, const Assemblage &a) {
  double worst = 0.0, total = 0.0;
  for (const auto &s : m.sigma) {
    EXPECT_GE(linalg::eigh(s.matrix()).values(0), -1e-9);
    total += s.trace();
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  for (int x = 0; x < a.num_inputs(); ++x)
    for (int o = 0; o < a.num_outputs(); ++o) {
      Matrix sum = Matrix::Zero(a.dim_B(), a.dim_B());
      for (std::size_t l = 0; l < m.strategies.size(); ++l)
        if (m.strategies[l].response[x] == o) sum += m.sigma[l].matrix();
      worst = std::max(worst, linalg::max_abs(sum - a.op(o, x).matrix()));
    }
  return worst;
}

TEST(EnumerateStrategies, Examples) {
  const auto s = enumerate_strategies(2, 2);
  ASSERT_EQ(s.size(), 4u);
  const std::vector<std::vector<int>> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s[i].response, expected[i]);
  EXPECT_EQ(enumerate_strategies(1, 5).size(), 5u);
  EXPECT_EQ(enumerate_strategies(3, 2).size(), 8u);
  EXPECT_EQ(enumerate_strategies(3, 3).size(), 27u);
}

TEST(EnumerateStrategies, CapIsEnforced) {
  try {
    enumerate_strategies(13, 2);
    FAIL() << "expected a capacity error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapacity);
  }
  EXPECT_EQ(enumerate_strategies(12, 2).size(), 4096u);
  EXPECT_THROW(enumerate_strategies(3, 3, 26), Error);
}

TEST(LhsTest, SingleInputIsFeasible) {
  Rng rng(3);
  std::vector<HermitianOp> ops;
  for (int o = 0; o < 3; ++o) ops.push_back(HermitianOp::hermitized(random_density(2, rng) / 3.0));
  const Assemblage a(2, 1, 3, ops);
  const LhsResult r = lhs_test(a);
  ASSERT_EQ(r.status, LhsStatus::kFeasible);
  EXPECT_LE(independent_residual(*r.model, a), 1e-8);
  for (int o = 0; o < 3; ++o) EXPECT_LE(r.model->sigma[o].max_abs_diff(ops[o]), 1e-8);
}

TEST(LhsTest, ProductStateIsFeasible) {
  Rng rng(4);
  const Matrix rb = random_density(2, rng);
  std::vector<HermitianOp> ops;
  const double p[2][2] = {{0.3, 0.7}, {0.9, 0.1}};
  for (int x = 0; x < 2; ++x)
    for (int o = 0; o < 2; ++o) ops.push_back(HermitianOp::hermitized(p[x][o] * rb));
  const Assemblage a(2, 2, 2, ops);
  const LhsResult r = lhs_test(a);
  ASSERT_EQ(r.status, LhsStatus::kFeasible);
  EXPECT_LE(independent_residual(*r.model, a), 1e-8);
}

// With four strategies (a0, a1), sigma_(a0,a1) sits below both rho^{a0,0} and
// rho^{a1,1}. The BB84 conditional states are rank one with distinct supports,
// so every sigma vanishes and nothing can reconstruct a unit-trace assemblage.
TEST(LhsTest, Bb84IsInfeasible) {
  const LhsResult r = lhs_test(bb84());
  EXPECT_EQ(r.status, LhsStatus::kInfeasible);
  EXPECT_GT(r.residual, 1e-3);
  EXPECT_FALSE(r.model.has_value());
}

TEST(LhsTest, SchmidtFourierIsInfeasible) {
  EXPECT_EQ(lhs_test(schmidt_fourier_real(std::vector<double>{std::sqrt(0.8), std::sqrt(0.2)})).status,
            LhsStatus::kInfeasible);
  const double t = 1 / std::sqrt(3.0);
  EXPECT_EQ(lhs_test(schmidt_fourier_real(std::vector<double>{t, t, t})).status, LhsStatus::kInfeasible);
}

TEST(LhsTest, RejectsBadArguments) {
  EXPECT_THROW(lhs_test(bb84(), 0.0), Error);
  EXPECT_THROW(lhs_test(bb84(), 1e-8, 0), Error);
}

TEST(SampleLhs, PointMassAndTwoTermMixture) {
  Rng rng(5);
  const HermitianOp s = HermitianOp::hermitized(random_density(2, rng));
  const auto strategies = enumerate_strategies(2, 2);
  LhsModel point{{strategies[1]}, {s}};
  const Assemblage a = reconstruct(point, 2, 2, 2);
  EXPECT_LE(a.op(0, 0).max_abs_diff(s), 0.0);
  EXPECT_LE(a.op(1, 1).max_abs_diff(s), 0.0);
  EXPECT_LE(a.op(1, 0).max_abs_diff(HermitianOp::zero(2)), 0.0);

  const HermitianOp t = HermitianOp::hermitized(random_density(2, rng));
  LhsModel two{{strategies[0], strategies[3]}, {s * 0.4, t * 0.6}};
  const Assemblage b = reconstruct(two, 2, 2, 2);
  EXPECT_LE(b.op(0, 1).max_abs_diff(s * 0.4), 1e-15);
  EXPECT_LE(b.op(1, 0).max_abs_diff(t * 0.6), 1e-15);
  EXPECT_LE(reconstruction_residual(two, b), 1e-15);
}

TEST(SampleLhs, SeedFixedDrawIsFeasible) {
  const auto [a, model] = sample_lhs(2, 2, 2, 7);
  EXPECT_TRUE(validate(a).pass);
  EXPECT_LE(model_invariant_residual(model), 1e-12);
  const LhsResult r = lhs_test(a, 1e-10);
  ASSERT_EQ(r.status, LhsStatus::kFeasible);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(independent_residual(*r.model, a), 1e-10);
}

TEST(SampleLhs, CompletenessOnCorpus) {
  int feasible = 0;
  for (const auto &[a, model] : sample_lhs_corpus(200, 100)) {
    const LhsResult r = lhs_test(a, 1e-8);
    if (r.status == LhsStatus::kFeasible) {
      ++feasible;
      EXPECT_LE(independent_residual(*r.model, a), 1e-8);
    }
  }
  EXPECT_EQ(feasible, 200);
}

}  // namespace
}  // namespace steerq
