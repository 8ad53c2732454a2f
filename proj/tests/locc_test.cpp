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

#include <gtest/gtest.h>

#include <cmath>

#include "steerq/error.hpp"
#include "steerq/lhs.hpp"

namespace steerq {
namespace {

// Output channel that forwards a (rows indexed a + |A|(x + |X|(x_f + |X_f| z))).
ClassicalChannel forward_outputs(int na, int nx, int nxf, int nz) {
  std::vector<int> map;
  for (int z = 0; z < nz; ++z)
    for (int xf = 0; xf < nxf; ++xf)
      for (int x = 0; x < nx; ++x)
        for (int o = 0; o < na; ++o) map.push_back(o);
  return ClassicalChannel::deterministic(na, map);
}

RestrictedLoccOp identity_op(const Assemblage &a) {
  return {ClassicalChannel::identity(a.num_inputs()), forward_outputs(a.num_outputs(), a.num_inputs(), a.num_inputs(), 1),
          identity_instrument(a.dim_B())};
}

TEST(Instrument, CompletenessIsChecked) {
  EXPECT_THROW(Instrument(2, {{Matrix::Identity(2, 2) * 0.9}}), Error);
  const Instrument z = basis_measurement(Matrix::Identity(2, 2));
  EXPECT_EQ(z.num_branches(), 2);
  EXPECT_LE(z.completeness_residual(), 1e-15);
}

TEST(ClassicalChannel, RowsMustBeDistributions) {
  EXPECT_THROW(ClassicalChannel((Eigen::MatrixXd(1, 2) << 0.5, 0.6).finished()), Error);
  EXPECT_THROW(ClassicalChannel((Eigen::MatrixXd(1, 2) << 1.1, -0.1).finished()), Error);
  const ClassicalChannel c = ClassicalChannel::constant(3, {0.2, 0.8});
  EXPECT_DOUBLE_EQ(c(1, 2), 0.8);
}

TEST(Apply1wLocc, IdentityIsEmbedding) {
  const Assemblage a = random_assemblage(2, 3, 2, 21);
  const CqState s = apply_1wlocc(a, identity_instrument(2), ClassicalChannel::constant(1, {1 / 3.0, 1 / 3.0, 1 / 3.0}));
  const CqState e = embed_cq(a, std::vector<double>{1 / 3.0, 1 / 3.0, 1 / 3.0});
  EXPECT_LE(s.state.max_abs_diff(e.state), 1e-15);
  EXPECT_NEAR(s.state.trace(), 1.0, 1e-12);
}

TEST(Apply1wLocc, TraceAndReplaceDecouples) {
  const Assemblage a = bb84();
  const Matrix sigma = (Matrix(2, 2) << 0.7, 0.1, 0.1, 0.3).finished();
  const CqState s = apply_1wlocc(a, trace_and_prepare(2, sigma), ClassicalChannel::constant(1, {0.5, 0.5}));
  EXPECT_LE(cmi(s.state, s.layout, {"X", "A"}, {"B"}, {"Y"}), 1e-12);
}

TEST(Apply1wLocc, Bb84ZMeasurementBranches) {
  const Assemblage a = bb84();
  const Instrument z = basis_measurement(Matrix::Identity(2, 2));
  const CqState s = apply_1wlocc(a, z, ClassicalChannel::constant(2, {0.5, 0.5}));
  // Oracle: branch y leaves sum_{a,x} p(x) <y|rho^{a,x}|y> = 1/2 of the mass.
  const HermitianOp y = partial_trace(s.state, s.layout, {"Y"});
  EXPECT_NEAR(y.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(y.matrix()(1, 1).real(), 0.5, 1e-15);
  EXPECT_LE(linalg::max_abs(y.matrix() - Matrix::Identity(2, 2) / 2.0), 1e-15);
  // B' carries a copy of Y, so the post-measurement state is classical on B'.
  const HermitianOp by = partial_trace(s.state, s.layout, {"B", "Y"});
  EXPECT_NEAR(by.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(by.matrix()(3, 3).real(), 0.5, 1e-15);
}

TEST(Apply1wLocc, DimensionMismatch) {
  EXPECT_THROW(apply_1wlocc(bb84(), identity_instrument(3), ClassicalChannel::constant(1, {0.5, 0.5})), Error);
  EXPECT_THROW(apply_1wlocc(bb84(), identity_instrument(2), ClassicalChannel::constant(1, {1.0})), Error);
}

TEST(GeneralEnsemble, IdentityComponents) {
  const Assemblage a = random_assemblage(2, 2, 2, 22);
  const GeneralLoccOp op{ClassicalChannel::identity(2), forward_outputs(2, 2, 2, 1), identity_instrument(2), 2};
  const LoccEnsemble e = apply_general_1wlocc_ensemble(a, op);
  ASSERT_EQ(e.branches.size(), 1u);
  EXPECT_NEAR(e.branches[0].probability, 1.0, 1e-15);
  for (int i = 0; i < a.size(); ++i) EXPECT_LE(e.branches[0].assemblage.ops()[i].max_abs_diff(a.ops()[i]), 1e-15);
}

TEST(GeneralEnsemble, RelabelingPermutes) {
  const Assemblage a = random_assemblage(2, 2, 2, 23);
  std::vector<int> amap;
  for (int xf = 0; xf < 2; ++xf)
    for (int x = 0; x < 2; ++x)
      for (int o = 0; o < 2; ++o) amap.push_back(1 - o);
  const GeneralLoccOp op{ClassicalChannel::deterministic(2, {1, 0}), ClassicalChannel::deterministic(2, amap),
                         identity_instrument(2), 2};
  const Assemblage out = apply_general_1wlocc_ensemble(a, op).branches[0].assemblage;
  for (int x = 0; x < 2; ++x)
    for (int o = 0; o < 2; ++o) EXPECT_LE(out.op(o, x).max_abs_diff(a.op(1 - o, 1 - x)), 1e-15);
}

TEST(GeneralEnsemble, CoarseGrainingBb84IsLhs) {
  const GeneralLoccOp op{ClassicalChannel::identity(2), ClassicalChannel::constant(8, {1.0}), identity_instrument(2), 2};
  const Assemblage out = apply_general_1wlocc_ensemble(bb84(), op).branches[0].assemblage;
  for (int x = 0; x < 2; ++x) EXPECT_LE(out.op(0, x).max_abs_diff(HermitianOp::identity(2) * 0.5), 1e-15);
  EXPECT_EQ(lhs_test(out).status, LhsStatus::kFeasible);
}

TEST(GeneralEnsemble, DropsNullBranches) {
  // Measuring |0><0| on a B marginal supported on |0> leaves branch 1 empty.
  std::vector<HermitianOp> ops{HermitianOp::diagonal({0.5, 0.0}), HermitianOp::diagonal({0.5, 0.0}),
                               HermitianOp::diagonal({1.0, 0.0}), HermitianOp::diagonal({0.0, 0.0})};
  const Assemblage a(2, 2, 2, ops);
  const GeneralLoccOp op{ClassicalChannel::constant(2, {0.5, 0.5}), forward_outputs(2, 2, 1, 2),
                         basis_measurement(Matrix::Identity(2, 2)), 1};
  const LoccEnsemble e = apply_general_1wlocc_ensemble(a, op);
  EXPECT_EQ(e.branches.size(), 1u);
  EXPECT_EQ(e.dropped_branches, 1);
  EXPECT_NEAR(e.branches[0].probability, 1.0, 1e-15);
}

TEST(GeneralEnsemble, ProbabilityConservationOnRandomOps) {
  Rng rng(24);
  for (int t = 0; t < 300; ++t) {
    const Assemblage a = t % 2 == 0 ? random_assemblage(2, 2, 2, 500 + t) : sample_lhs(2, 2, 3, 500 + t).first;
    const LoccEnsemble e = apply_general_1wlocc_ensemble(a, random_general_op(a, rng));
    double total = e.dropped_mass;
    for (const auto &b : e.branches) {
      total += b.probability;
      EXPECT_TRUE(validate(b.assemblage).pass);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Restricted, IdentityOpIsIdentity) {
  const Assemblage a = random_assemblage(3, 2, 3, 25);
  const Assemblage out = apply_restricted(a, identity_op(a));
  for (int i = 0; i < a.size(); ++i) EXPECT_LE(out.ops()[i].max_abs_diff(a.ops()[i]), 1e-12);
}

TEST(Restricted, FixedInputCopiesWingAndIsLhs) {
  const Assemblage a = bb84();
  const RestrictedLoccOp op{ClassicalChannel::constant(3, {1.0, 0.0}), forward_outputs(2, 2, 3, 1),
                            identity_instrument(2)};
  const Assemblage out = apply_restricted(a, op);
  ASSERT_EQ(out.num_inputs(), 3);
  for (int xf = 0; xf < 3; ++xf)
    for (int o = 0; o < 2; ++o) EXPECT_LE(out.op(o, xf).max_abs_diff(a.op(o, 0)), 1e-15);
  EXPECT_EQ(lhs_test(out).status, LhsStatus::kFeasible);
}

TEST(Restricted, UnitaryConjugatesAndPreservesStatus) {
  const Matrix u = qubit_rotation(0.7, 0.3);
  for (const Assemblage &a : {bb84(), sample_lhs(2, 2, 2, 26).first}) {
    RestrictedLoccOp op = identity_op(a);
    op.instrument = unitary_instrument(u);
    const Assemblage out = apply_restricted(a, op);
    for (int i = 0; i < a.size(); ++i)
      EXPECT_LE(linalg::max_abs(out.ops()[i].matrix() - u * a.ops()[i].matrix() * u.adjoint()), 1e-14);
    EXPECT_EQ(lhs_test(out).status, lhs_test(a).status);
  }
}

TEST(Restricted, RandomOpsGiveValidOutputsAndPreserveLhs) {
  Rng rng(27);
  for (int t = 0; t < 300; ++t) {
    const auto [a, model] = sample_lhs(2, 2, 2, 900 + t);
    const Assemblage out = apply_restricted(a, random_restricted_op(a, rng));
    ASSERT_TRUE(validate(out).pass);
    if (t % 10 == 0) EXPECT_EQ(lhs_test(out).status, LhsStatus::kFeasible) << "draw " << t;
  }
}

TEST(Restricted, ExtensionMapMatchesAssemblageMap) {
  Rng rng(28);
  const auto [a, model] = sample_lhs(2, 2, 2, 29);
  const NSExtension ext = classical_extension(a, model);
  const RestrictedLoccOp op = random_restricted_op(a, rng);
  const Assemblage out = apply_restricted(a, op);
  const NSExtension mapped = apply_restricted_extension(ext, op);
  EXPECT_LE(extension_residuals(mapped, out).max(), 1e-12);
}

TEST(Library, MubsAreUnbiased) {
  for (int d : {2, 3, 5}) {
    const auto bases = mub_bases(d);
    ASSERT_EQ(static_cast<int>(bases.size()), d + 1);
    for (size_t i = 0; i < bases.size(); ++i)
      for (size_t j = i + 1; j < bases.size(); ++j) {
        const Matrix overlap = bases[i].adjoint() * bases[j];
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) EXPECT_NEAR(std::norm(overlap(r, c)), 1.0 / d, 1e-12);
      }
  }
  for (const auto &n : instrument_library(2)) EXPECT_LE(n.instrument.completeness_residual(), 1e-12) << n.name;
}

}  // namespace
}  // namespace steerq
