#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pbosons/frames.hpp"
#include "test_util.hpp"

using namespace pbosons;
using pbosons::test::max_abs;

namespace {

PseudoBosonPair swanson_pair(int dim, double theta) {
  auto [c, c_dag] = build_ladder(dim);
  const cplx i(0.0, 1.0);
  return {std::cos(theta) * c + i * std::sin(theta) * c_dag, std::cos(theta) * c_dag + i * std::sin(theta) * c};
}

PseudoBosonPair shifted_pair(int dim, double beta) {
  auto [c, c_dag] = build_ladder(dim);
  auto id = TruncatedOperator::identity(c.shape(), c.trust());
  return {c - (1.0 / beta) * id, c_dag + (1.0 / beta) * id};
}

Matrix alternating_diag(int dim, double kappa) {
  Matrix t = Matrix::Identity(dim, dim);
  for (int n = 1; n < dim; n += 2) t(n, n) = kappa;
  return t;
}

// a = T c T^-1, b = T c^dag T^-1 assembled by hand
PseudoBosonPair seeded_pair(const Matrix& t) {
  const int dim = static_cast<int>(t.rows());
  auto [c, c_dag] = build_ladder(dim);
  const Matrix ti = t.inverse();
  return {TruncatedOperator(t * c.entries() * ti, dim - 1), TruncatedOperator(t * c_dag.entries() * ti, dim - 1)};
}

double condition_at(const PseudoBosonPair& pair, int trust) {
  auto sys = build_system(pair, clean_n_max(pair.mode_dim(), trust));
  return riesz_bounds(frame_operators(sys, trust).s_phi, trust).condition;
}

}  // namespace

TEST(FrameOperator, OrthonormalFamilyGivesIdentityOnTrust) {
  Matrix family = Matrix::Identity(10, 6);
  auto s = frame_operator(family, Shape{1, 10}, 6);
  EXPECT_EQ(max_abs(s.restricted(6) - Matrix::Identity(6, 6)), 0.0);
}

TEST(FrameOperator, ScaledPairGivesDiagonal) {
  std::vector<Vector> family{2.0 * Vector::Unit(5, 0), Vector::Unit(5, 1)};
  auto s = frame_operator(family, 5).entries();
  Matrix expected = Matrix::Zero(5, 5);
  expected(0, 0) = 4.0;
  expected(1, 1) = 1.0;
  EXPECT_EQ(max_abs(s - expected), 0.0);
}

TEST(FrameOperator, ShapeErrors) {
  std::vector<Vector> ragged{Vector::Unit(4, 0), Vector::Unit(5, 0)};
  EXPECT_THROW(frame_operator(ragged, 2), Error);
  EXPECT_THROW(frame_operator(std::vector<Vector>{}, 2), Error);
  EXPECT_THROW(frame_operator(Matrix::Identity(4, 2), Shape{1, 5}, 2), Error);
}

TEST(FrameOperator, SwansonMatchesMetricExponential) {
  // S_phi is proportional to exp(theta * i(a^2 - a^dag^2)); the scale is pinned by <Psi0, phi0> = 1
  const double theta = 0.3;
  const int dim = 64, trust = 16;
  auto pair = swanson_pair(dim, theta);
  auto sys = build_system(pair, clean_n_max(dim, trust));
  auto s = frame_operators(sys, trust).s_phi;
  auto [c, c_dag] = build_ladder(dim);
  const cplx i(0.0, 1.0);
  Matrix metric = herm_exp(i * (c * c - c_dag * c_dag), theta).entries();
  Matrix block = s.restricted(trust);
  const cplx gauge = block(0, 0) / metric(0, 0);
  EXPECT_NEAR(gauge.imag(), 0.0, 1e-12);
  Matrix diff = block - gauge * metric.topLeftCorner(trust, trust);
  EXPECT_LT(norm2(diff) / norm2(block), 1e-6);
}

TEST(FrameConvergenceTest, BosonsDoNotChange) {
  auto [c, c_dag] = build_ladder(20);
  auto sys = build_system(PseudoBosonPair(c, c_dag), 16);
  auto conv = frame_convergence(sys, 8);
  EXPECT_EQ(conv.n_half, 8);
  EXPECT_LT(conv.max(), 1e-15);
}

TEST(FrameConvergenceTest, SwansonSumsSettleOnTrust) {
  auto sys = build_system(swanson_pair(96, 0.2), 64);
  EXPECT_LT(frame_convergence(sys, 8).max(), 1e-8);
}

TEST(MutualMappingTest, BosonsAreExact) {
  auto [c, c_dag] = build_ladder(24);
  auto sys = build_system(PseudoBosonPair(c, c_dag), 12);
  auto f = frame_operators(sys, 12);
  EXPECT_LT(mutual_mapping_check(f.s_phi, f.s_psi, sys, 12, 12).max(), 1e-15);
}

TEST(MutualMappingTest, RieszSeededModel) {
  const int dim = 64;
  auto pair = seeded_pair(alternating_diag(dim, std::sqrt(10.0)));
  auto sys = build_system(pair, 32);
  auto f = frame_operators(sys, 32);
  EXPECT_LT(mutual_mapping_check(f.s_phi, f.s_psi, sys, 32, 16).max(), 1e-8);
}

TEST(MutualMappingTest, SwansonFromTwentyFourVectors) {
  const int dim = 64, trust = 24;
  auto sys = build_system(swanson_pair(dim, 0.3), 24);
  auto f = frame_operators(sys, trust);
  auto r = mutual_mapping_check(f.s_phi, f.s_psi, sys, trust, 12);
  EXPECT_LT(r.max(), 1e-6);
}

TEST(RieszBoundsTest, IdentityAndDiagonal) {
  auto b = riesz_bounds(TruncatedOperator::identity(Shape{1, 6}, 6), 6);
  EXPECT_DOUBLE_EQ(b.lower, 1.0);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
  EXPECT_DOUBLE_EQ(b.condition, 1.0);
  Matrix d = Matrix::Identity(5, 5);
  d(0, 0) = 0.25;
  d(3, 3) = 4.0;
  auto bd = riesz_bounds(TruncatedOperator(d, 5), 5);
  EXPECT_NEAR(bd.lower, 0.25, 1e-15);
  EXPECT_NEAR(bd.upper, 4.0, 1e-15);
  EXPECT_NEAR(bd.condition, 16.0, 1e-13);
}

TEST(RieszBoundsTest, OnlyTrustBlockCounts) {
  Matrix d = Matrix::Identity(6, 6);
  d(5, 5) = 0.0;
  EXPECT_NEAR(riesz_bounds(TruncatedOperator(d, 6), 4).condition, 1.0, 1e-15);
  try {
    riesz_bounds(TruncatedOperator(d, 6), 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_positive);
  }
}

TEST(RieszBoundsTest, SwansonConditionGrowsWithDim) {
  double previous = 0.0;
  for (int dim : {16, 32, 64}) {
    const double cond = condition_at(swanson_pair(dim, 0.3), dim / 2);
    EXPECT_GT(cond, previous) << dim;
    previous = cond;
  }
}

TEST(Classify, FlatSequenceIsRegular) {
  std::vector<GrowthSample> g{{16, 5.0}, {32, 5.0}, {64, 5.0}};
  EXPECT_EQ(classify_regularity(g), Regularity::rpb_consistent);
}

TEST(Classify, GrowingSequenceIsNonRegular) {
  std::vector<GrowthSample> g{{16, 2.0}, {32, 5.0}, {64, 9.0}};
  EXPECT_EQ(classify_regularity(g), Regularity::pb_nonregular_consistent);
}

TEST(Classify, MildOrNonMonotoneGrowthIsInconclusive) {
  std::vector<GrowthSample> mild{{16, 2.0}, {32, 3.0}, {64, 4.0}};
  EXPECT_EQ(classify_regularity(mild), Regularity::inconclusive);
  std::vector<GrowthSample> bumpy{{16, 2.0}, {32, 20.0}, {64, 10.0}};
  EXPECT_EQ(classify_regularity(bumpy), Regularity::inconclusive);
  EXPECT_EQ(classify_regularity(mild, ClassifyOptions{1.5, 1.8}), Regularity::pb_nonregular_consistent);
}

TEST(Classify, RejectsShortOrIrregularSweeps) {
  std::vector<GrowthSample> two{{16, 1.0}, {32, 1.0}};
  try {
    classify_regularity(two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
  std::vector<GrowthSample> arithmetic{{16, 1.0}, {32, 1.0}, {48, 1.0}};
  EXPECT_THROW(classify_regularity(arithmetic), Error);
}

TEST(Classify, SweepsSeparateTheModels) {
  std::vector<GrowthSample> sw, seeded;
  for (int dim : {16, 32, 64}) {
    sw.push_back({dim, condition_at(swanson_pair(dim, 0.3), dim / 2)});
    seeded.push_back({dim, condition_at(seeded_pair(alternating_diag(dim, std::sqrt(10.0))), dim / 2)});
  }
  EXPECT_EQ(classify_regularity(sw), Regularity::pb_nonregular_consistent);
  EXPECT_EQ(classify_regularity(seeded), Regularity::rpb_consistent);
  EXPECT_NEAR(seeded.front().condition, 10.0, 1e-8);
}

TEST(Intertwine, BosonsAreExact) {
  auto [c, c_dag] = build_ladder(16);
  PseudoBosonPair pair(c, c_dag);
  auto sys = build_system(pair, 8);
  auto f = frame_operators(sys, 8);
  EXPECT_EQ(intertwine_residual(f.s_psi, pair.number(0), pair.number_dual(0), 8), 0.0);
}

TEST(Intertwine, PhysicalModelsOnTrust16) {
  const int dim = 64, trust = 16;
  for (auto pair : {swanson_pair(dim, 0.2), shifted_pair(dim, 1.0)}) {
    auto sys = build_system(pair, clean_n_max(dim, trust));
    auto f = frame_operators(sys, trust);
    EXPECT_LT(intertwine_residual(f.s_psi, pair.number(0), pair.number_dual(0), trust) / norm2(f.s_psi.restricted(trust)),
              1e-6);
    EXPECT_LT(intertwine_residual(f.s_phi, pair.number_dual(0), pair.number(0), trust) / norm2(f.s_phi.restricted(trust)),
              1e-6);
  }
}

TEST(Bosonize, StandardBosonsGiveIdentity) {
  auto [c, c_dag] = build_ladder(20);
  PseudoBosonPair pair(c, c_dag);
  auto sys = build_system(pair, 9);
  auto w = bosonize(pair, sys, frame_operators(sys, 10).s_phi);
  EXPECT_LT(max_abs(w.t.entries() - Matrix::Identity(10, 10)), 1e-15);
  EXPECT_LT(w.residual(), 1e-15);
  EXPECT_LT(w.orthonormality, 1e-15);
  EXPECT_EQ(w.headline, 5);
}

TEST(Bosonize, RecoversRieszSeed) {
  const int dim = 64, block = 32;
  const Matrix t = alternating_diag(dim, std::sqrt(10.0));
  auto pair = seeded_pair(t);
  auto sys = build_system(pair, block - 1);
  auto w = bosonize(pair, sys, frame_operators(sys, block).s_phi);
  EXPECT_EQ(w.headline, 16);
  EXPECT_LT(w.residual(), 1e-7);
  EXPECT_LT(w.orthonormality, 1e-8);
  // the recovered root equals the seed up to the scale fixed by the phase convention
  const double scale = w.t.entries()(0, 0).real();
  EXPECT_LT(max_abs(w.t.entries() / scale - t.topLeftCorner(block, block)), 1e-8);
}

TEST(Bosonize, SwansonResidualGrowsTowardEdge) {
  const int dim = 64, block = 32;
  auto pair = swanson_pair(dim, 0.3);
  auto sys = build_system(pair, block - 1);
  auto w = bosonize(pair, sys, frame_operators(sys, block).s_phi, BosonizeOptions{8});
  EXPECT_LT(w.residual(), 1e-5);
  ASSERT_EQ(w.edge_profile.size(), 32u);
  EXPECT_GT(w.edge_profile.back(), 1e3 * w.edge_profile[7]);
  EXPECT_GE(w.residual_a_full, w.residual_a);
}

TEST(Debosonize, IdentityGivesBosons) {
  auto [c, c_dag] = build_ladder(12);
  auto pair = debosonize(c, c_dag, TruncatedOperator::identity(c.shape(), 12));
  EXPECT_LT(max_abs(pair.a().entries() - c.entries()), 1e-15);
  EXPECT_LT(max_abs(pair.b().entries() - c_dag.entries()), 1e-15);
}

TEST(Debosonize, AlternatingDiagonalCommutes) {
  const int dim = 32;
  auto [c, c_dag] = build_ladder(dim);
  auto pair = debosonize(c, c_dag, TruncatedOperator(alternating_diag(dim, 2.0), dim));
  EXPECT_LT(commutation_defects(pair, dim - 1).canonical, 1e-14);
  // a = T c T^-1 entrywise: sqrt(n) * t_{n-1} / t_n
  for (int n = 1; n < dim; ++n) {
    const double ratio = (n % 2 == 1) ? 0.5 : 2.0;
    EXPECT_NEAR(std::abs(pair.a().entries()(n - 1, n)), std::sqrt(double(n)) * ratio, 1e-13);
  }
}

TEST(Debosonize, PositionExponentialRoundTrip) {
  // e^{x} c e^{-x} = c - 1 for x = a + a^dag, so the pair is the shifted oscillator with beta = 1.
  // The dim-64 section has condition ~1e13; rounding confines accuracy to a leading block of about 24.
  const int dim = 64, trust = 24;
  auto [c, c_dag] = build_ladder(dim);
  auto t = herm_exp(c + c_dag, 1.0).with_trust(trust);
  auto pair = debosonize(c, c_dag, t, herm_exp(c + c_dag, -1.0));
  ASSERT_EQ(pair.dim(), trust);
  EXPECT_EQ(pair.a().trust(), trust - 1);
  EXPECT_LT(commutation_defects(pair, trust - 1).canonical, 1e-6);
  Matrix shift = Matrix::Identity(trust, trust);
  EXPECT_LT(max_abs(pair.a().entries() - (c.restricted(trust) - shift)), 1e-7);
  EXPECT_LT(max_abs(pair.b().entries() - (c_dag.restricted(trust) + shift)), 1e-7);
  auto sys = build_system(pair, 6);
  EXPECT_LT(gram_deviation(sys), 1e-6);
  EXPECT_LT(eigen_check(sys, pair, 12).max(), 1e-6);
}

TEST(Debosonize, IllConditionedSeedIsRejected) {
  auto [c, c_dag] = build_ladder(16);
  Matrix t = Matrix::Identity(16, 16);
  t(3, 3) = 1e-15;
  try {
    debosonize(c, c_dag, TruncatedOperator(t, 16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conditioning);
    EXPECT_GT(e.value(), 1e14);
  }
}

TEST(RoundTrip, DebosonizeThenBosonizeRecoversSeed) {
  const int dim = 64, block = 32;
  std::mt19937_64 rng(5);
  Matrix t = alternating_diag(dim, std::sqrt(10.0));
  Matrix mix = Matrix::Identity(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(test::random_matrix(rng, 6, 6));
  mix.topLeftCorner(6, 6) = qr.householderQ();
  t = mix * t * mix.adjoint();
  auto [c, c_dag] = build_ladder(dim);
  auto pair = debosonize(c, c_dag, TruncatedOperator(t, dim));
  auto sys = build_system(pair, block - 1);
  auto w = bosonize(pair, sys, frame_operators(sys, block).s_phi);
  EXPECT_LT(w.residual(), 1e-7);
  EXPECT_LT(w.orthonormality, 1e-8);
  const Matrix rec = w.t.entries() / std::sqrt(frame_operators(sys, block).s_phi.entries()(0, 0).real() /
                                               (t * t.adjoint())(0, 0).real());
  EXPECT_LT(max_abs(rec - t.topLeftCorner(block, block)) / max_abs(t), 1e-8);
}
