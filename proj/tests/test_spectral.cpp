#include <gtest/gtest.h>

#include <cmath>

#include "foldcont/continuation.hpp"
#include "foldcont/errors.hpp"
#include "foldcont/random.hpp"
#include "foldcont/spectral.hpp"

using namespace foldcont;

namespace {

const double kPi = std::acos(-1.0);

Problem identity_problem(const ReferenceDomain& d) {
  return make_problem(d, Diffeomorphism::identity(d.dimension()), Nonlinearity::exponential());
}

LinearizedOperator at_zero(const Problem& p) { return linearize(*p.op, p.nl, {0.0, Vector::Zero(p.size())}); }

double weighted_residual(const LinearizedOperator& lin, const EigenPair& e) {
  return lin.op->norm(lin.apply(e.phi) + e.sigma * e.phi);
}

BranchPoint scalar_point(double s, double sigma1) {
  BranchPoint p;
  p.s = s;
  p.sigma1 = sigma1;
  return p;
}

}  // namespace

TEST(Eigenpairs, IntervalClosedForm) {
  for (int n : {31, 200, 511}) {
    const Problem p = identity_problem(ReferenceDomain::interval(n));
    const LinearizedOperator lin = at_zero(p);
    const auto pairs = eigenpairs(lin, 3);
    ASSERT_EQ(pairs.size(), 3u);
    const double h = 1.0 / (n + 1);
    for (int k = 1; k <= 3; ++k) {
      const double exact = 2.0 / (h * h) * (1.0 - std::cos(k * kPi * h));
      EXPECT_NEAR(pairs[k - 1].sigma, exact, 1e-9 * exact) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Eigenpairs, RectangleModesIncludingDoubleEigenvalue) {
  const Problem p = identity_problem(ReferenceDomain::rectangle(60, 60));
  const LinearizedOperator lin = at_zero(p);
  const auto pairs = eigenpairs(lin, 3);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_NEAR(pairs[0].sigma, 2.0 * kPi * kPi, 0.01 * 2.0 * kPi * kPi);
  EXPECT_NEAR(pairs[1].sigma, 5.0 * kPi * kPi, 0.01 * 5.0 * kPi * kPi);
  EXPECT_NEAR(pairs[2].sigma, 5.0 * kPi * kPi, 0.01 * 5.0 * kPi * kPi);
}

TEST(Eigenpairs, ResidualNormalizationOrthogonality) {
  const Problem p = identity_problem(ReferenceDomain::disk(24, 48));
  UniformStream rng(7);
  Vector v(p.size());
  for (int i = 0; i < p.size(); ++i) v[i] = rng.next(0.0, 0.5);
  const LinearizedOperator lin = linearize(*p.op, p.nl, {1.0, v});
  const auto pairs = eigenpairs(lin, 4);
  ASSERT_EQ(pairs.size(), 4u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_LE(weighted_residual(lin, pairs[i]), 1e-8 * std::max(1.0, std::abs(pairs[i].sigma)));
    EXPECT_NEAR(p.op->norm(pairs[i].phi), 1.0, 1e-8);
    if (i > 0) EXPECT_LE(pairs[i - 1].sigma, pairs[i].sigma);
    for (std::size_t j = 0; j < i; ++j) EXPECT_LE(std::abs(p.op->dot(pairs[i].phi, pairs[j].phi)), 1e-6);
  }
}

TEST(Eigenpairs, PrincipalEigenfunctionHasConstantSign) {
  for (const auto& d : {ReferenceDomain::interval(101), ReferenceDomain::rectangle(20, 14, 1.0, 0.7),
                        ReferenceDomain::disk(16, 32)}) {
    const Problem p = identity_problem(d);
    const NewtonResult sol = newton_correct(*p.op, p.nl, 1.0, Vector::Zero(p.size()));
    const auto pairs = eigenpairs(linearize(*p.op, p.nl, {1.0, sol.v}), 1);
    EXPECT_GT(pairs[0].phi.minCoeff(), 0.0) << d.key();
    EXPECT_GT(p.op->integral(pairs[0].phi), 0.0);
  }
}

TEST(Eigenpairs, LargeProblemUsesLanczos) {
  const Problem p = identity_problem(ReferenceDomain::rectangle(40, 30));
  const LinearizedOperator lin = at_zero(p);
  const auto sparse = eigenpairs(lin, 4);
  const double hx = 1.0 / 41, hy = 1.0 / 31;
  auto mode = [&](int i, int j) {
    return 2.0 / (hx * hx) * (1.0 - std::cos(i * kPi * hx)) + 2.0 / (hy * hy) * (1.0 - std::cos(j * kPi * hy));
  };
  std::vector<double> exact = {mode(1, 1), mode(2, 1), mode(1, 2), mode(3, 1), mode(2, 2), mode(1, 3)};
  std::sort(exact.begin(), exact.end());
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(sparse[k].sigma, exact[k], 1e-8 * exact[k]);
}

TEST(Eigenpairs, NearestZero) {
  const Problem p = identity_problem(ReferenceDomain::interval(63));
  const double h = 1.0 / 64;
  const double s1 = 2.0 / (h * h) * (1.0 - std::cos(kPi * h));
  // mu f' = const shifts the spectrum: sigma_k - mu.
  LinearizedOperator lin = at_zero(p);
  lin.mu = s1 + 3.0;
  const auto near = nearest_zero_pairs(lin, 2);
  ASSERT_EQ(near.size(), 2u);
  EXPECT_NEAR(near[0].sigma, -3.0, 1e-8);
}

TEST(Inertia, CountsEigenvaluesBelowShift) {
  const Problem p = identity_problem(ReferenceDomain::interval(40));
  const LinearizedOperator lin = at_zero(p);
  const auto pairs = eigenpairs(lin, 3);
  const SparseMatrix a = lin.stability_matrix();
  EXPECT_EQ(inertia_below(a, lin.weights(), 0.5 * pairs[0].sigma), 0);
  EXPECT_EQ(inertia_below(a, lin.weights(), 0.5 * (pairs[1].sigma + pairs[2].sigma)), 2);
}

TEST(Morse, ZeroAtMuZeroAndOnMinimalBranch) {
  const Problem p = identity_problem(ReferenceDomain::interval(127));
  EXPECT_EQ(morse_index(at_zero(p)).index, 0);
  const NewtonResult sol = newton_correct(*p.op, p.nl, 3.0, Vector::Zero(p.size()));
  const MorseResult m = morse_index(linearize(*p.op, p.nl, {3.0, sol.v}));
  EXPECT_EQ(m.index, 0);
  EXPECT_FALSE(m.near_singular);
}

TEST(Morse, NearSingularFlag) {
  const Problem p = identity_problem(ReferenceDomain::interval(63));
  LinearizedOperator lin = at_zero(p);
  const double s1 = eigenpairs(lin, 1)[0].sigma;
  lin.mu = s1 + 1e-10;
  const MorseResult m = morse_index(lin, 1e-8);
  EXPECT_TRUE(m.near_singular);
}

TEST(Transversality, SignAndLinearity) {
  const Problem p = identity_problem(ReferenceDomain::rectangle(16, 16));
  const NewtonResult sol = newton_correct(*p.op, p.nl, 2.0, Vector::Zero(p.size()));
  const StateVector state{2.0, sol.v};
  EigenPair pair = eigenpairs(linearize(*p.op, p.nl, state), 1)[0];
  const Transversality t = transversality(*p.op, p.nl, state, pair);
  EXPECT_GT(t.value, 0.0);
  EXPECT_GT(t.normalized, 0.0);
  EXPECT_LE(t.normalized, 1.0 + 1e-12);
  pair.phi = -pair.phi;
  const Transversality flipped = transversality(*p.op, p.nl, state, pair);
  EXPECT_EQ(flipped.value, -t.value);
  EXPECT_EQ(flipped.normalized, -t.normalized);
}

TEST(TrackSigma1, SignChanges) {
  std::vector<BranchPoint> pts;
  for (double s : {0.0, 1.0, 2.0, 3.0}) pts.push_back(scalar_point(s, 4.0 - s));
  Sigma1Track positive = track_sigma1(pts);
  EXPECT_TRUE(positive.brackets.empty());
  pts.push_back(scalar_point(4.5, -0.5));
  pts.push_back(scalar_point(5.0, -1.0));
  Sigma1Track one = track_sigma1(pts);
  ASSERT_EQ(one.brackets.size(), 1u);
  EXPECT_EQ(one.brackets[0], std::make_pair(3, 4));
  EXPECT_TRUE(one.samples[4].sign_change);
  EXPECT_FALSE(one.identically_zero);
}

TEST(TrackSigma1, IdenticallyZeroGuard) {
  std::vector<BranchPoint> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(scalar_point(i, 1e-12));
  EXPECT_TRUE(track_sigma1(pts).identically_zero);
  pts.resize(10);
  EXPECT_FALSE(track_sigma1(pts).identically_zero);
}

TEST(CRCheck, InsufficientSamples) {
  const Problem p = identity_problem(ReferenceDomain::interval(15));
  BranchPoint fold;
  fold.v = Vector::Zero(p.size());
  EXPECT_THROW(cr_expansion_check(p, {}, fold, FoldRecord{}, 4), InsufficientSamples);
}
