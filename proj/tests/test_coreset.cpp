#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "subsketch/coreset_engine.hpp"
#include "subsketch/experiments.hpp"
#include "subsketch/svm.hpp"

using namespace subsketch;

namespace {

WeightedPointSet circle(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  auto P = WeightedPointSet::uniform(sphere_points(2, n, rng), p);
  P.weights /= static_cast<double>(n);
  return P;
}

}  // namespace

TEST(Halve, PreservesTotalWeightAndShrinks) {
  for (int p : {1, 2, 3}) {
    auto P = circle(3000, p, 1 + p);
    Rng rng(5);
    auto hr = halve(P, rng);
    EXPECT_NEAR(hr.out.total_weight(), 1.0, 1e-12);
    EXPECT_LE(hr.out.size(), 7 * P.size() / 8);
    EXPECT_EQ(hr.out.size() + hr.removed, P.size());
    EXPECT_FALSE(hr.flagged);
  }
}

TEST(Halve, IdenticalCopiesCollapseToOnePoint) {
  const int s = halve_group_size(2, 1);
  Matrix A(2 * s, 2);
  for (int i = 0; i < 2 * s; ++i) A.row(i) << 0.6, 0.8;
  WeightedPointSet P = WeightedPointSet::uniform(A, 1.0);
  P.weights /= 2.0 * s;
  Rng rng(1);
  auto hr = halve(P, rng);
  EXPECT_LT(hr.out.size(), P.size());
  EXPECT_NEAR(hr.out.total_weight(), 1.0, 1e-12);
  for (Eigen::Index i = 0; i < hr.out.points.rows(); ++i) EXPECT_EQ(hr.out.points.row(i), A.row(0));
}

TEST(Halve, SmallInputIsIdentity) {
  auto P = circle(5, 1.0, 3);
  Rng rng(1);
  auto hr = halve(P, rng);
  EXPECT_EQ(hr.out.points, P.points);
  EXPECT_EQ(hr.removed, 0u);
}

TEST(Halve, GroupBarycenterAndExactnessOutsideBand) {
  for (int p : {1, 2, 3}) {
    auto P = circle(2000, p, 10 + p);
    Rng rng(7);
    auto hr = halve(P, rng);
    const auto& B = monomial_basis(2, p);
    for (const auto& g : hr.groups) {
      Vector a = Vector::Zero(static_cast<Eigen::Index>(B.size())), b = a, m = a;
      for (int i : g.members) {
        Vector row = P.points.row(i).transpose();
        monomials_into(B, row.data(), m.data());
        a += P.weights[i] * m;
      }
      for (std::size_t k = 0; k < g.kept.size(); ++k) {
        Vector row = P.points.row(g.kept[k]).transpose();
        monomials_into(B, row.data(), m.data());
        b += g.kept_weights[k] * m;
      }
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
    Rng xr(8);
    for (int t = 0; t < 200; ++t) {
      Vector x = random_unit(2, xr);
      EXPECT_LE(std::abs(halve_error_at(P, hr, x, 2)), 1e-8);
      // Intersected groups: members satisfy |<x,y>| <= 2r, so each group moves
      // by at most W_g (2r)^p.
      double bound = 0;
      for (const auto& g : hr.groups) {
        if (!hyperplane_intersects(g.center, g.radius, x)) continue;
        double W = 0;
        for (int i : g.members) W += P.weights[i];
        bound += W * std::pow(2 * g.radius, p);
      }
      EXPECT_LE(std::abs(halve_error_at(P, hr, x, 1)), bound + 1e-15);
      const double direct = exact_lp_power(hr.out, x) - exact_lp_power(P, x);
      EXPECT_NEAR(halve_error_at(P, hr, x, 0), direct, 1e-12);
    }
  }
}

TEST(Halve, UnbiasedAcrossRuns) {
  auto P = circle(600, 1.0, 21);
  Rng xr(3);
  const Vector x = random_unit(2, xr);
  const double exact = exact_lp_power(P, x);
  const int runs = 400;
  double s = 0, s2 = 0;
  for (int r = 0; r < runs; ++r) {
    Rng rng(1000 + r);
    const double e = exact_lp_power(halve(P, rng).out, x) - exact;
    s += e;
    s2 += e * e;
  }
  const double mean = s / runs;
  const double sd = std::sqrt(std::max(s2 / runs - mean * mean, 0.0));
  EXPECT_LE(std::abs(mean), 4.0 * sd / std::sqrt(runs) + 1e-15);
}

TEST(BuildAdditive, LargeEpsLeavesInputUnchanged) {
  auto P = circle(4, 1.0, 2);
  Rng rng(1);
  ASSERT_GE(additive_target(2, 1.0, 0.5), 4.0);
  auto S = build_additive(P, 0.5, rng);
  EXPECT_EQ(S.base.points, P.points);
  EXPECT_EQ(S.rounds, 0);
  Rng xr(2);
  for (int t = 0; t < 10; ++t) {
    Vector x = random_unit(2, xr);
    EXPECT_EQ(query(S, x).estimate, exact_lp_power(P, x));
  }
}

TEST(BuildAdditive, SizeTargetMonotoneAndError) {
  auto P = circle(5000, 1.0, 4);
  std::size_t prev = 0;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    Rng rng(9);
    auto S = build_additive(P, eps, rng);
    EXPECT_LE(static_cast<double>(S.size()), std::floor(additive_target(2, 1.0, eps)));
    EXPECT_GE(S.size(), prev);
    prev = S.size();
    EXPECT_NEAR(S.base.total_weight(), 1.0, 1e-9);
    for (Eigen::Index i = 0; i < S.base.weights.size(); ++i) EXPECT_GE(S.base.weights[i], 0.0);
    auto net = sup_error_on_net(P, [&](const Vector& x) { return query(S, x).estimate; }, 0.01, 5);
    EXPECT_LE(net.max_error, eps) << "eps=" << eps;
    // Cross-check the net audit with the exact sup over the circle.
    std::vector<double> c;
    Matrix pts(static_cast<Eigen::Index>(P.size() + S.size()), 2);
    pts << P.points, S.base.points;
    for (Eigen::Index i = 0; i < P.weights.size(); ++i) c.push_back(-P.weights[i]);
    for (Eigen::Index i = 0; i < S.base.weights.size(); ++i) c.push_back(S.base.weights[i]);
    EXPECT_LE(oracle::sup_abs_combination_2d(pts, c), eps) << "eps=" << eps;
  }
}

TEST(BuildAdditive, RejectsFractionalP) {
  auto P = circle(100, 1.5, 1);
  Rng rng(1);
  EXPECT_THROW(build_additive(P, 0.1, rng), UnsupportedError);
  EXPECT_THROW(additive_target(2, 1.0, 0.0), InputError);
}

TEST(BuildMultiplicative, RelativeErrorWithinBudget) {
  Rng gen(3);
  for (int d : {2, 3}) {
    Matrix A(4000, d);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(gen);
    A.col(0) *= 5.0;
    auto P = WeightedPointSet::uniform(A, 1.0);
    Rng rng(4);
    auto S = build_multiplicative(P, 0.1, rng);
    EXPECT_TRUE(S.multiplicative);
    ASSERT_TRUE(S.transform.has_value());
    EXPECT_LT(S.size(), P.size());
    for (int t = 0; t < 1000; ++t) {
      Vector x = random_unit(d, gen);
      const double ex = exact_lp_power(P, x);
      const auto r = query(S, x);
      EXPECT_TRUE(r.multiplicative);
      EXPECT_LE(std::abs(r.estimate - ex), S.error_budget * ex) << "d=" << d;
    }
  }
}

TEST(BuildMultiplicative, SingleRowIsExact) {
  Matrix A(1, 3);
  A << 0.3, -2.0, 1.0;
  auto P = WeightedPointSet::uniform(A, 3.0);
  Rng rng(1);
  auto S = build_multiplicative(P, 0.1, rng);
  Rng xr(2);
  for (int t = 0; t < 20; ++t) {
    Vector x = random_unit(3, xr);
    EXPECT_NEAR(query(S, x).estimate, exact_lp_power(P, x), 1e-9 * std::max(1.0, exact_lp_power(P, x)));
  }
}

TEST(BuildMultiplicative, ChangeOfVariables) {
  Rng gen(5);
  Matrix A(3000, 2);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(gen);
  Matrix M(2, 2);
  M << 2.0, 1.0, -0.5, 3.0;
  auto P = WeightedPointSet::uniform(A, 1.0);
  auto Q = WeightedPointSet::uniform(A * M, 1.0);
  Rng r1(7), r2(7);
  auto S1 = build_multiplicative(P, 0.1, r1);
  auto S2 = build_multiplicative(Q, 0.1, r2);
  double worst1 = 0, worst2 = 0;
  for (int t = 0; t < 500; ++t) {
    Vector x = random_unit(2, gen);
    Vector y = M.inverse() * x;
    EXPECT_NEAR(exact_lp_power(Q, y), exact_lp_power(P, x), 1e-9 * exact_lp_power(P, x));
    worst1 = std::max(worst1, std::abs(query(S1, x).estimate / exact_lp_power(P, x) - 1));
    worst2 = std::max(worst2, std::abs(query(S2, y).estimate / exact_lp_power(Q, y) - 1));
  }
  EXPECT_LE(worst1, S1.error_budget);
  EXPECT_LE(worst2, S2.error_budget);
  RecordProperty("worst_rel_original", std::to_string(worst1));
  RecordProperty("worst_rel_transformed", std::to_string(worst2));
}

TEST(Query, EmptyExactAndHomogeneous) {
  CoresetSketch empty;
  empty.d = 2;
  Vector x(2);
  x << 0.6, 0.8;
  EXPECT_EQ(query(empty, x).estimate, 0.0);
  auto P = circle(50, 3.0, 8);
  CoresetSketch S;
  S.base = P;
  S.d = 2;
  S.p = 3.0;
  EXPECT_EQ(query(S, x).estimate, exact_lp_power(P, x));
  EXPECT_NEAR(query(S, -2.5 * x).estimate, std::pow(2.5, 3) * exact_lp_power(P, x), 1e-12);
  Vector bad(3);
  bad << 1, 0, 0;
  EXPECT_THROW(query(S, bad), InputError);
}

TEST(Hinge, ExactBranchOutsideBand) {
  Rng gen(12);
  Matrix U = sphere_points(2, 3000, gen);
  auto h = build_hinge(U, 0.1, gen);
  // Compare halving rounds directly on the lifted rows: groups missed by the
  // query hyperplane contribute their exact hinge sum.
  WeightedPointSet lifted;
  lifted.p = 1.0;
  lifted.points.resize(U.rows(), 3);
  lifted.points.leftCols(2) = -U;
  lifted.points.col(2).setConstant(1.0);
  lifted.weights = Vector::Constant(U.rows(), 1.0 / static_cast<double>(U.rows()));
  Rng rng(1);
  auto hr = halve(lifted, rng);
  for (int t = 0; t < 200; ++t) {
    Vector y = random_unit(3, gen);
    EXPECT_LE(std::abs(halve_error_at(lifted, hr, y, 2, Loss::Hinge)), 1e-8);
  }
  EXPECT_GT(h.core.size(), 0u);
}
