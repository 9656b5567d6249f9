#include <gtest/gtest.h>

#include <cmath>

#include "subsketch/experiments.hpp"
#include "subsketch/svm.hpp"

using namespace subsketch;

namespace {

double direct_hinge(const Matrix& U, const Vector& theta, double b) {
  double s = 0;
  for (Eigen::Index i = 0; i < U.rows(); ++i) s += std::max(0.0, b - U.row(i).dot(theta));
  return s / static_cast<double>(U.rows());
}

}  // namespace

TEST(LiftAffine, ExampleAndDualPath) {
  Matrix A(1, 1);
  A << 3;
  auto L = lift_affine(WeightedPointSet::uniform(A, 1.0));
  Vector y(2);
  y << 2, 1;
  EXPECT_EQ(exact_lp_power(L, y), 5.0);

  Rng rng(1);
  std::normal_distribution<double> g;
  Matrix B(50, 3);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
  for (double p : {1.0, 2.0, 3.0}) {
    auto P = WeightedPointSet::uniform(B, p);
    auto Lp = lift_affine(P);
    for (int t = 0; t < 20; ++t) {
      Vector x = random_unit(3, rng);
      const double b = g(rng);
      double want = 0;
      for (Eigen::Index i = 0; i < B.rows(); ++i) want += std::pow(std::abs(B.row(i).dot(x) - b), p);
      Vector xb(4);
      xb << x, b;
      EXPECT_NEAR(exact_lp_power(Lp, xb), want, 1e-10 * std::max(1.0, want));
      xb[3] = 0;
      EXPECT_NEAR(exact_lp_power(Lp, xb), exact_lp_power(P, x), 1e-10 * std::max(1.0, want));
    }
  }
}

TEST(Hinge, ZeroThetaAndHomogeneity) {
  Rng rng(2);
  Matrix U = sphere_points(2, 4000, rng);
  auto h = build_hinge(U, 0.1, rng);
  Vector zero = Vector::Zero(2);
  for (double b : {-1.0, 0.0, 0.4, 2.0}) EXPECT_NEAR(h.query(zero, b), std::max(0.0, b), 1e-12);
  Rng xr(3);
  for (int t = 0; t < 50; ++t) {
    Vector th = random_unit(2, xr);
    const double b = 2 * uniform01(xr) - 1;
    EXPECT_NEAR(h.query(3.0 * th, 3.0 * b), 3.0 * h.query(th, b), 1e-12);
    EXPECT_GE(h.query(th, b), 0.0);
  }
}

TEST(Hinge, SmallInputIsExactAndLargeInputAudits) {
  Rng rng(4);
  Matrix small = sphere_points(3, 6, rng);
  auto hs = build_hinge(small, 0.3, rng);
  Rng xr(5);
  for (int t = 0; t < 50; ++t) {
    Vector th = random_unit(3, xr);
    const double b = 2 * uniform01(xr) - 1;
    EXPECT_NEAR(hs.query(th, b), direct_hinge(small, th, b), 1e-12);
  }
  Matrix U = sphere_points(2, 5000, rng);
  const double eps = 0.1;
  auto h = build_hinge(U, eps, rng);
  EXPECT_LT(h.core.size(), 5000u);
  for (int t = 0; t < 300; ++t) {
    Vector th = random_unit(2, xr);
    const double b = 2 * uniform01(xr) - 1;
    EXPECT_LE(std::abs(h.query(th, b) - direct_hinge(U, th, b)), eps * std::sqrt(1 + b * b));
  }
}

TEST(Svm, EmptyDataGivesRegularizer) {
  SvmBuilder sb(3, 0.1, 0.5, 1);
  auto S = sb.finalize();
  Vector th(3);
  th << 1, -2, 0.5;
  EXPECT_DOUBLE_EQ(svm_query(S, th, 0.7), 0.25 * (th.squaredNorm() + 0.49));
}

TEST(Svm, SingleClassAtOrigin) {
  Rng rng(6);
  Matrix X = sphere_points(2, 500, rng);
  std::vector<int> y(500, 1);
  auto S = svm_build(X, y, 0.1, 0.0, 7);
  EXPECT_EQ(S.n_neg, 0u);
  EXPECT_DOUBLE_EQ(svm_query(S, Vector::Zero(2), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(svm_objective(X, y, 0.0, Vector::Zero(2), 0.0), 1.0);
}

TEST(Svm, ValidationAndAudit) {
  EXPECT_THROW(SvmBuilder(2, 0.0, 0.1, 1), InputError);
  EXPECT_THROW(SvmBuilder(2, 0.1, -1.0, 1), InputError);
  SvmBuilder sb(2, 0.1, 0.1, 1);
  EXPECT_THROW(sb.ingest(Vector::Zero(2), 0), InputError);
  EXPECT_THROW(sb.ingest(Vector::Zero(3), 1), InputError);

  Rng rng(8);
  const std::size_t n = 20000;
  Matrix X = sphere_points(2, n, rng);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = X(static_cast<Eigen::Index>(i), 0) + 0.3 * (uniform01(rng) - 0.5);
    y[i] = m > 0 ? 1 : -1;
  }
  const double eps = 0.1, lambda = 0.01;
  auto S = svm_build(X, y, eps, lambda, 9);
  EXPECT_EQ(S.n, n);
  EXPECT_LE(S.size(), 2 * S.presample);
  Rng xr(10);
  for (int t = 0; t < 200; ++t) {
    Vector th = 2.0 * random_unit(2, xr);
    const double b = 2 * uniform01(xr) - 1;
    const double scale = 1 + th.norm() + std::abs(b);
    EXPECT_LE(std::abs(svm_query(S, th, b) - svm_objective(X, y, lambda, th, b)), eps * scale);
  }
}
