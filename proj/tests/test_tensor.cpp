#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "subsketch/tensor_algebra.hpp"

using namespace subsketch;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double a : v) x[j++] = a;
  return x;
}

// Rebuilds the full d^p tensor from the monomial slots.
std::vector<double> expand(const SymTensor& T) {
  const auto& B = monomial_basis(T.d, T.p);
  std::size_t total = 1;
  for (int r = 0; r < T.p; ++r) total *= static_cast<std::size_t>(T.d);
  std::vector<double> out(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::vector<int> a(static_cast<std::size_t>(T.d), 0);
    std::size_t f = flat;
    for (int r = 0; r < T.p; ++r) {
      ++a[f % static_cast<std::size_t>(T.d)];
      f /= static_cast<std::size_t>(T.d);
    }
    for (std::size_t m = 0; m < B.size(); ++m)
      if (B.exponents[m] == a) out[flat] = T.coeffs[static_cast<Eigen::Index>(m)];
  }
  return out;
}

}  // namespace

TEST(TensorPower, SlotExamples) {
  auto t1 = tensor_power(vec({1, 0}), 2);
  ASSERT_EQ(t1.coeffs.size(), 3);
  EXPECT_EQ(std::vector<double>(t1.coeffs.data(), t1.coeffs.data() + 3), (std::vector<double>{1, 0, 0}));
  auto t2 = tensor_power(vec({1, 1}), 2);
  EXPECT_EQ(std::vector<double>(t2.coeffs.data(), t2.coeffs.data() + 3), (std::vector<double>{1, 1, 1}));
  auto t3 = tensor_power(vec({2, 3}), 3);
  EXPECT_EQ(std::vector<double>(t3.coeffs.data(), t3.coeffs.data() + 4), (std::vector<double>{8, 12, 18, 27}));
}

TEST(TensorPower, InnerProductExample) {
  EXPECT_NEAR(apply_direction(tensor_power(vec({3, 1}), 3), vec({1, 2})), 125.0, 1e-12);
}

TEST(TensorPower, SymDim) {
  EXPECT_EQ(sym_dim(2, 3), 4u);
  EXPECT_EQ(sym_dim(3, 2), 6u);
  EXPECT_EQ(sym_dim(3, 3), 10u);
  EXPECT_EQ(sym_dim(4, 1), 4u);
}

TEST(TensorPower, PowerIdentityUpToSix) {
  Rng rng(21);
  for (int d = 1; d <= 4; ++d)
    for (int p = 1; p <= 6; ++p)
      for (int t = 0; t < 25; ++t) {
        Vector x = Vector::NullaryExpr(d, [&](Eigen::Index) { return 2 * uniform01(rng) - 1; });
        Vector y = Vector::NullaryExpr(d, [&](Eigen::Index) { return 2 * uniform01(rng) - 1; });
        const double want = std::pow(x.dot(y), p);
        EXPECT_NEAR(apply_direction(tensor_power(x, p), y), want, 1e-12 * std::max(1.0, std::abs(want)));
      }
}

TEST(TensorPower, MatchesFlatOracle) {
  Rng rng(4);
  for (int d = 1; d <= 3; ++d)
    for (int p = 1; p <= 4; ++p)
      for (int t = 0; t < 10; ++t) {
        Vector x = Vector::NullaryExpr(d, [&](Eigen::Index) { return 2 * uniform01(rng) - 1; });
        Vector y = Vector::NullaryExpr(d, [&](Eigen::Index) { return 2 * uniform01(rng) - 1; });
        const auto fx = oracle::flat_tensor(x, p);
        const auto ex = expand(tensor_power(x, p));
        ASSERT_EQ(fx.size(), ex.size());
        for (std::size_t k = 0; k < fx.size(); ++k) EXPECT_NEAR(ex[k], fx[k], 1e-14);
        EXPECT_NEAR(apply_direction(tensor_power(x, p), y),
                    oracle::flat_inner(fx, oracle::flat_tensor(y, p)), 1e-12);
      }
}

TEST(TensorPower, CancellationAndLinearity) {
  Rng rng(9);
  for (int p : {1, 3, 5}) {
    Vector x = random_unit(3, rng);
    SymTensor T = tensor_power(x, p);
    T += tensor_power(-x, p);
    EXPECT_LE(T.coeffs.cwiseAbs().maxCoeff(), 1e-15);
  }
  Vector a = random_unit(3, rng), b = random_unit(3, rng), y = random_unit(3, rng);
  auto S = weighted_sum({tensor_power(a, 3), tensor_power(b, 3)}, {2.0, -0.5});
  EXPECT_NEAR(apply_direction(S, y), 2.0 * std::pow(a.dot(y), 3) - 0.5 * std::pow(b.dot(y), 3), 1e-13);
  auto Z = tensor_power(a, 2);
  SymTensor neg = Z;
  neg.coeffs = -neg.coeffs;
  Z += neg;
  EXPECT_EQ(Z.coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(TensorPower, ShapeErrors) {
  SymTensor T(2, 2);
  EXPECT_THROW(T += SymTensor(3, 2), InputError);
  EXPECT_THROW(T += SymTensor(2, 3), InputError);
  EXPECT_THROW(apply_direction(T, vec({1, 0, 0})), InputError);
  EXPECT_THROW(tensor_power(vec({1, 0}), 0), InputError);
  EXPECT_THROW(weighted_sum({}, {}), InputError);
  EXPECT_THROW(weighted_sum({T}, {1.0, 2.0}), InputError);
}
