#pragma once
// Brute-force references used by the tests.  Nothing here calls into the
// library code under test except plain data types.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "subsketch/types.hpp"

namespace oracle {

using subsketch::Matrix;
using subsketch::Vector;

/// x^{⊗p} as a flat d^p array (row-major multi-index).
inline std::vector<double> flat_tensor(const Vector& x, int p) {
  std::vector<double> t{1.0};
  for (int r = 0; r < p; ++r) {
    std::vector<double> next;
    next.reserve(t.size() * static_cast<std::size_t>(x.size()));
    for (double a : t)
      for (Eigen::Index j = 0; j < x.size(); ++j) next.push_back(a * x[j]);
    t.swap(next);
  }
  return t;
}

inline double flat_inner(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Σ w_i |<a_i, x>|^p, straight loop.
inline double lp_power(const Matrix& A, const Vector& w, double p, const Vector& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) s += w[i] * std::pow(std::abs(A.row(i).dot(x)), p);
  return s;
}

/// sup over unit x in R^2 of |Σ c_i |<a_i, x>||, exactly: between kinks the
/// sum is A cos θ + B sin θ, so sweep the kink angles over [0, π).
inline double sup_abs_combination_2d(const Matrix& pts, const std::vector<double>& c) {
  const double pi = std::numbers::pi;
  struct Item {
    double kink;
    double r, phi, c;
  };
  std::vector<Item> items;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double ci = c[static_cast<std::size_t>(i)];
    const double r = pts.row(i).norm();
    if (ci == 0.0 || r == 0.0) continue;
    const double phi = std::atan2(pts(i, 1), pts(i, 0));
    double k = std::fmod(phi + pi / 2.0, pi);
    if (k < 0) k += pi;
    items.push_back({k, r, phi, ci});
  }
  if (items.empty()) return 0.0;
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.kink < b.kink; });
  // Signs at θ = 0.
  std::vector<double> sgn(items.size());
  double A = 0.0, B = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    sgn[i] = std::cos(items[i].phi) >= 0.0 ? 1.0 : -1.0;
    if (items[i].kink == 0.0) sgn[i] = 1.0;
    A += items[i].c * items[i].r * sgn[i] * std::cos(items[i].phi);
    B += items[i].c * items[i].r * sgn[i] * std::sin(items[i].phi);
  }
  auto val = [&](double t) { return std::abs(A * std::cos(t) + B * std::sin(t)); };
  double best = 0.0;
  double lo = 0.0;
  std::size_t i = 0;
  while (true) {
    const double hi = i < items.size() ? items[i].kink : pi;
    best = std::max({best, val(lo), val(hi)});
    double psi = std::atan2(B, A);  // stationary points at psi + mπ
    for (int m = -2; m <= 2; ++m) {
      const double t = psi + m * pi;
      if (t > lo && t < hi) best = std::max(best, val(t));
    }
    if (i == items.size()) break;
    // Flip every item sharing this kink.
    const double k = items[i].kink;
    while (i < items.size() && items[i].kink == k) {
      const auto& it = items[i];
      A -= 2.0 * it.c * it.r * sgn[i] * std::cos(it.phi);
      B -= 2.0 * it.c * it.r * sgn[i] * std::sin(it.phi);
      sgn[i] = -sgn[i];
      ++i;
    }
    lo = k;
  }
  return best;
}

/// Chebyshev (d=2) or Legendre (d=3) degree k at t, from the standard library.
inline double zonal(int d, int k, double t) {
  if (d == 2) return std::cos(k * std::acos(std::clamp(t, -1.0, 1.0)));
  return std::legendre(static_cast<unsigned>(k), t);
}

/// c_d ∫_0^π |cos θ|^p sin^{d-2} θ P_k(cos θ) dθ with adaptive Gauss–Kronrod
/// on each half of [0, π]; c_d normalizes the weight to unit mass.
inline double lambda(int d, double p, int k) {
  const double cd = std::tgamma(d / 2.0) / (std::sqrt(std::numbers::pi) * std::tgamma((d - 1) / 2.0));
  auto f = [&](double th) {
    return std::pow(std::abs(std::cos(th)), p) * std::pow(std::sin(th), d - 2) * zonal(d, k, std::cos(th));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double h = std::numbers::pi / 2.0;
  double s = 0.0;
  for (int j = 0; j < 8; ++j) s += GK::integrate(f, j * h / 4.0, (j + 1) * h / 4.0, 6, 1e-13);
  return cd * s;
}

/// Upper tail of χ² with 4 degrees of freedom.
inline double chi2_sf_dof4(double x) { return std::exp(-x / 2.0) * (1.0 + x / 2.0); }

inline double chi2_stat(const std::vector<double>& counts, double expected) {
  double s = 0.0;
  for (double c : counts) s += (c - expected) * (c - expected) / expected;
  return s;
}

/// Least-squares slope and intercept of y against x.
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  const double b = sxy / sxx;
  return {b, my - b * mx};
}

}  // namespace oracle
