#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "subsketch/parallel.hpp"
#include "subsketch/sphere_geometry.hpp"
#include "subsketch/tensor_algebra.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

/// Normalized Gegenbauer polynomial P_{k,d}(t) with P_{k,d}(1) = 1
/// (Chebyshev for d=2, Legendre for d=3).
inline double legendre_P(int k, int d, double t) {
  if (k < 0 || d < 2) throw InputError("legendre_P requires k >= 0 and d >= 2");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = t;
  for (int j = 2; j <= k; ++j) {
    const double next = ((2.0 * j + d - 4) * t * cur - (j - 1.0) * prev) / (j + d - 3.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Dimension of degree-k spherical harmonics in d variables.
inline std::int64_t M_count(int d, int k) {
  if (d < 2 || k < 0) throw InputError("M_count requires d >= 2 and k >= 0");
  if (k == 0) return 1;
  return static_cast<std::int64_t>(binomial(k + d - 2, d - 2) + binomial(k + d - 3, d - 2));
}

struct LambdaValue {
  double value = 0.0;
  bool converged = true;
  int panels = 0;
};

namespace detail {

inline double lambda_prefactor(int d) {
  return std::tgamma(d / 2.0) / (std::sqrt(std::numbers::pi) * std::tgamma((d - 1) / 2.0));
}

/// 2·c_d ∫_0^{π/2} cos^p θ sin^{d-2} θ P_{k,d}(cos θ) dθ on `panels` panels.
inline double lambda_panels(int d, double p, int k, int panels) {
  using Q = boost::math::quadrature::gauss<double, 30>;
  auto f = [&](double th) {
    const double c = std::cos(th);
    const double s = std::sin(th);
    return std::pow(std::max(c, 0.0), p) * std::pow(s, d - 2) * legendre_P(k, d, c);
  };
  const double h = (std::numbers::pi / 2.0) / panels;
  double acc = 0.0;
  for (int i = 0; i < panels; ++i) acc += Q::integrate(f, i * h, (i + 1) * h);
  return 2.0 * lambda_prefactor(d) * acc;
}

}  // namespace detail

/// Funk–Hecke eigenvalue of |<u,x>|^p at degree k.  The kink at t=0 sits on
/// a panel boundary; panels double from `min_panels` until two successive
/// values agree to 1e-14.
inline LambdaValue lambda_k(int d, double p, int k, int min_panels = 4) {
  if (d < 2 || k < 0 || p <= 0.0) throw InputError("lambda_k requires d >= 2, k >= 0, p > 0");
  LambdaValue out;
  if (k % 2 == 1) return out;  // odd degrees vanish by symmetry
  int panels = std::max(min_panels, k / 4 + 4);
  double prev = detail::lambda_panels(d, p, k, panels);
  for (int it = 0; it < 8; ++it) {
    panels *= 2;
    const double cur = detail::lambda_panels(d, p, k, panels);
    const double diff = std::abs(cur - prev);
    prev = cur;
    if (diff <= 1e-14) break;
    if (it == 7 && diff > 1e-8) out.converged = false;
  }
  out.value = prev;
  out.panels = panels;
  return out;
}

inline std::vector<double> lambda_table(int d, double p, int K) {
  std::vector<double> t(static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k) t[static_cast<std::size_t>(k)] = lambda_k(d, p, k).value;
  return t;
}

/// Least-squares slope of log|λ_k| against log k over even k in [k_max/2, k_max].
inline double lambda_decay_check(int d, double p, int k_max) {
  std::vector<double> xs, ys;
  for (int k = std::max(2, k_max / 2); k <= k_max; ++k) {
    if (k % 2) continue;
    const double v = std::abs(lambda_k(d, p, k).value);
    if (v <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(k)));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 2) throw InputError("too few nonzero coefficients to fit a slope");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

/// ∫ |<u,x>|^p dσ(x) over the normalized sphere measure.
inline double beta_dp(int d, double p) { return lambda_k(d, p, 0).value; }

struct PackingFamily {
  Matrix points;  // n x d, unit rows on the cap around e_d
  double eta = 0.0;
  std::vector<std::vector<int>> subsets;
  bool complete = true;
};

/// Greedy eta-packing on the cap {y : <y, e_d> >= eta/2}, eta = c1·N^{-1/(d-1)}.
/// Points are also eta-separated from each other's antipodes.
inline PackingFamily build_packing(int d, std::size_t N, std::uint64_t seed, double c1 = 0.0) {
  if (d < 2 || N < 2) throw InputError("packing requires d >= 2 and N >= 2");
  if (c1 <= 0.0) c1 = d == 2 ? 2.0 * std::numbers::pi : 2.0;
  PackingFamily pf;
  pf.eta = c1 * std::pow(static_cast<double>(N), -1.0 / (d - 1));
  if (!(pf.eta < 2.0)) throw InputError("packing separation too large for N");
  std::vector<Vector> pts;
  if (d == 2) {
    const double lim = std::acos(pf.eta / 2.0);
    const double sep = 2.0 * std::asin(pf.eta / 2.0);
    const double step = sep / 64.0;
    double last = -10.0;
    for (double a = -lim; a <= lim; a += step) {
      if (a - last <= sep) continue;
      Vector v(2);
      v << std::sin(a), std::cos(a);
      pts.push_back(v);
      last = a;
    }
  } else {
    Rng rng(seed);
    NetIndex idx(Matrix(0, d), pf.eta);
    int misses = 0;
    while (misses < 5000) {
      Vector u = random_unit(d, rng);
      if (u[d - 1] < 0.0) u = -u;
      if (u[d - 1] < pf.eta / 2.0 || idx.any_within(u, pf.eta)) {
        ++misses;
        continue;
      }
      idx.add(u);
      pts.push_back(u);
      misses = 0;
    }
  }
  pf.points.resize(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i) pf.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return pf;
}

struct SubsetFamily {
  std::vector<std::vector<int>> subsets;
  bool complete = true;
};

/// Random subsets of size alpha·n with pairwise intersections <= beta·n,
/// by rejection sampling (at most 200 tries per accepted subset).
inline SubsetFamily build_subset_family(std::size_t n, double alpha, double beta, std::size_t count,
                                        std::uint64_t seed) {
  if (n == 0 || !(alpha > 0.0 && alpha <= 1.0) || !(beta >= 0.0))
    throw InputError("invalid subset family parameters");
  const auto size = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
  const auto cap = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n)));
  Rng rng(seed);
  SubsetFamily fam;
  std::vector<int> perm(n);
  std::vector<std::vector<char>> member;
  std::size_t tries = 0;
  while (fam.subsets.size() < count && tries < 200 * count) {
    ++tries;
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n - i));
      std::swap(perm[i], perm[std::min(j, n - 1)]);
    }
    std::vector<int> S(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(S.begin(), S.end());
    bool ok = true;
    for (const auto& m : member) {
      std::size_t inter = 0;
      for (int i : S) inter += static_cast<std::size_t>(m[static_cast<std::size_t>(i)]);
      if (inter > cap) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<char> m(n, 0);
    for (int i : S) m[static_cast<std::size_t>(i)] = 1;
    member.push_back(std::move(m));
    fam.subsets.push_back(std::move(S));
  }
  fam.complete = fam.subsets.size() == count;
  return fam;
}

struct DeltaResult {
  double delta = 0.0;
  Vector argmax;
  std::size_t evaluations = 0;
};

namespace detail {

inline double weighted_diff(const Matrix& A, const Vector& wa, const Matrix& B, const Vector& wb,
                            double p, const Vector& x) {
  const Vector ia = A * x;
  const Vector ib = B * x;
  double s = 0.0;
  for (Eigen::Index i = 0; i < ia.size(); ++i) s += wa[i] * abs_pow(ia[i], p);
  for (Eigen::Index i = 0; i < ib.size(); ++i) s -= wb[i] * abs_pow(ib[i], p);
  return std::abs(s);
}

inline DeltaResult weighted_delta(const Matrix& A, const Vector& wa, const Matrix& B,
                                  const Vector& wb, double p, std::size_t budget,
                                  std::uint64_t seed) {
  const int d = static_cast<int>(A.cols());
  if (B.cols() != d) throw InputError("point sets differ in dimension");
  if (budget < 4) budget = 4;
  DeltaResult res;
  std::vector<Vector> dirs;
  if (d == 2) {
    // x and -x give the same value, so half the circle suffices.
    for (std::size_t j = 0; j < budget; ++j) {
      const double a = std::numbers::pi * static_cast<double>(j) / static_cast<double>(budget);
      Vector v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
  } else {
    Rng rng(seed);
    for (std::size_t j = 0; j < budget; ++j) dirs.push_back(random_unit(d, rng));
  }
  std::vector<double> vals(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t j) { vals[j] = weighted_diff(A, wa, B, wb, p, dirs[j]); });
  res.evaluations = dirs.size();

  std::vector<std::size_t> order(dirs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t top = std::min<std::size_t>(16, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) { return vals[a] > vals[b] || (vals[a] == vals[b] && a < b); });
  res.delta = vals[order[0]];
  res.argmax = dirs[order[0]];

  // Local ascent around the best net points.
  for (std::size_t t = 0; t < top; ++t) {
    const Vector& x0 = dirs[order[t]];
    if (d == 2) {
      const double a0 = std::atan2(x0[1], x0[0]);
      const double h = std::numbers::pi / static_cast<double>(budget);
      auto f = [&](double a) {
        Vector v(2);
        v << std::cos(a), std::sin(a);
        return weighted_diff(A, wa, B, wb, p, v);
      };
      double lo = a0 - h, hi = a0 + h;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      double c = hi - g * (hi - lo), e = lo + g * (hi - lo);
      double fc = f(c), fe = f(e);
      for (int it = 0; it < 60; ++it) {
        if (fc > fe) {
          hi = e;
          e = c;
          fe = fc;
          c = hi - g * (hi - lo);
          fc = f(c);
        } else {
          lo = c;
          c = e;
          fc = fe;
          e = lo + g * (hi - lo);
          fe = f(e);
        }
      }
      res.evaluations += 62;
      const double a = fc > fe ? c : e;
      const double v = std::max(fc, fe);
      if (v > res.delta) {
        res.delta = v;
        res.argmax = Vector(2);
        res.argmax << std::cos(a), std::sin(a);
      }
    } else {
      Rng rng(seed + 1 + t);
      Vector x = x0;
      double fx = vals[order[t]];
      double step = 0.5 * std::pow(static_cast<double>(budget), -1.0 / (d - 1));
      for (int it = 0; it < 200 && step > 1e-9; ++it) {
        Vector y = x + step * random_unit(d, rng);
        y.normalize();
        const double fy = weighted_diff(A, wa, B, wb, p, y);
        ++res.evaluations;
        if (fy > fx) {
          x = y;
          fx = fy;
        } else {
          step *= 0.9;
        }
      }
      if (fx > res.delta) {
        res.delta = fx;
        res.argmax = x;
      }
    }
  }
  return res;
}

}  // namespace detail

/// sup_x (1/n)| ‖Ax‖_p^p - ‖Bx‖_p^p | by a net of `direction_budget`
/// directions plus local ascent; a lower bound on the true supremum.
inline DeltaResult separation_delta(const Matrix& A, const Matrix& B, double p,
                                    std::size_t direction_budget, std::uint64_t seed = 0) {
  const double n = static_cast<double>(std::max(A.rows(), B.rows()));
  if (n == 0) return {};
  Vector wa = Vector::Constant(A.rows(), 1.0 / n);
  Vector wb = Vector::Constant(B.rows(), 1.0 / n);
  return detail::weighted_delta(A, wa, B, wb, p, direction_budget, seed);
}

/// Same supremum for points in the shell alpha <= ‖y‖ <= beta; evaluated on
/// the normalized directions with weights ‖y‖^p/n.
inline DeltaResult affine_separation_delta(const Matrix& A, const Matrix& B, double p, double alpha,
                                           double beta, std::size_t direction_budget,
                                           std::uint64_t seed = 0) {
  if (!(alpha > 0.0 && alpha <= beta && beta < std::pow((1.0 + std::sqrt(3.0)) / 2.0, 1.0 / p) * alpha))
    throw InputError("shell radii violate alpha <= beta < ((1+sqrt3)/2)^(1/p) alpha");
  const double n = static_cast<double>(std::max(A.rows(), B.rows()));
  if (n == 0) return {};
  auto split = [&](const Matrix& M, Matrix& dir, Vector& w) {
    dir.resize(M.rows(), M.cols());
    w.resize(M.rows());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double r = M.row(i).norm();
      if (r < alpha * (1 - 1e-12) || r > beta * (1 + 1e-12))
        throw InputError("point outside the shell alpha <= |y| <= beta");
      dir.row(i) = M.row(i) / r;
      w[i] = std::pow(r, p) / n;
    }
  };
  Matrix da, db;
  Vector wa, wb;
  split(A, da, wa);
  split(B, db, wb);
  return detail::weighted_delta(da, wa, db, wb, p, direction_budget, seed);
}

}  // namespace subsketch
