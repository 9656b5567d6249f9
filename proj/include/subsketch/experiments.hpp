#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>
#include <vector>

#include "subsketch/coreset_engine.hpp"
#include "subsketch/harmonics.hpp"
#include "subsketch/svm.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

/// Least-squares slope of log y against log x.
inline double fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("need at least two points to fit");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  return sxy / sxx;
}

/// n unit vectors with uniform angles on the circle (d=2) or uniform on S^{d-1}.
inline Matrix sphere_points(int d, std::size_t n, Rng& rng) {
  Matrix A(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    if (d == 2) {
      const double a = 2.0 * std::numbers::pi * uniform01(rng);
      A(static_cast<Eigen::Index>(i), 0) = std::cos(a);
      A(static_cast<Eigen::Index>(i), 1) = std::sin(a);
    } else {
      A.row(static_cast<Eigen::Index>(i)) = random_unit(d, rng).transpose();
    }
  }
  return A;
}

/// Points uniform in the unit ball labelled by a noisy halfspace.
inline void svm_points(int d, std::size_t n, Rng& rng, Matrix& X, std::vector<int>& y) {
  X.resize(static_cast<Eigen::Index>(n), d);
  y.resize(n);
  Vector normal = Vector::Zero(d);
  normal[0] = 1.0;
  if (d > 1) normal[1] = 0.3;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector u = random_unit(d, rng) * std::pow(uniform01(rng), 1.0 / d);
    X.row(static_cast<Eigen::Index>(i)) = u.transpose();
    const double s = u.dot(normal) + 0.1 + 0.2 * (uniform01(rng) - 0.5);
    y[i] = s > 0.0 ? 1 : -1;
  }
}

struct Report {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  double fitted = 0.0;
  double expected = 0.0;
};

inline void write_csv(const Report& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (std::size_t j = 0; j < r.header.size(); ++j) out << r.header[j] << ',';
  out << "fitted_exponent,expected_exponent\n";
  out << std::setprecision(10);
  for (const auto& row : r.rows) {
    for (double v : row) out << v << ',';
    out << r.fitted << ',' << r.expected << '\n';
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Additive coreset size against ε on uniform sphere input; exponent of ε.
inline Report coreset_scaling(int d, int p, const std::vector<double>& eps_grid, std::size_t n,
                              std::uint64_t seed) {
  Report r;
  r.header = {"eps", "n", "size", "target", "rounds", "seconds"};
  Rng gen(seed);
  const WeightedPointSet P = WeightedPointSet::uniform(sphere_points(d, n, gen), p);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    const double eps = eps_grid[i];
    Rng rng(seed + i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    const CoresetSketch S = build_additive(P, eps, rng);
    const double secs = seconds_since(t0);
    r.rows.push_back({eps, static_cast<double>(n), static_cast<double>(S.size()),
                      additive_target(d, p, eps), static_cast<double>(S.rounds), secs});
    xs.push_back(eps);
    ys.push_back(static_cast<double>(S.size()));
  }
  r.fitted = fit_loglog(xs, ys);
  r.expected = -2.0 * (d - 1.0) / (d + 2.0 * p);
  return r;
}

/// δ(N) for an even/odd split of the cap packing; exponent of N.
inline Report delta_scaling(int d, int p, const std::vector<std::size_t>& N_grid, std::uint64_t seed) {
  Report r;
  r.header = {"N", "points", "delta", "seconds"};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < N_grid.size(); ++i) {
    const std::size_t N = N_grid[i];
    const auto t0 = std::chrono::steady_clock::now();
    const PackingFamily pf = build_packing(d, N, seed + i);
    // Equal halves; an unmatched point alone would contribute order 1/n.
    const Eigen::Index m = pf.points.rows() / 2;
    Matrix A(m, d), B(m, d);
    for (Eigen::Index k = 0; k < 2 * m; ++k) {
      if (k % 2 == 0) A.row(k / 2) = pf.points.row(k);
      else B.row(k / 2) = pf.points.row(k);
    }
    const DeltaResult dr = separation_delta(A, B, p, 8 * N, seed + i);
    r.rows.push_back({static_cast<double>(N), static_cast<double>(pf.points.rows()), dr.delta,
                      seconds_since(t0)});
    xs.push_back(static_cast<double>(N));
    ys.push_back(dr.delta);
  }
  r.fitted = fit_loglog(xs, ys);
  r.expected = -(d + 2.0 * p) / (2.0 * (d - 1.0));
  return r;
}

/// λ_k for even k up to k_max; decay exponent of k.
inline Report lambda_report(int d, double p, int k_max) {
  Report r;
  r.header = {"d", "p", "k", "lambda", "converged"};
  for (int k = 0; k <= k_max; ++k) {
    const LambdaValue v = lambda_k(d, p, k);
    r.rows.push_back({static_cast<double>(d), p, static_cast<double>(k), v.value, v.converged ? 1.0 : 0.0});
  }
  r.fitted = lambda_decay_check(d, p, k_max);
  r.expected = -(d / 2.0 + p);
  return r;
}

/// SVM sketch size against ε; exponent of ε.
inline Report svm_scaling(int d, std::size_t n, const std::vector<double>& eps_grid, std::uint64_t seed) {
  Report r;
  r.header = {"eps", "n", "size", "presample", "seconds"};
  Rng gen(seed);
  Matrix X;
  std::vector<int> y;
  svm_points(d, n, gen, X, y);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    const double eps = eps_grid[i];
    const auto t0 = std::chrono::steady_clock::now();
    const SvmSketch S = svm_build(X, y, eps, 0.0, seed + i + 1);
    r.rows.push_back({eps, static_cast<double>(n), static_cast<double>(S.size()),
                      static_cast<double>(S.presample), seconds_since(t0)});
    xs.push_back(eps);
    ys.push_back(static_cast<double>(S.size()));
  }
  r.fitted = fit_loglog(xs, ys);
  r.expected = -2.0 * d / (d + 3.0);
  return r;
}

}  // namespace subsketch
