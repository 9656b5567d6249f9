#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>

#include "subsketch/types.hpp"

namespace subsketch {

/// Σ_i w_i |<A_i, x>|^p.
inline double exact_lp_power(const WeightedPointSet& P, const Vector& x) {
  if (x.size() != P.points.cols())
    throw InputError("query dimension does not match point dimension");
  const Vector ip = P.points * x;
  double s = 0.0;
  for (Eigen::Index i = 0; i < ip.size(); ++i)
    s += P.weights[i] * abs_pow(ip[i], P.p);
  return s;
}

/// Query directions used for error audits.  For d=2 a lattice of 2^k angles
/// (k minimal with 2^k >= 2π/resolution) plus 64 random directions; for
/// d>=3 ±e_i plus 2^k random directions with 2^k >= (2/resolution)^(d-1),
/// capped at 2^17.  Finer resolutions yield supersets for a fixed seed.
inline std::vector<Vector> measurement_directions(int d, double resolution,
                                                  std::uint64_t seed) {
  if (!(resolution > 0.0 && resolution < 1.0))
    throw InputError("net resolution must lie in (0,1)");
  if (d < 1) throw InputError("dimension must be positive");
  std::vector<Vector> dirs;
  Rng rng(seed);
  if (d == 1) {
    dirs.push_back(Vector::Constant(1, 1.0));
    dirs.push_back(Vector::Constant(1, -1.0));
    return dirs;
  }
  if (d == 2) {
    std::size_t m = 1;
    while (static_cast<double>(m) < 2.0 * std::numbers::pi / resolution) m <<= 1;
    dirs.reserve(m + 64);
    for (std::size_t j = 0; j < m; ++j) {
      double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
      Vector v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
    for (int j = 0; j < 64; ++j) dirs.push_back(random_unit(2, rng));
    return dirs;
  }
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  const double want = std::pow(2.0 / resolution, d - 1);
  std::size_t m = 1;
  while (static_cast<double>(m) < want && m < (std::size_t{1} << 17)) m <<= 1;
  for (std::size_t j = 0; j < m; ++j) dirs.push_back(random_unit(d, rng));
  return dirs;
}

struct NetErrorResult {
  double max_error = 0.0;
  std::size_t directions = 0;
};

/// max_x |sketch_eval(x) - exact(x)| over measurement_directions.
inline NetErrorResult sup_error_on_net(
    const WeightedPointSet& P, const std::function<double(const Vector&)>& sketch_eval,
    double net_resolution, std::uint64_t seed) {
  NetErrorResult r;
  const auto dirs = measurement_directions(P.dim(), net_resolution, seed);
  for (const auto& x : dirs) {
    double e = std::abs(sketch_eval(x) - exact_lp_power(P, x));
    r.max_error = std::max(r.max_error, e);
  }
  r.directions = dirs.size();
  return r;
}

/// Rescales weights to sum to one; returns the original total.
inline std::pair<WeightedPointSet, double> normalize_weights(const WeightedPointSet& P) {
  const double total = P.total_weight();
  if (!(total > 0.0)) throw InputError("cannot normalize all-zero weights");
  WeightedPointSet out = P;
  out.weights /= total;
  return {std::move(out), total};
}

}  // namespace subsketch
