#pragma once

#include <cmath>
#include <vector>

#include "subsketch/types.hpp"

namespace subsketch {

struct WeightedSubset {
  std::vector<int> indices;
  std::vector<double> weights;  // sums to 1
  double probability = 0.0;
};

struct SubsetDistribution {
  std::vector<WeightedSubset> subsets;
  int ambient_dim = 0;
  Vector barycenter;
  bool fallback = false;  // pivoting failed and the trivial distribution was returned
};

namespace detail {

constexpr double kPivotTol = 1e-10;
constexpr double kNegClamp = 1e-12;

inline std::vector<int> support_of(const Vector& v) {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v[j] > 0.0) s.push_back(static_cast<int>(j));
  return s;
}

/// Moves v (a point of {v>=0, Σv=1, Σ v_j x_j = b}) to a vertex by repeatedly
/// stepping along a null direction of the lowest-indexed D+2 support columns.
inline bool to_vertex(const Matrix& pts, Vector& v, double pivot_tol) {
  const int D = static_cast<int>(pts.cols());
  for (;;) {
    std::vector<int> S = support_of(v);
    if (static_cast<int>(S.size()) <= D + 1) break;
    const int k = D + 2;
    Matrix M(D + 1, k);
    for (int c = 0; c < k; ++c) {
      M.block(0, c, D, 1) = pts.row(S[static_cast<std::size_t>(c)]).transpose();
      M(D, c) = 1.0;
    }
    Eigen::FullPivLU<Matrix> lu(M);
    lu.setThreshold(pivot_tol);
    Matrix ker = lu.kernel();
    if (ker.cols() == 0) return false;
    Vector z = ker.col(0);
    const double zmax = z.cwiseAbs().maxCoeff();
    if (!(zmax > 0.0) || !std::isfinite(zmax)) return false;
    z /= zmax;
    bool has_pos = false;
    for (int c = 0; c < k; ++c) has_pos = has_pos || z[c] > pivot_tol;
    if (!has_pos) z = -z;
    int arg = -1;
    double t = 0.0;
    for (int c = 0; c < k; ++c) {
      if (z[c] <= pivot_tol) continue;
      const double r = v[S[static_cast<std::size_t>(c)]] / z[c];
      if (arg < 0 || r < t) {  // strict: keeps the lowest index on ties
        t = r;
        arg = c;
      }
    }
    if (arg < 0) return false;
    for (int c = 0; c < k; ++c) v[S[static_cast<std::size_t>(c)]] -= t * z[c];
    v[S[static_cast<std::size_t>(arg)]] = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (v[j] < 0.0) v[j] = 0.0;  // entries below -kNegClamp are clamped too
    const double sum = v.sum();
    if (!(sum > 0.0)) return false;
    v /= sum;
  }
  return true;
}

inline WeightedSubset subset_from(const Vector& v, double prob) {
  WeightedSubset T;
  T.probability = prob;
  const double sum = v.sum();
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v[j] > 0.0) {
      T.indices.push_back(static_cast<int>(j));
      T.weights.push_back(v[j] / sum);
    }
  }
  return T;
}

inline SubsetDistribution trivial_distribution(const Vector& u) {
  SubsetDistribution dist;
  dist.subsets.push_back(subset_from(u, 1.0));
  return dist;
}

inline bool try_decompose(const Matrix& pts, const Vector& u, double pivot_tol,
                          SubsetDistribution& dist) {
  const int D = static_cast<int>(pts.cols());
  Vector r = u;
  double mass = 1.0;
  while (static_cast<int>(support_of(r).size()) > D + 1) {
    Vector v = r / mass;
    if (!to_vertex(pts, v, pivot_tol)) return false;
    // Largest step keeping the residual nonnegative; lowest index on ties.
    int arg = -1;
    double lam = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (v[j] <= 0.0) continue;
      const double q = r[j] / v[j];
      if (arg < 0 || q < lam) {
        lam = q;
        arg = static_cast<int>(j);
      }
    }
    if (arg < 0 || !(lam > 0.0)) return false;
    lam = std::min(lam, mass);
    dist.subsets.push_back(subset_from(v, lam));
    r -= lam * v;
    r[arg] = 0.0;
    mass -= lam;
    for (Eigen::Index j = 0; j < r.size(); ++j)
      if (r[j] <= kNegClamp * u[j]) r[j] = 0.0;  // round-off residue
    if (!(mass > 0.0)) break;
  }
  if (mass > 0.0 && r.sum() > 0.0) dist.subsets.push_back(subset_from(r, mass));
  // Guard against drift in Σp.
  double total = 0.0;
  for (const auto& T : dist.subsets) total += T.probability;
  if (!(total > 0.0)) return false;
  for (auto& T : dist.subsets) T.probability /= total;
  return true;
}

}  // namespace detail

/// Splits the weighted point set (rows of `pts`, weights `u` on the simplex)
/// into a distribution over subsets of size <= D+1, each with the same
/// barycenter, whose per-point expected weights recover u.
inline SubsetDistribution decompose(const Matrix& pts, const Vector& u) {
  if (pts.rows() != u.size()) throw InputError("point and weight counts differ");
  if (pts.rows() == 0) throw InputError("decompose needs at least one point");
  for (Eigen::Index j = 0; j < u.size(); ++j)
    if (!(u[j] >= 0.0)) throw InputError("weights must be nonnegative");
  const double us = u.sum();
  if (!(us > 0.0)) throw InputError("weights must not all vanish");
  Vector un = u / us;
  const int D = static_cast<int>(pts.cols());

  SubsetDistribution dist;
  if (static_cast<int>(pts.rows()) <= D + 1) {
    dist = detail::trivial_distribution(un);
  } else {
    bool ok = detail::try_decompose(pts, un, detail::kPivotTol, dist);
    if (!ok) {
      dist = SubsetDistribution{};
      ok = detail::try_decompose(pts, un, detail::kPivotTol * 1e-3, dist);
    }
    if (!ok) {
      dist = detail::trivial_distribution(un);
      dist.fallback = true;
    }
  }
  dist.ambient_dim = D;
  dist.barycenter = pts.transpose() * un;
  return dist;
}

inline const WeightedSubset& sample(const SubsetDistribution& dist, Rng& rng) {
  if (dist.subsets.empty()) throw InputError("cannot sample an empty distribution");
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const auto& T : dist.subsets) {
    acc += T.probability;
    if (u < acc) return T;
  }
  // Rounding left u above the running total; return the last subset with mass.
  for (auto it = dist.subsets.rbegin(); it != dist.subsets.rend(); ++it)
    if (it->probability > 0.0) return *it;
  return dist.subsets.back();
}

}  // namespace subsketch
