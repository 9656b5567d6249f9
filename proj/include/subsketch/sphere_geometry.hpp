#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subsketch/types.hpp"

namespace subsketch {

/// Unit vectors with pairwise distance > eta.
struct SphereNet {
  Matrix centers;  // m x d
  double eta = 0.0;
  bool maximal = false;

  int dim() const { return static_cast<int>(centers.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
};

/// Bucketed nearest-center lookup.  Ties within 1e-12 go to the lowest index.
class NetIndex {
 public:
  NetIndex() = default;
  explicit NetIndex(const Matrix& centers, double cell = 0.0) { reset(centers, cell); }

  void reset(const Matrix& centers, double cell) {
    centers_ = centers;
    buckets_.clear();
    cell_ = cell;
    brute_ = centers_.rows() < 64 || centers_.cols() > 6 || !(cell_ > 0.0) || cell_ >= 0.5;
    if (!brute_)
      for (Eigen::Index i = 0; i < centers_.rows(); ++i) insert_bucket(static_cast<int>(i));
  }

  void add(const Vector& c) {
    centers_.conservativeResize(centers_.rows() + 1, c.size());
    centers_.row(centers_.rows() - 1) = c.transpose();
    if (!brute_) insert_bucket(static_cast<int>(centers_.rows() - 1));
    else if (centers_.rows() >= 64 && centers_.cols() <= 6 && cell_ > 0.0 && cell_ < 0.5)
      reset(centers_, cell_);
  }

  std::size_t size() const { return static_cast<std::size_t>(centers_.rows()); }
  const Matrix& centers() const { return centers_; }

  /// Returns (index, distance) of the nearest center; (-1, inf) when empty.
  std::pair<int, double> nearest(const Vector& u) const {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    if (!brute_) {
      visit_neighbors(u, [&](int i) { consider(i, u, best, bd); });
      if (best >= 0 && std::sqrt(bd) <= cell_) return {best, std::sqrt(bd)};
      best = -1;
      bd = std::numeric_limits<double>::infinity();
    }
    for (Eigen::Index i = 0; i < centers_.rows(); ++i) consider(static_cast<int>(i), u, best, bd);
    return {best, std::sqrt(bd)};
  }

  /// True when some center lies within distance r (r <= cell).
  bool any_within(const Vector& u, double r) const {
    const double r2 = r * r;
    if (!brute_ && r <= cell_) {
      bool hit = false;
      visit_neighbors(u, [&](int i) {
        if (!hit && (centers_.row(i).transpose() - u).squaredNorm() <= r2) hit = true;
      });
      return hit;
    }
    for (Eigen::Index i = 0; i < centers_.rows(); ++i)
      if ((centers_.row(i).transpose() - u).squaredNorm() <= r2) return true;
    return false;
  }

 private:
  Matrix centers_;
  double cell_ = 0.0;
  bool brute_ = true;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;

  std::uint64_t key_of(const std::vector<std::int64_t>& c) const {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v + (1 << 20));
      h *= 1099511628211ull;
    }
    return h;
  }
  std::vector<std::int64_t> cell_of(const Vector& u) const {
    std::vector<std::int64_t> c(static_cast<std::size_t>(u.size()));
    for (Eigen::Index k = 0; k < u.size(); ++k)
      c[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::floor(u[k] / cell_));
    return c;
  }
  void insert_bucket(int i) {
    buckets_[key_of(cell_of(centers_.row(i).transpose()))].push_back(i);
  }
  template <class F>
  void visit_neighbors(const Vector& u, F&& f) const {
    const auto base = cell_of(u);
    const std::size_t d = base.size();
    std::vector<std::int64_t> off(d, -1), c(d);
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) c[k] = base[k] + off[k];
      auto it = buckets_.find(key_of(c));
      if (it != buckets_.end())
        for (int i : it->second) f(i);
      std::size_t k = 0;
      while (k < d && off[k] == 1) off[k++] = -1;
      if (k == d) break;
      ++off[k];
    }
  }
  void consider(int i, const Vector& u, int& best, double& bd) const {
    const double dd = (centers_.row(i).transpose() - u).squaredNorm();
    if (best < 0 || dd < bd - 1e-12) {
      best = i;
      bd = dd;
    } else if (std::abs(dd - bd) <= 1e-12 && i < best) {
      best = i;
      bd = std::min(bd, dd);
    }
  }
};

/// Greedy packing over candidates taken in order: accept a candidate iff it
/// is farther than eta from every accepted center.
inline SphereNet greedy_net(const std::vector<Vector>& candidates, double eta) {
  SphereNet net;
  net.eta = eta;
  if (candidates.empty()) return net;
  const int d = static_cast<int>(candidates[0].size());
  NetIndex idx(Matrix(0, d), eta);
  for (const auto& c : candidates) {
    Vector u = c / c.norm();
    if (!idx.any_within(u, eta)) idx.add(u);
  }
  net.centers = idx.centers();
  return net;
}

/// Maximal eta-separated set of unit vectors.  d=2 sweeps a fine angle grid
/// (rotated by a seeded offset when seed != 0); d>=3 packs seeded random
/// vectors until 20000 consecutive candidates are covered.
inline SphereNet build_net(int d, double eta, std::uint64_t seed) {
  if (d < 2) throw InputError("net requires d >= 2");
  if (!(eta > 0.0 && eta < 2.0)) throw InputError("net separation must lie in (0,2)");
  SphereNet net;
  net.eta = eta;
  Rng rng(seed);
  if (d == 2) {
    const double half = std::asin(std::min(1.0, eta / 2.0));  // chord eta <-> angle 2*half
    const double sep = 2.0 * half;
    const double step = sep / 64.0;
    const double off = seed == 0 ? 0.0 : uniform01(rng) * 2.0 * std::numbers::pi;
    std::vector<double> acc;
    const auto m = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / step));
    for (std::size_t j = 0; j < m; ++j) {
      double a = static_cast<double>(j) * step;
      if (!acc.empty()) {
        if (a - acc.back() <= sep) continue;
        if (acc.front() + 2.0 * std::numbers::pi - a <= sep) continue;
      }
      acc.push_back(a);
    }
    net.centers.resize(static_cast<Eigen::Index>(acc.size()), 2);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      net.centers(static_cast<Eigen::Index>(i), 0) = std::cos(acc[i] + off);
      net.centers(static_cast<Eigen::Index>(i), 1) = std::sin(acc[i] + off);
    }
    net.maximal = true;
    return net;
  }
  NetIndex idx(Matrix(0, d), eta);
  int misses = 0;
  while (misses < 20000) {
    Vector u = random_unit(d, rng);
    if (idx.any_within(u, eta)) {
      ++misses;
    } else {
      idx.add(u);
      misses = 0;
    }
  }
  net.centers = idx.centers();
  net.maximal = true;
  return net;
}

struct RegionAssignment {
  std::vector<int> region;  // -1 marks the null region (zero-norm points)
  Matrix centers;
  double radius_bound = 0.0;
};

inline RegionAssignment assign_regions(const Matrix& points, const SphereNet& net) {
  if (net.size() == 0) throw InputError("net must be nonempty");
  RegionAssignment ra;
  ra.centers = net.centers;
  ra.radius_bound = net.eta;
  NetIndex idx(net.centers, net.eta);
  ra.region.resize(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double n = points.row(i).norm();
    if (n == 0.0) {
      ra.region[static_cast<std::size_t>(i)] = -1;
      continue;
    }
    Vector u = points.row(i).transpose() / n;
    ra.region[static_cast<std::size_t>(i)] = idx.nearest(u).first;
  }
  return ra;
}

struct GroupPartition {
  std::vector<std::vector<int>> groups;
  std::vector<int> leftovers;
  std::vector<Vector> group_center;  // unit vector, or zero for the null region
  std::vector<double> group_radius;  // max distance of a member direction to the center
  double diameter_bound = 0.0;
  double eta = 0.0;
};

/// Normalized measure of a spherical cap of chord radius r, leading-order
/// constant.
inline double cap_constant(int d) {
  return std::tgamma(d / 2.0) / (2.0 * std::sqrt(std::numbers::pi) * std::tgamma((d + 1) / 2.0));
}

/// Region scale for grouping N points into s-point groups: about 2s points
/// fall into each net cell when N points are spread over the sphere.
inline double partition_eta(int d, int s, std::size_t N, double c1) {
  const double base = std::pow(4.0 * s / (cap_constant(d) * static_cast<double>(N)), 1.0 / (d - 1));
  return std::min(1.9, c1 * base);
}

/// Net-Voronoi grouping: regions in center order, members in input order,
/// sliced into consecutive s-point groups; remainders become leftovers, or a
/// short group when `min_partial` > 0 and at least that many remain.
/// `idx` selects which rows of `points` take part (all rows when empty).
inline GroupPartition group_partition(const Matrix& points, const std::vector<int>& idx, int s,
                                      std::size_t N, double c1, std::uint64_t seed,
                                      std::size_t min_partial = 0) {
  if (s < 2) throw InputError("group size must be >= 2");
  std::vector<int> members = idx;
  if (members.empty())
    for (Eigen::Index i = 0; i < points.rows(); ++i) members.push_back(static_cast<int>(i));
  if (static_cast<std::size_t>(s) > members.size())
    throw InputError("group size exceeds number of points");
  const int d = static_cast<int>(points.cols());
  GroupPartition gp;
  gp.eta = partition_eta(d, s, std::max<std::size_t>(N, 1), c1);
  gp.diameter_bound = 2.0 * gp.eta;
  SphereNet net = build_net(d, gp.eta, seed);
  NetIndex nidx(net.centers, net.eta);

  const auto m = net.size();
  std::vector<std::vector<int>> buckets(m + 1);
  for (int i : members) {
    const double n = points.row(i).norm();
    if (n == 0.0) {
      buckets[m].push_back(i);
      continue;
    }
    Vector u = points.row(i).transpose() / n;
    buckets[static_cast<std::size_t>(nidx.nearest(u).first)].push_back(i);
  }
  for (std::size_t r = 0; r <= m; ++r) {
    const auto& b = buckets[r];
    std::size_t full = b.size() / static_cast<std::size_t>(s) * static_cast<std::size_t>(s);
    const bool partial = min_partial > 0 && b.size() - full >= min_partial;
    if (partial) full = b.size();
    Vector c = r < m ? Vector(net.centers.row(static_cast<Eigen::Index>(r)).transpose())
                     : Vector::Zero(d);
    for (std::size_t g = 0; g < full; g += static_cast<std::size_t>(s)) {
      const std::size_t end = std::min(full, g + static_cast<std::size_t>(s));
      std::vector<int> grp(b.begin() + static_cast<std::ptrdiff_t>(g),
                           b.begin() + static_cast<std::ptrdiff_t>(end));
      double rad = 0.0;
      if (r < m)
        for (int i : grp)
          rad = std::max(rad, (points.row(i).transpose() / points.row(i).norm() - c).norm());
      gp.groups.push_back(std::move(grp));
      gp.group_center.push_back(c);
      gp.group_radius.push_back(rad);
    }
    gp.leftovers.insert(gp.leftovers.end(), b.begin() + static_cast<std::ptrdiff_t>(full), b.end());
  }
  return gp;
}

/// Conservative equator test: false guarantees every point within `radius`
/// of `center` has the same sign of <x, .>.
inline bool hyperplane_intersects(const Vector& center, double radius, const Vector& x) {
  if (radius < 0.0) throw InputError("radius must be nonnegative");
  return std::abs(x.dot(center)) <= radius * x.norm();
}

struct CapBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// κ_d r^{d-1}/(1-r²/2)·(1-r²/4)^{(d-1)/2} for both sides.
inline CapBounds cap_measure_bounds(int d, double r) {
  if (d < 2) throw InputError("cap bounds require d >= 2");
  if (!(r > 0.0) || r * r > 2.0 * (1.0 - 1.0 / std::sqrt(d + 1.0)))
    throw InputError("cap radius outside the validity range");
  const double v = cap_constant(d) * std::pow(r, d - 1) / (1.0 - r * r / 2.0) *
                   std::pow(1.0 - r * r / 4.0, (d - 1) / 2.0);
  return {v, v};
}

}  // namespace subsketch
