#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "subsketch/sphere_geometry.hpp"
#include "subsketch/tensor_algebra.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

struct RegionOptions {
  bool tight = false;        // subdivide crowded regions instead of restarting them
  std::size_t n_hint = 0;    // stream length if known; doubling estimate otherwise
  double min_radius = 0.0;   // tight mode stops subdividing below this; 0 selects eps
};

struct Region {
  Vector q;               // Σ y^{⊗p} in the monomial basis
  std::uint64_t count = 0;
  Vector sample;          // reservoir sample (raw row)
  Vector center;          // unit vector
  double radius = 0.0;    // max distance of a member direction to the center
  double nominal = 0.0;   // cell scale of the partition that produced this region
  int level = 0;
  bool subdivided = false;
  Matrix child_centers;   // rows; only when subdivided
  std::vector<int> children;  // region ids, -1 until first use
};

/// Additive sketch of (1/n)‖Ax‖_p^p with O(1) work per row: tensor sums for
/// regions away from the query's equator, reservoir samples for the rest.
class RegionSketch {
 public:
  RegionSketch() = default;
  RegionSketch(int d, int p, double eps, std::uint64_t seed, const RegionOptions& opt = {})
      : d_(d), p_(p), eps_(eps), seed_(seed), opt_(opt), rng_(seed) {
    if (d < 2) throw InputError("region sketch requires d >= 2");
    if (p < 1) throw InputError("region sketch requires integer p >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0,1)");
    eta_ = std::pow(eps, 2.0 / (opt.tight ? d + 2.0 * p : d + 2.0 * p - 1.0));
    eta_ = std::min(eta_, 1.9);
    if (opt_.min_radius <= 0.0) opt_.min_radius = eps;
    slots_ = sym_dim(d, p);
    net_ = build_net(d, eta_, seed ^ 0x2545f4914f6cdd1dull);
    index_ = NetIndex(net_.centers, net_.eta);
    active_.assign(net_.size(), -1);
  }

  void ingest(const Vector& row) {
    if (row.size() != d_) throw InputError("row dimension mismatch");
    const double nrm = row.norm();
    if (nrm == 0.0) {
      ++ignored_;
      return;
    }
    const Vector u = row / nrm;
    SlotRef ref{-1, index_.nearest(u).first};
    if (slot(ref) < 0) {
      const int id = new_region(net_.centers.row(ref.idx).transpose(), eta_, 0);
      slot(ref) = id;
    }
    // Descend through subdivided regions.
    while (regions_[static_cast<std::size_t>(slot(ref))].subdivided) {
      const int pid = slot(ref);
      const Region& par = regions_[static_cast<std::size_t>(pid)];
      NetIndex local(par.child_centers, 0.0);
      const int c = local.nearest(u).first;
      SlotRef child{pid, c};
      if (slot(child) < 0) {
        const Vector cc = par.child_centers.row(c).transpose();
        const double nom = par.nominal / 2.0;
        const int lvl = par.level + 1;
        const int id = new_region(cc, nom, lvl);
        slot(child) = id;
      }
      ref = child;
    }
    const int id = slot(ref);
    Region& R = regions_[static_cast<std::size_t>(id)];
    const auto& B = monomial_basis(d_, p_);
    mono_.resize(static_cast<Eigen::Index>(slots_));
    monomials_into(B, row.data(), mono_.data());
    R.q += mono_;
    slot_updates_ += slots_;
    ++R.count;
    if (R.count == 1 || uniform01(rng_) * static_cast<double>(R.count) < 1.0) R.sample = row;
    R.radius = std::max(R.radius, (u - R.center).norm());
    ++n_seen_;
    if (static_cast<double>(R.count) > threshold()) split(id, ref);
  }

  /// Estimate of (1/n)·Σ|<a_i,x>|^p over all rows seen (zero rows included in n).
  double query(const Vector& x) const {
    if (x.size() != d_) throw InputError("query dimension mismatch");
    const std::size_t n = n_seen_ + ignored_;
    if (n == 0) return 0.0;
    return raw_query(x) / static_cast<double>(n);
  }

  double raw_query(const Vector& x) const {
    const auto& B = monomial_basis(d_, p_);
    Vector mono(static_cast<Eigen::Index>(slots_));
    monomials_into(B, x.data(), mono.data());
    const Vector wm = B.multinomial.cwiseProduct(mono);
    double total = 0.0;
    for (const auto& R : regions_) {
      if (R.count == 0) continue;
      if (!hyperplane_intersects(R.center, R.radius, x))
        total += std::abs(R.q.dot(wm));
      else
        total += abs_pow(R.sample.dot(x), p_) * static_cast<double>(R.count);
    }
    return total;
  }

  int dim() const { return d_; }
  int p() const { return p_; }
  double eps() const { return eps_; }
  double eta() const { return eta_; }
  std::uint64_t seed() const { return seed_; }
  bool tight() const { return opt_.tight; }
  std::size_t rows_seen() const { return n_seen_; }
  std::size_t ignored() const { return ignored_; }
  std::size_t slot_updates() const { return slot_updates_; }
  std::size_t slots_per_row() const { return slots_; }
  const std::vector<Region>& regions() const { return regions_; }
  std::size_t live_regions() const {
    std::size_t c = 0;
    for (const auto& R : regions_) c += R.count > 0;
    return c;
  }

  double threshold() const {
    double n = static_cast<double>(opt_.n_hint);
    if (opt_.n_hint == 0) {
      n = 1024.0;
      while (n < static_cast<double>(n_seen_)) n *= 2.0;
    }
    return std::max(1.0, std::pow(eta_, d_ - 1) * n);
  }

  // Serialization access.
  struct State {
    std::vector<Region> regions;
    std::vector<int> active;
    std::size_t n_seen = 0, ignored = 0, slot_updates = 0;
  };
  State state() const { return {regions_, active_, n_seen_, ignored_, slot_updates_}; }
  void restore(State st) {
    regions_ = std::move(st.regions);
    active_ = std::move(st.active);
    n_seen_ = st.n_seen;
    ignored_ = st.ignored;
    slot_updates_ = st.slot_updates;
  }
  const RegionOptions& options() const { return opt_; }

 private:
  int d_ = 2;
  int p_ = 1;
  double eps_ = 0.1;
  std::uint64_t seed_ = 0;
  RegionOptions opt_;
  Rng rng_;
  double eta_ = 0.1;
  std::size_t slots_ = 0;
  SphereNet net_;
  NetIndex index_;
  std::vector<int> active_;
  std::vector<Region> regions_;
  std::size_t n_seen_ = 0, ignored_ = 0, slot_updates_ = 0;
  Vector mono_;

  // Where a region id is stored: active_[idx] when parent < 0, else the
  // parent's children[idx].
  struct SlotRef {
    int parent;
    int idx;
  };
  int& slot(SlotRef r) {
    if (r.parent < 0) return active_[static_cast<std::size_t>(r.idx)];
    return regions_[static_cast<std::size_t>(r.parent)].children[static_cast<std::size_t>(r.idx)];
  }

  int new_region(const Vector& center, double nominal, int level) {
    Region R;
    R.q = Vector::Zero(static_cast<Eigen::Index>(slots_));
    R.center = center;
    R.nominal = nominal;
    R.level = level;
    R.sample = Vector::Zero(d_);
    regions_.push_back(std::move(R));
    return static_cast<int>(regions_.size() - 1);
  }

  /// Crowded region: tight mode subdivides at half the scale while above the
  /// minimum radius; otherwise later rows go to a fresh copy of the region.
  void split(int id, SlotRef ref) {
    const Region& R = regions_[static_cast<std::size_t>(id)];
    if (opt_.tight && R.nominal / 2.0 >= opt_.min_radius) {
      Matrix cc = child_net(R.center, R.nominal, static_cast<std::uint64_t>(id));
      Region& W = regions_[static_cast<std::size_t>(id)];
      W.subdivided = true;
      W.child_centers = std::move(cc);
      W.children.assign(static_cast<std::size_t>(W.child_centers.rows()), -1);
      return;
    }
    const Vector c = R.center;
    const double nom = R.nominal;
    const int lvl = R.level;
    const int fresh = new_region(c, nom, lvl);
    slot(ref) = fresh;
  }

  /// Greedy net of separation nominal/2 on the cap of radius 1.5·nominal.
  Matrix child_net(const Vector& center, double nominal, std::uint64_t salt) const {
    Rng r(seed_ * 0x9e3779b97f4a7c15ull + salt + 1);
    const double sep = nominal / 2.0;
    NetIndex idx(Matrix(0, d_), sep);
    idx.add(center);
    int misses = 0;
    while (misses < 300) {
      Vector g = random_unit(d_, r);
      g -= g.dot(center) * center;
      if (g.norm() < 1e-12) continue;
      g.normalize();
      const double rad = 1.5 * nominal * std::sqrt(uniform01(r));
      Vector v = (center + rad * g).normalized();
      if (idx.any_within(v, sep)) {
        ++misses;
      } else {
        idx.add(v);
        misses = 0;
      }
    }
    return idx.centers();
  }
};

/// Median over independent region sketches of the same stream.
class RegionEnsemble {
 public:
  RegionEnsemble(int d, int p, double eps, std::uint64_t seed, int replicas = 15,
                 const RegionOptions& opt = {}) {
    if (replicas < 1) throw InputError("need at least one replica");
    for (int r = 0; r < replicas; ++r)
      sketches_.emplace_back(d, p, eps, seed + static_cast<std::uint64_t>(r), opt);
  }
  void ingest(const Vector& row) {
    for (auto& s : sketches_) s.ingest(row);
  }
  double query(const Vector& x) const {
    std::vector<double> v;
    v.reserve(sketches_.size());
    for (const auto& s : sketches_) v.push_back(s.query(x));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  }
  const std::vector<RegionSketch>& sketches() const { return sketches_; }
  std::vector<RegionSketch>& sketches() { return sketches_; }

 private:
  std::vector<RegionSketch> sketches_;
};

/// Median over replicas; used directly on deserialized sketches.
inline double region_query_forall(const std::vector<RegionSketch>& reps, const Vector& x) {
  if (reps.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& s : reps) v.push_back(s.query(x));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace subsketch
