#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "subsketch/caratheodory.hpp"
#include "subsketch/core_model.hpp"
#include "subsketch/linear_rounding.hpp"
#include "subsketch/sphere_geometry.hpp"
#include "subsketch/tensor_algebra.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

enum class Loss : std::uint8_t { Abs = 0, Hinge = 1 };

struct CoresetSketch {
  WeightedPointSet base;
  int d = 0;
  double p = 1.0;
  double error_budget = 0.0;
  Loss loss = Loss::Abs;
  bool multiplicative = false;
  std::optional<Matrix> transform;  // rounding map used by multiplicative builds
  double distortion = 1.0;
  double mass_ratio = 1.0;  // direction mass over min_x of the direction sum; scales ε to a relative bound
  int rounds = 0;
  bool rank_deficient = false;  // rows do not span R^d; rounded inside their span

  std::size_t size() const { return base.size(); }
};

struct CoresetOptions {
  double c_size = 4.0;   // target-size constant
  double c1 = 1.0;       // partition scale
  Loss loss = Loss::Abs;
};

/// c_size·ε^{-2(d-1)/(d+2p)}·L^{(d-1)/(d+2p)}, L = max(ln(1/ε), 1).
inline double additive_target(int d, double p, double eps, double c_size = 4.0) {
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  const double e = (d - 1.0) / (d + 2.0 * p);
  const double L = std::max(std::log(1.0 / eps), 1.0);
  return c_size * std::pow(eps, -2.0 * e) * std::pow(L, e);
}

inline double loss_value(Loss loss, double ip, double p) {
  return loss == Loss::Hinge ? std::max(0.0, ip) : abs_pow(ip, p);
}

inline SketchReport query(const CoresetSketch& S, const Vector& x) {
  SketchReport r;
  r.multiplicative = S.multiplicative;
  r.additive_bound = S.error_budget;
  if (S.base.empty()) return r;
  if (x.size() != S.d) throw InputError("query dimension does not match sketch");
  const Vector ip = S.base.points * x;
  double s = 0.0;
  for (Eigen::Index i = 0; i < ip.size(); ++i) s += S.base.weights[i] * loss_value(S.loss, ip[i], S.p);
  r.estimate = s;
  return r;
}

struct HalveGroup {
  std::vector<int> members;       // input indices
  Vector center;
  double radius = 0.0;
  std::vector<int> kept;          // input indices of the sampled subset
  std::vector<double> kept_weights;
};

struct HalveOptions {
  double c1 = 1.0;
  std::size_t max_reduction = std::numeric_limits<std::size_t>::max();
  std::size_t min_partial = 0;  // > 0 lets short same-region groups of this size reduce
};

struct HalveResult {
  WeightedPointSet out;
  std::vector<HalveGroup> groups;
  std::size_t removed = 0;
  bool flagged = false;  // some decomposition fell back to the trivial split
};

/// Group size 2(D+1) for the symmetric tensor dimension D.
inline int halve_group_size(int d, int p) { return 2 * (static_cast<int>(sym_dim(d, p)) + 1); }

/// One halving round: light points are grouped by sphere region; each group
/// is replaced by a random Carathéodory subset that keeps its tensor sum in
/// expectation and exactly per subset.  Other points pass through.
inline HalveResult halve(const WeightedPointSet& P, Rng& rng, const HalveOptions& opt = {}) {
  if (!is_integer_p(P.p)) throw UnsupportedError("halving requires integer p");
  const int p = static_cast<int>(P.p);
  const int d = P.dim();
  const std::size_t N = P.size();
  const int s = halve_group_size(d, p);
  HalveResult res;
  res.out = P;
  const std::size_t min_group = opt.min_partial ? opt.min_partial : static_cast<std::size_t>(s);
  if (N < (opt.min_partial ? min_group : 2 * min_group) || d < 2) return res;

  const double mean = P.total_weight() / static_cast<double>(N);
  std::vector<int> light;
  for (std::size_t i = 0; i < N; ++i)
    if (P.weights[static_cast<Eigen::Index>(i)] <= 2.0 * mean) light.push_back(static_cast<int>(i));
  if (light.size() < min_group) return res;

  const std::uint64_t net_seed = rng();
  GroupPartition gp = group_partition(P.points, light, s, N, opt.c1, net_seed, opt.min_partial);
  const auto& B = monomial_basis(d, p);
  const auto D = static_cast<Eigen::Index>(B.size());

  std::vector<char> grouped(N, 0);
  std::vector<int> new_idx;
  std::vector<double> new_w;
  for (std::size_t g = 0; g < gp.groups.size(); ++g) {
    if (res.removed >= opt.max_reduction) break;
    std::vector<int> mem = gp.groups[g];
    // A generic decomposition keeps D+1 points, so a shortened group removes
    // about the remaining allowance; the cut-off members pass through.
    const std::size_t allowance = opt.max_reduction - res.removed;
    const auto keep = static_cast<std::size_t>(D) + 1;
    if (mem.size() > keep && mem.size() - keep > allowance) mem.resize(allowance + keep);
    HalveGroup hg;
    hg.members = mem;
    hg.center = gp.group_center[g];
    hg.radius = gp.group_radius[g];
    double W = 0.0;
    for (int i : mem) W += P.weights[i];
    if (W > 0.0) {
      Matrix T(static_cast<Eigen::Index>(mem.size()), D);
      Vector u(static_cast<Eigen::Index>(mem.size()));
      Vector row(d), mono(D);
      for (std::size_t k = 0; k < mem.size(); ++k) {
        row = P.points.row(mem[k]).transpose();
        monomials_into(B, row.data(), mono.data());
        T.row(static_cast<Eigen::Index>(k)) = mono.transpose();
        u[static_cast<Eigen::Index>(k)] = P.weights[mem[k]] / W;
      }
      SubsetDistribution dist = decompose(T, u);
      res.flagged = res.flagged || dist.fallback;
      const WeightedSubset& pick = sample(dist, rng);
      for (std::size_t k = 0; k < pick.indices.size(); ++k) {
        hg.kept.push_back(mem[static_cast<std::size_t>(pick.indices[k])]);
        hg.kept_weights.push_back(pick.weights[k] * W);
      }
    }
    for (int i : mem) grouped[static_cast<std::size_t>(i)] = 1;
    res.removed += mem.size() - hg.kept.size();
    new_idx.insert(new_idx.end(), hg.kept.begin(), hg.kept.end());
    new_w.insert(new_w.end(), hg.kept_weights.begin(), hg.kept_weights.end());
    res.groups.push_back(std::move(hg));
  }

  std::vector<int> pass;
  for (std::size_t i = 0; i < N; ++i)
    if (!grouped[i]) pass.push_back(static_cast<int>(i));
  const auto m = static_cast<Eigen::Index>(pass.size() + new_idx.size());
  WeightedPointSet out;
  out.p = P.p;
  out.points.resize(m, d);
  out.weights.resize(m);
  Eigen::Index r = 0;
  for (int i : pass) {
    out.points.row(r) = P.points.row(i);
    out.weights[r++] = P.weights[i];
  }
  for (std::size_t k = 0; k < new_idx.size(); ++k) {
    out.points.row(r) = P.points.row(new_idx[k]);
    out.weights[r++] = new_w[k];
  }
  res.out = std::move(out);
  return res;
}

/// Change in the estimate at x caused by the halving round, summed over the
/// groups selected by `which` (0 = all, 1 = only groups whose equator band
/// contains x, 2 = only groups it misses).  Computed group by group, so it
/// avoids cancellation against the full sum.
inline double halve_error_at(const WeightedPointSet& P, const HalveResult& hr, const Vector& x,
                             int which = 0, Loss loss = Loss::Abs) {
  double err = 0.0;
  for (const auto& g : hr.groups) {
    const bool hit = hyperplane_intersects(g.center, g.radius, x);
    if ((which == 1 && !hit) || (which == 2 && hit)) continue;
    double a = 0.0, b = 0.0;
    for (int i : g.members) a += P.weights[i] * loss_value(loss, P.points.row(i).dot(x), P.p);
    for (std::size_t k = 0; k < g.kept.size(); ++k)
      b += g.kept_weights[k] * loss_value(loss, P.points.row(g.kept[k]).dot(x), P.p);
    err += b - a;
  }
  return err;
}

/// Repeated halving down to the additive target size.  The last round only
/// reduces as many groups as needed.  A round removing less than 1/16 of the
/// points switches on short same-region groups; a second such round ends the
/// loop.
inline CoresetSketch build_additive(const WeightedPointSet& P, double eps, Rng& rng,
                                    const CoresetOptions& opt = {}) {
  CoresetSketch S;
  S.d = P.dim();
  S.p = P.p;
  S.loss = opt.loss;
  S.error_budget = eps;
  S.base = P;
  if (P.empty()) return S;
  if (!is_integer_p(P.p)) throw UnsupportedError("coreset construction requires integer p");
  const auto target = static_cast<std::size_t>(std::floor(additive_target(S.d, P.p, eps, opt.c_size)));
  const double total = P.total_weight();
  if (!(total > 0.0)) return S;
  WeightedPointSet cur = P;
  cur.weights /= total;
  HalveOptions ho;
  ho.c1 = opt.c1;
  while (cur.size() > std::max<std::size_t>(target, 1)) {
    const std::size_t need = cur.size() - target;
    ho.max_reduction = need;
    HalveResult hr = halve(cur, rng, ho);
    const std::size_t before = cur.size();
    cur = std::move(hr.out);
    ++S.rounds;
    if (hr.removed < std::min(need, before / 16 + 1)) {
      if (ho.min_partial) break;
      ho.min_partial = sym_dim(S.d, static_cast<int>(P.p)) + 2;
    }
  }
  cur.weights *= total;
  S.base = std::move(cur);
  return S;
}

/// Splits rows of A·T into unit directions with weights w_i‖(AT)_i‖^p,
/// builds the additive coreset on them, and maps rows back through T^{-1}.
inline CoresetSketch build_through_transform(const WeightedPointSet& A, const Matrix& T, double eps,
                                             Rng& rng, const CoresetOptions& opt = {}) {
  const int d = A.dim();
  const Matrix Ap = A.points * T;
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < Ap.rows(); ++i)
    if (Ap.row(i).norm() > 0.0 && A.weights[i] > 0.0) keep.push_back(static_cast<int>(i));
  WeightedPointSet dirs;
  dirs.p = A.p;
  dirs.points.resize(static_cast<Eigen::Index>(keep.size()), d);
  dirs.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(keep[k]);
    const double nrm = Ap.row(i).norm();
    dirs.points.row(static_cast<Eigen::Index>(k)) = Ap.row(i) / nrm;
    dirs.weights[static_cast<Eigen::Index>(k)] = A.weights[i] * std::pow(nrm, A.p);
  }
  CoresetSketch S = build_additive(dirs, eps, rng, opt);
  S.base.points = S.base.points * T.inverse();
  S.d = d;
  if (!dirs.empty()) {
    // Minimum over the span of the rows; zero off it for rank-deficient input.
    int r = 0;
    const Matrix V = detail::row_space(dirs.points, r);
    const auto ex = detail::lp_extremes(detail::scaled_rows(dirs.points * V, dirs.weights, A.p), A.p, 64, 0x5eed);
    const double fmin = std::pow(ex.fmin, A.p);
    S.mass_ratio = fmin > 0.0 ? dirs.total_weight() / fmin : std::numeric_limits<double>::infinity();
    S.error_budget = eps * S.mass_ratio;
  }
  return S;
}

/// (1±O(ε)) sketch for all x: round Z(A) first so that directions carry
/// comparable mass, then build through the rounding map.  Rows that do not
/// span R^d are rounded inside their span and the sketch is flagged.
inline CoresetSketch build_multiplicative(const WeightedPointSet& A, double eps, Rng& rng,
                                          const CoresetOptions& opt = {}) {
  if (A.empty()) throw InputError("multiplicative sketch needs at least one row");
  const RoundingTransform rt = john_round(A);
  CoresetSketch S = build_through_transform(A, rt.T, eps, rng, opt);
  S.multiplicative = true;
  S.rank_deficient = rt.rank_deficient;
  S.transform = rt.T;
  S.distortion = rt.distortion;
  return S;
}

}  // namespace subsketch
