#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "subsketch/types.hpp"

namespace subsketch {

struct RoundingTransform {
  Matrix T;                // d x d, invertible when rank == d
  double distortion = 1.0; // max/min of ‖ATx‖_p over sampled unit x
  int rank = 0;
  bool rank_deficient = false;
  bool certified = false;  // target sandwich factor reached
  int iterations = 0;
  Matrix basis;            // d x rank orthonormal row-space basis
  Matrix reduced;          // rank x rank transform acting in that basis
};

namespace detail {

inline Matrix scaled_rows(const Matrix& A, const Vector& w, double p) {
  Matrix M = A;
  for (Eigen::Index i = 0; i < M.rows(); ++i) M.row(i) *= std::pow(w[i], 1.0 / p);
  return M;
}

inline double lp_norm(const Vector& v, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += abs_pow(v[i], p);
  return std::pow(s, 1.0 / p);
}

/// Gradient of u -> ‖Bu‖_p (any subgradient at kinks).
inline Vector lp_grad(const Matrix& B, const Vector& u, double p) {
  const Vector y = B * u;
  const double n = lp_norm(y, p);
  if (n == 0.0) return Vector::Zero(u.size());
  Vector psi(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double a = std::abs(y[i]);
    psi[i] = (y[i] > 0 ? 1.0 : (y[i] < 0 ? -1.0 : 0.0)) * (p == 1.0 ? 1.0 : std::pow(a, p - 1.0));
  }
  return B.transpose() * psi / std::pow(n, p - 1.0);
}

struct Extremes {
  double fmax = 0.0, fmin = std::numeric_limits<double>::infinity();
  Vector umax, umin;
};

/// Max and min of ‖Bu‖_p over unit u: sampled starts refined by ascent
/// (fixed-point iteration u <- ∇f/‖∇f‖) and projected descent.
inline Extremes lp_extremes(const Matrix& B, double p, int samples, std::uint64_t seed) {
  const int d = static_cast<int>(B.cols());
  Rng rng(seed);
  std::vector<Vector> starts;
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    starts.push_back(e);
  }
  for (int j = 0; j < samples; ++j) starts.push_back(random_unit(d, rng));
  std::vector<double> vals(starts.size());
  for (std::size_t j = 0; j < starts.size(); ++j) vals[j] = lp_norm(B * starts[j], p);
  std::vector<std::size_t> ord(starts.size());
  for (std::size_t j = 0; j < ord.size(); ++j) ord[j] = j;
  Extremes ex;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  const std::size_t top = std::min<std::size_t>(4, ord.size());
  for (std::size_t t = 0; t < top; ++t) {
    Vector u = starts[ord[t]];
    double f = vals[ord[t]];
    for (int it = 0; it < 50; ++it) {
      Vector g = lp_grad(B, u, p);
      const double gn = g.norm();
      if (gn == 0.0) break;
      Vector v = g / gn;
      const double fv = lp_norm(B * v, p);
      if (fv <= f * (1 + 1e-13)) {
        if (fv > f) { u = v; f = fv; }
        break;
      }
      u = v;
      f = fv;
    }
    if (f > ex.fmax) { ex.fmax = f; ex.umax = u; }
  }
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  for (std::size_t t = 0; t < top; ++t) {
    Vector u = starts[ord[t]];
    double f = vals[ord[t]];
    double step = 0.25;
    for (int it = 0; it < 200 && step > 1e-10; ++it) {
      Vector g = lp_grad(B, u, p);
      g -= g.dot(u) * u;  // tangent component
      const double gn = g.norm();
      if (gn == 0.0) break;
      Vector v = (u - step * g / gn).normalized();
      const double fv = lp_norm(B * v, p);
      if (fv < f) { u = v; f = fv; } else { step *= 0.5; }
    }
    if (f < ex.fmin) { ex.fmin = f; ex.umin = u; }
  }
  return ex;
}

/// Orthonormal basis (d x r) of the row space of M.
inline Matrix row_space(const Matrix& M, int& rank) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = (s.size() ? s[0] : 0.0) * 1e-10 * std::max<double>(1, static_cast<double>(std::max(M.rows(), M.cols())));
  rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  return svd.matrixV().leftCols(rank);
}

/// Full-rank rounding of the n x r matrix M.
inline Matrix round_full_rank(const Matrix& M, double p, double target, RoundingTransform& out) {
  const Eigen::Index n = M.rows();
  const int d = static_cast<int>(M.cols());
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  Matrix Rinv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
  Matrix U = M * Rinv;
  if (p == 2.0) {
    out.distortion = 1.0;
    out.certified = true;
    return Rinv;
  }
  const double R0 = std::pow(static_cast<double>(n), std::max(0.5 - 1.0 / p, 0.0));
  Matrix P = Matrix::Identity(d, d) * R0 * R0;
  Extremes ex;
  int it = 0;
  for (; it < 2000; ++it) {
    Eigen::LLT<Matrix> llt(P);
    Matrix L = llt.matrixL();
    ex = lp_extremes(U * L, p, 32, 0x5eed + static_cast<std::uint64_t>(it));
    if (ex.fmax / ex.fmin <= target) break;
    if (d == 1) break;
    const Vector y = L * ex.umax;
    const Vector g = lp_grad(U, y, p);
    const double sig2 = g.dot(P * g);
    const double a2 = 1.0 / sig2;
    if (a2 >= 1.0 / d) break;  // no volume-reducing cut at this point
    const Vector Pg = P * g;
    P = (d * (1.0 - a2) / (d - 1.0)) * (P - ((1.0 - d * a2) / (1.0 - a2)) * (Pg * Pg.transpose()) / sig2);
    P = 0.5 * (P + P.transpose());
  }
  Eigen::LLT<Matrix> llt(P);
  Matrix L = llt.matrixL();
  ex = lp_extremes(U * L, p, 256, 0xfeed);
  out.iterations = it;
  out.distortion = ex.fmax / ex.fmin;
  out.certified = out.distortion <= target;
  return Rinv * L / ex.fmax;
}

}  // namespace detail

/// Rounds Z(A) = {x : Σ w_i|<A_i,x>|^p <= 1} so that ‖ATx‖_p lies in
/// [1/distortion, 1] for unit x.  Rank-deficient inputs are rounded inside
/// their row space and flagged; T is completed by the orthogonal complement.
inline RoundingTransform john_round(const WeightedPointSet& A) {
  const int d = A.dim();
  if (A.empty()) throw InputError("cannot round an empty point set");
  const double p = A.p;
  const Matrix M = detail::scaled_rows(A.points, A.weights, p);
  RoundingTransform out;
  Matrix V = detail::row_space(M, out.rank);
  if (out.rank == 0) throw NumericError("all rows are zero");
  const double target = std::sqrt(static_cast<double>(out.rank) * (out.rank + 1)) * 1.1;
  out.basis = V;
  out.reduced = detail::round_full_rank(M * V, p, target, out);
  if (out.rank == d) {
    out.T = V * out.reduced;
  } else {
    out.rank_deficient = true;
    out.certified = false;
    out.distortion = std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Matrix> svd(V.transpose(), Eigen::ComputeFullV);
    Matrix comp = svd.matrixV().rightCols(d - out.rank);
    out.T.resize(d, d);
    out.T << V * out.reduced, comp;
  }
  return out;
}

/// max/min of ‖ATx‖_p over `directions` random unit x plus ±e_i, each
/// refined by local ascent/descent.
inline double certify_rounding(const WeightedPointSet& A, const Matrix& T, int directions,
                               std::uint64_t seed) {
  const Matrix M = detail::scaled_rows(A.points, A.weights, A.p) * T;
  const auto ex = detail::lp_extremes(M, A.p, directions, seed);
  if (ex.fmin == 0.0) return std::numeric_limits<double>::infinity();
  return ex.fmax / ex.fmin;
}

struct ConditionedBasis {
  Matrix U;      // n x r
  Matrix T_map;  // r x d, A = U T_map
  Matrix right_inverse;  // d x r, T_map * right_inverse = I
  double alpha = 0.0;
  double beta = 0.0;
};

/// Measured ‖U‖_p (entrywise) and max ‖z‖_q/‖Uz‖_p over sampled z.
inline void measure_conditioning(ConditionedBasis& cb, double p, std::uint64_t seed = 7) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < cb.U.rows(); ++i)
    for (Eigen::Index j = 0; j < cb.U.cols(); ++j) s += abs_pow(cb.U(i, j), p);
  cb.alpha = std::pow(s, 1.0 / p);
  const double q = p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
  Rng rng(seed);
  const int r = static_cast<int>(cb.U.cols());
  cb.beta = 0.0;
  for (int k = 0; k < 1000 + 2 * r; ++k) {
    Vector z;
    if (k < 2 * r) {
      z = Vector::Zero(r);
      z[k / 2] = k % 2 ? -1.0 : 1.0;
    } else {
      z = random_unit(r, rng);
    }
    const double zq = std::isinf(q) ? z.cwiseAbs().maxCoeff() : detail::lp_norm(z, q);
    const double uz = detail::lp_norm(cb.U * z, p);
    if (uz > 0.0) cb.beta = std::max(cb.beta, zq / uz);
  }
}

/// A = U·T_map with U well conditioned: QR for p=2, the rounding transform
/// otherwise.  Rank-deficient A yields r = rank(A) columns.
inline ConditionedBasis well_conditioned_basis(const WeightedPointSet& A) {
  const double p = A.p;
  const Matrix M = detail::scaled_rows(A.points, A.weights, p);
  ConditionedBasis cb;
  if (p == 2.0) {
    int rank = 0;
    Matrix V = detail::row_space(M, rank);
    if (rank == 0) throw NumericError("all rows are zero");
    const int d = A.dim();
    Matrix Rr;
    if (rank == d) {
      Eigen::HouseholderQR<Matrix> qr(M);
      Rr = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
      for (int i = 0; i < d; ++i)
        if (Rr(i, i) < 0) Rr.row(i) *= -1.0;
      cb.T_map = Rr;
      cb.right_inverse = Rr.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
    } else {
      const Matrix MV = M * V;
      Eigen::HouseholderQR<Matrix> qr(MV);
      Rr = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
      for (int i = 0; i < rank; ++i)
        if (Rr(i, i) < 0) Rr.row(i) *= -1.0;
      cb.T_map = Rr * V.transpose();
      cb.right_inverse = V * Rr.triangularView<Eigen::Upper>().solve(Matrix::Identity(rank, rank));
    }
    cb.U = M * cb.right_inverse;
    cb.alpha = std::sqrt(static_cast<double>(rank));
    cb.beta = 1.0;
    return cb;
  }
  const RoundingTransform rt = john_round(A);
  const Matrix G = rt.basis * rt.reduced;  // d x r
  cb.U = M * G;
  cb.right_inverse = G;
  cb.T_map = rt.reduced.inverse() * rt.basis.transpose();
  measure_conditioning(cb, p);
  return cb;
}

/// Running state for online sensitivity bounds: an orthonormal basis of all
/// rows seen so far plus a conditioned map refreshed from a prefix summary.
class OnlineBasis {
 public:
  OnlineBasis() = default;
  OnlineBasis(int d, double p) : d_(d), p_(p), Q_(d, 0), G_(d, 0) {}

  /// Extends the row-space basis; returns true when the rank grew.
  bool observe(const Vector& a) {
    const double n = a.norm();
    if (n == 0.0) return false;
    Vector r = a - Q_ * (Q_.transpose() * a);
    r -= Q_ * (Q_.transpose() * r);
    if (r.norm() <= 1e-9 * n) return false;
    Q_.conservativeResize(d_, Q_.cols() + 1);
    Q_.col(Q_.cols() - 1) = r / r.norm();
    return true;
  }

  /// Recomputes the conditioned map from a weighted summary of the prefix.
  void refresh(const WeightedPointSet& prefix) {
    if (prefix.empty() || prefix.total_weight() <= 0.0) return;
    G_ = well_conditioned_basis(prefix).right_inverse;
  }

  int rank() const { return static_cast<int>(Q_.cols()); }
  double p() const { return p_; }
  const Matrix& row_basis() const { return Q_; }
  const Matrix& map() const { return G_; }

 private:
  int d_ = 0;
  double p_ = 1.0;
  Matrix Q_;
  Matrix G_;
};

/// Online sensitivity upper bound for row a against the rows seen so far:
/// 1 outside their span, else min(1, ‖G^T a‖_2^p).
inline double sensitivity_upper(const OnlineBasis& st, const Vector& a) {
  const double n = a.norm();
  if (n == 0.0) return 0.0;
  const Matrix& Q = st.row_basis();
  Vector r = a - Q * (Q.transpose() * a);
  if (r.norm() > 1e-9 * n) return 1.0;
  if (st.map().cols() == 0) return 1.0;
  return std::min(1.0, std::pow((st.map().transpose() * a).norm(), st.p()));
}

}  // namespace subsketch
