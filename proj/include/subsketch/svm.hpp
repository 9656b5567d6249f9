#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "subsketch/coreset_engine.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

/// Appends -1 to every row: Σ|<A_i,x> - b|^p = Σ|<(A_i,-1),(x,b)>|^p.
inline WeightedPointSet lift_affine(const WeightedPointSet& A) {
  WeightedPointSet out;
  out.p = A.p;
  out.weights = A.weights;
  out.points.resize(A.points.rows(), A.points.cols() + 1);
  out.points.leftCols(A.points.cols()) = A.points;
  out.points.col(A.points.cols()).setConstant(-1.0);
  return out;
}

/// Estimates H(θ,b) = mean_i max{0, b - θᵀu_i} from a coreset over the
/// lifted rows (-u_i, 1).
struct HingeSketch {
  CoresetSketch core;  // d+1 columns, weights summing to 1
  std::size_t count = 0;

  double query(const Vector& theta, double b) const {
    if (count == 0 || core.base.empty()) return 0.0;
    Vector y(theta.size() + 1);
    y.head(theta.size()) = theta;
    y[theta.size()] = b;
    return subsketch::query(core, y).estimate;
  }
};

/// Coreset of the uniformly weighted rows (-u_i, 1) in hinge mode.
inline HingeSketch build_hinge(const Matrix& U, double eps, Rng& rng, double c_size = 4.0) {
  HingeSketch h;
  h.count = static_cast<std::size_t>(U.rows());
  WeightedPointSet lifted;
  lifted.p = 1.0;
  lifted.points.resize(U.rows(), U.cols() + 1);
  lifted.points.leftCols(U.cols()) = -U;
  lifted.points.col(U.cols()).setConstant(1.0);
  lifted.weights = Vector::Constant(U.rows(), U.rows() ? 1.0 / static_cast<double>(U.rows()) : 0.0);
  CoresetOptions opt;
  opt.loss = Loss::Hinge;
  opt.c_size = c_size;
  h.core = build_additive(lifted, eps, rng, opt);
  h.core.d = static_cast<int>(U.cols()) + 1;
  return h;
}

struct SvmSketch {
  HingeSketch pos;  // built on  x_i with y_i = +1
  HingeSketch neg;  // built on -x_i with y_i = -1
  double lambda = 0.0;
  std::size_t n = 0, n_pos = 0, n_neg = 0;
  std::size_t presample = 0;
  double eps = 0.0;
  int d = 0;

  std::size_t size() const { return pos.core.size() + neg.core.size(); }
};

/// λ/2‖(θ,b)‖² + (1/n) Σ max{0, 1 - y_i(θᵀx_i + b)}.
inline double svm_query(const SvmSketch& S, const Vector& theta, double b) {
  if (S.n > 0 && theta.size() != S.d) throw InputError("theta dimension mismatch");
  double v = 0.5 * S.lambda * (theta.squaredNorm() + b * b);
  if (S.n == 0) return v;
  const double n = static_cast<double>(S.n);
  v += static_cast<double>(S.n_pos) / n * S.pos.query(theta, 1.0 - b);
  v += static_cast<double>(S.n_neg) / n * S.neg.query(theta, 1.0 + b);
  return v;
}

/// Exact objective, for audits.
inline double svm_objective(const Matrix& X, const std::vector<int>& y, double lambda,
                            const Vector& theta, double b) {
  double v = 0.5 * lambda * (theta.squaredNorm() + b * b);
  if (X.rows() == 0) return v;
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    s += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * (X.row(i).dot(theta) + b));
  return v + s / static_cast<double>(X.rows());
}

/// One pass over (x, y) rows: per-class reservoir of ceil(c/ε²) points,
/// then a hinge coreset of each reservoir.
class SvmBuilder {
 public:
  SvmBuilder(int d, double eps, double lambda, std::uint64_t seed, double presample_c = 8.0)
      : d_(d), eps_(eps), lambda_(lambda), rng_(seed) {
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    if (lambda < 0.0) throw InputError("lambda must be nonnegative");
    cap_ = static_cast<std::size_t>(std::ceil(presample_c / (eps * eps)));
  }

  void ingest(const Vector& x, int label) {
    if (x.size() != d_) throw InputError("row dimension mismatch");
    if (label != 1 && label != -1) throw InputError("labels must be -1 or +1");
    auto& res = label > 0 ? pos_ : neg_;
    auto& seen = label > 0 ? n_pos_ : n_neg_;
    ++seen;
    const Vector u = label > 0 ? Vector(x) : Vector(-x);
    if (res.size() < cap_) {
      res.push_back(u);
    } else {
      const auto j = static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(seen));
      if (j < cap_) res[j] = u;
    }
  }

  SvmSketch finalize() {
    SvmSketch S;
    S.lambda = lambda_;
    S.n_pos = n_pos_;
    S.n_neg = n_neg_;
    S.n = n_pos_ + n_neg_;
    S.presample = cap_;
    S.eps = eps_;
    S.d = d_;
    auto to_matrix = [&](const std::vector<Vector>& v) {
      Matrix M(static_cast<Eigen::Index>(v.size()), d_);
      for (std::size_t i = 0; i < v.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
      return M;
    };
    S.pos = build_hinge(to_matrix(pos_), eps_, rng_);
    S.neg = build_hinge(to_matrix(neg_), eps_, rng_);
    S.pos.count = n_pos_;
    S.neg.count = n_neg_;
    return S;
  }

 private:
  int d_;
  double eps_;
  double lambda_;
  Rng rng_;
  std::size_t cap_ = 0;
  std::vector<Vector> pos_, neg_;
  std::size_t n_pos_ = 0, n_neg_ = 0;
};

inline SvmSketch svm_build(const Matrix& X, const std::vector<int>& y, double eps, double lambda,
                           std::uint64_t seed) {
  SvmBuilder b(static_cast<int>(X.cols()), eps, lambda, seed);
  for (Eigen::Index i = 0; i < X.rows(); ++i) b.ingest(X.row(i).transpose(), y[static_cast<std::size_t>(i)]);
  return b.finalize();
}

}  // namespace subsketch
