#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace subsketch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Error categories map one-to-one onto CLI exit codes.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rows A_i with nonnegative weights w_i.  Row i of `points` is A_i.
struct WeightedPointSet {
  Matrix points;
  Vector weights;
  double p = 1.0;

  WeightedPointSet() = default;
  WeightedPointSet(Matrix pts, Vector w, double p_ = 1.0)
      : points(std::move(pts)), weights(std::move(w)), p(p_) {
    validate();
  }
  /// Unit weights.
  static WeightedPointSet uniform(Matrix pts, double p_ = 1.0) {
    Vector w = Vector::Ones(pts.rows());
    return WeightedPointSet(std::move(pts), std::move(w), p_);
  }

  int dim() const { return static_cast<int>(points.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  bool empty() const { return points.rows() == 0; }
  double total_weight() const { return weights.sum(); }
  bool normalized(double tol = 1e-9) const {
    return std::abs(total_weight() - 1.0) <= tol;
  }

  void validate() const {
    if (weights.size() != points.rows())
      throw InputError("weights length does not match number of points");
    if (p < 1.0) throw InputError("p must be >= 1");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      if (!(weights[i] >= 0.0)) throw InputError("weights must be nonnegative");
  }

  WeightedPointSet subset(const std::vector<int>& idx) const {
    Matrix pts(static_cast<Eigen::Index>(idx.size()), points.cols());
    Vector w(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      pts.row(static_cast<Eigen::Index>(k)) = points.row(idx[k]);
      w[static_cast<Eigen::Index>(k)] = weights[idx[k]];
    }
    WeightedPointSet out;
    out.points = std::move(pts);
    out.weights = std::move(w);
    out.p = p;
    return out;
  }
};

struct SketchReport {
  double estimate = 0.0;
  double additive_bound = 0.0;
  bool multiplicative = false;
};

/// Uniform double in [0,1) with 53 random bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Vector random_unit(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(d);
  double n = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = g(rng);
    n = v.norm();
  } while (n < 1e-12);
  return v / n;
}

inline double abs_pow(double v, double p) {
  double a = std::abs(v);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  return std::pow(a, p);
}

inline bool is_integer_p(double p) { return p == std::floor(p) && p >= 1.0; }

}  // namespace subsketch
