#pragma once

#include <cmath>
#include <vector>

#include "subsketch/harmonics.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

/// Truncation order (1/ε)^{1/p}·log^{1/p}(1/ε), at least 2.
inline int fourier_order(double p, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("eps must lie in (0,1)");
  const double k = std::pow(1.0 / eps, 1.0 / p) * std::pow(std::log(1.0 / eps), 1.0 / p);
  return std::max(2, static_cast<int>(std::ceil(k)));
}

/// Scale of the non-constant terms on the circle, fixed by matching a
/// singleton against the p=2 expansion, where truncation at K=2 is exact.
inline double fourier_calibration() {
  const double l0 = lambda_k(2, 2.0, 0).value;
  const double l2 = lambda_k(2, 2.0, 2).value;
  return (1.0 - l0) / l2;
}

/// Trigonometric moments of the weighted angles of 2-d rows.
class FourierSketch {
 public:
  FourierSketch() = default;
  FourierSketch(double p, int K) : p_(p), K_(K) {
    if (K < 0) throw InputError("truncation order must be nonnegative");
    if (!(p > 0.0)) throw InputError("p must be positive");
    C_.assign(static_cast<std::size_t>(K + 1), 0.0);
    S_.assign(static_cast<std::size_t>(K + 1), 0.0);
    lambda_ = lambda_table(2, p, K);
    scale_ = fourier_calibration();
  }

  void ingest(const Vector& row, double weight = 1.0) {
    if (row.size() != 2) throw UnsupportedError("Fourier sketch supports d = 2 only");
    const double r = row.norm();
    if (r == 0.0 || weight == 0.0) return;
    const double w = weight * std::pow(r, p_);
    total_ += w;
    const double c1 = row[0] / r, s1 = row[1] / r;
    double c = 1.0, s = 0.0;
    for (int k = 0; k <= K_; ++k) {
      C_[static_cast<std::size_t>(k)] += w * c;
      S_[static_cast<std::size_t>(k)] += w * s;
      const double cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = cn;
    }
  }

  /// Truncated series for Σ w_i |<a_i, x>|^p.
  double query(const Vector& x) const {
    if (x.size() != 2) throw UnsupportedError("Fourier sketch supports d = 2 only");
    const double r = x.norm();
    if (r == 0.0) return 0.0;
    const double c1 = x[0] / r, s1 = x[1] / r;
    double acc = lambda_[0] * C_[0];
    double c = 1.0, s = 0.0;
    for (int k = 1; k <= K_; ++k) {
      const double cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = cn;
      if (k % 2) continue;
      acc += scale_ * lambda_[static_cast<std::size_t>(k)] *
             (c * C_[static_cast<std::size_t>(k)] + s * S_[static_cast<std::size_t>(k)]);
    }
    return acc * std::pow(r, p_);
  }

  FourierSketch& operator+=(const FourierSketch& o) {
    if (o.K_ != K_ || o.p_ != p_) throw InputError("Fourier sketches differ in shape");
    for (std::size_t k = 0; k < C_.size(); ++k) {
      C_[k] += o.C_[k];
      S_[k] += o.S_[k];
    }
    total_ += o.total_;
    return *this;
  }

  double p() const { return p_; }
  int order() const { return K_; }
  double total() const { return total_; }
  double scale() const { return scale_; }
  const std::vector<double>& cos_moments() const { return C_; }
  const std::vector<double>& sin_moments() const { return S_; }
  const std::vector<double>& lambdas() const { return lambda_; }

  void restore(double p, int K, std::vector<double> C, std::vector<double> S, std::vector<double> lam,
               double scale, double total) {
    p_ = p;
    K_ = K;
    C_ = std::move(C);
    S_ = std::move(S);
    lambda_ = std::move(lam);
    scale_ = scale;
    total_ = total;
  }

 private:
  double p_ = 1.0;
  int K_ = 0;
  std::vector<double> C_, S_, lambda_;
  double scale_ = 2.0;
  double total_ = 0.0;
};

}  // namespace subsketch
