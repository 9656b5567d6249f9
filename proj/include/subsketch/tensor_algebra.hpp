#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "subsketch/types.hpp"

namespace subsketch {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

/// Degree-p monomials in d variables, graded lexicographic (x1^p first),
/// with their multinomial coefficients.
struct MonomialBasis {
  int d = 0;
  int p = 0;
  std::vector<std::vector<int>> exponents;
  Vector multinomial;

  MonomialBasis(int d_, int p_) : d(d_), p(p_) {
    std::vector<int> a(static_cast<std::size_t>(d), 0);
    enumerate(a, 0, p);
    multinomial.resize(static_cast<Eigen::Index>(exponents.size()));
    for (std::size_t m = 0; m < exponents.size(); ++m) {
      double c = 1.0;
      int left = p;
      for (int i = 0; i < d; ++i) {
        c *= binomial(left, exponents[m][static_cast<std::size_t>(i)]);
        left -= exponents[m][static_cast<std::size_t>(i)];
      }
      multinomial[static_cast<Eigen::Index>(m)] = c;
    }
  }
  std::size_t size() const { return exponents.size(); }

 private:
  void enumerate(std::vector<int>& a, int i, int left) {
    if (i == d - 1) {
      a[static_cast<std::size_t>(i)] = left;
      exponents.push_back(a);
      return;
    }
    for (int e = left; e >= 0; --e) {
      a[static_cast<std::size_t>(i)] = e;
      enumerate(a, i + 1, left - e);
    }
  }
};

inline const MonomialBasis& monomial_basis(int d, int p) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{d, p}];
  if (!slot) slot = std::make_unique<MonomialBasis>(d, p);
  return *slot;
}

/// Number of slots of a symmetric p-tensor over R^d.
inline std::size_t sym_dim(int d, int p) {
  return static_cast<std::size_t>(binomial(d + p - 1, p));
}

/// Symmetric tensor stored by monomial; slot α holds Σ w ∏ x_i^{α_i}
/// without multinomial factors.
struct SymTensor {
  int d = 0;
  int p = 0;
  Vector coeffs;

  SymTensor() = default;
  SymTensor(int d_, int p_) : d(d_), p(p_), coeffs(Vector::Zero(static_cast<Eigen::Index>(sym_dim(d_, p_)))) {}

  SymTensor& operator+=(const SymTensor& o) {
    check_shape(o);
    coeffs += o.coeffs;
    return *this;
  }
  void check_shape(const SymTensor& o) const {
    if (d != o.d || p != o.p) throw InputError("tensor shape mismatch");
  }
};

/// Writes ∏ x_i^{α_i} for every monomial into `out` (length sym_dim).
inline void monomials_into(const MonomialBasis& B, const double* x, double* out) {
  const int d = B.d, p = B.p;
  double pw[64];
  // Powers table laid out [i*(p+1) + e]; falls back to heap for large d*p.
  std::vector<double> heap;
  double* tab = pw;
  if (static_cast<std::size_t>(d) * static_cast<std::size_t>(p + 1) > 64) {
    heap.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(p + 1));
    tab = heap.data();
  }
  for (int i = 0; i < d; ++i) {
    double* row = tab + i * (p + 1);
    row[0] = 1.0;
    for (int e = 1; e <= p; ++e) row[e] = row[e - 1] * x[i];
  }
  for (std::size_t m = 0; m < B.size(); ++m) {
    const auto& a = B.exponents[m];
    double v = 1.0;
    for (int i = 0; i < d; ++i) v *= tab[i * (p + 1) + a[static_cast<std::size_t>(i)]];
    out[m] = v;
  }
}

inline SymTensor tensor_power(const Vector& x, int p) {
  if (p < 1) throw InputError("tensor power requires p >= 1");
  const int d = static_cast<int>(x.size());
  SymTensor t(d, p);
  monomials_into(monomial_basis(d, p), x.data(), t.coeffs.data());
  return t;
}

inline SymTensor weighted_sum(const std::vector<SymTensor>& ts, const std::vector<double>& w) {
  if (ts.size() != w.size()) throw InputError("tensor and weight counts differ");
  if (ts.empty()) throw InputError("weighted_sum of no tensors");
  SymTensor out(ts[0].d, ts[0].p);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out.check_shape(ts[i]);
    out.coeffs += w[i] * ts[i].coeffs;
  }
  return out;
}

/// <x^{⊗p}, S> = Σ_α multinomial(α) S_α ∏ x_i^{α_i}.
inline double apply_direction(const SymTensor& S, const Vector& x) {
  if (x.size() != S.d) throw InputError("direction dimension does not match tensor");
  const auto& B = monomial_basis(S.d, S.p);
  Vector mono(static_cast<Eigen::Index>(B.size()));
  monomials_into(B, x.data(), mono.data());
  return (B.multinomial.array() * S.coeffs.array() * mono.array()).sum();
}

}  // namespace subsketch
