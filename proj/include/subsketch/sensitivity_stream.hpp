#pragma once

#include <algorithm>
#include <cmath>

#include "subsketch/linear_rounding.hpp"
#include "subsketch/merge_reduce.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

struct SensitivityOptions {
  double coarse_eps = 0.5;   // budget of the summary used for sensitivities
  double beta_scale = 0.0;   // oversampling β; 0 selects d·log(1/ε)/ε²
  double refresh_growth = 1.25;
  MergeReduceOptions mr;
};

/// Two-tier stream: a coarse merge-reduce summary drives online sensitivity
/// bounds τ_t; row t is kept with probability min(1, β τ_t) at weight
/// w/p_t and fed to an ε-budget merge-reduce.
class SensitivityStream {
 public:
  SensitivityStream(int d, double p, double eps, std::uint64_t seed, const SensitivityOptions& opt = {})
      : d_(d), p_(p), eps_(eps), opt_(opt), rng_(seed),
        coarse_(d, p, opt.coarse_eps, seed ^ 0x9e3779b97f4a7c15ull, opt.mr),
        fine_(d, p, eps, seed + 1, opt.mr),
        basis_(d, p) {
    beta_ = opt.beta_scale > 0.0 ? opt.beta_scale
                                 : d * std::max(std::log(1.0 / eps), 1.0) / (eps * eps);
  }

  void ingest(const Vector& row, double weight = 1.0) {
    const Vector scaled = row * std::pow(weight, 1.0 / p_);
    const double tau = sensitivity_upper(basis_, scaled);
    tau_sum_ += tau;
    ++t_;
    const double prob = std::min(1.0, beta_ * tau);
    if (prob > 0.0 && uniform01(rng_) < prob) {
      fine_.ingest(row, weight / prob);
      ++sampled_;
    }
    coarse_.ingest(row, weight);
    const bool grew = basis_.observe(scaled);
    if (grew || static_cast<double>(t_) >= next_refresh_) {
      basis_.refresh(coarse_.snapshot());
      ++refreshes_;
      next_refresh_ = std::max(static_cast<double>(t_ + 1), std::ceil(opt_.refresh_growth * t_));
    }
  }

  CoresetSketch finalize() {
    CoresetSketch S = fine_.finalize();
    S.multiplicative = true;
    S.error_budget = std::max(S.error_budget, eps_);
    return S;
  }

  std::size_t sampled() const { return sampled_; }
  std::size_t rows_seen() const { return t_; }
  double tau_sum() const { return tau_sum_; }
  double beta() const { return beta_; }
  std::size_t refreshes() const { return refreshes_; }
  std::size_t peak_rows() const { return coarse_.peak_rows() + fine_.peak_rows(); }

 private:
  int d_;
  double p_;
  double eps_;
  SensitivityOptions opt_;
  Rng rng_;
  MergeReduce coarse_, fine_;
  OnlineBasis basis_;
  double beta_ = 1.0;
  double tau_sum_ = 0.0;
  double next_refresh_ = 1.0;
  std::size_t t_ = 0, sampled_ = 0, refreshes_ = 0;
};

}  // namespace subsketch
