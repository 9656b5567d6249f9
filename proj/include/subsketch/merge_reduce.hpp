#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "subsketch/coreset_engine.hpp"
#include "subsketch/types.hpp"

namespace subsketch {

struct MergeReduceOptions {
  double c_size = 4.0;
  std::size_t n_hint = 0;  // expected stream length; 2^20 when unknown
  CoresetOptions core;
};

/// One-pass coreset: block B_0 buffers raw rows; a full B_0 is merged with
/// B_1..B_{i-1} and reduced into the first empty B_i at budget ε/log n.
class MergeReduce {
 public:
  MergeReduce() = default;
  MergeReduce(int d, double p, double eps, std::uint64_t seed, const MergeReduceOptions& opt = {})
      : d_(d), p_(p), eps_(eps), opt_(opt), rng_(seed) {
    if (d < 1) throw InputError("dimension must be positive");
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    const double n = static_cast<double>(opt.n_hint ? opt.n_hint : (std::size_t{1} << 20));
    levels_ = static_cast<int>(std::ceil(std::log2(std::max(n, 2.0))));
    gamma_ = eps / levels_;
    capacity_ = static_cast<std::size_t>(std::ceil(additive_target(d, p, gamma_, opt.c_size)));
    capacity_ = std::max<std::size_t>(capacity_, static_cast<std::size_t>(d + 1));
    blocks_.resize(static_cast<std::size_t>(levels_ + 1));
    b0_.reserve(capacity_);
  }

  void ingest(const Vector& row, double weight = 1.0) {
    if (row.size() != d_) throw InputError("row dimension mismatch");
    if (b0_.size() >= capacity_) {
      std::size_t i = 1;
      while (i < blocks_.size() && blocks_[i]) ++i;
      if (i == blocks_.size()) blocks_.emplace_back();
      WeightedPointSet merged = concat(i);
      CoresetSketch R = reduce_sketch(merged, gamma_);
      level_budget_ = std::max(level_budget_, R.error_budget);
      blocks_[i] = std::move(R.base);
      ++reductions_;
      for (std::size_t j = 1; j < i; ++j) blocks_[j].reset();
      b0_.clear();
      b0w_.clear();
    }
    b0_.push_back(row);
    b0w_.push_back(weight);
    ++n_seen_;
    peak_rows_ = std::max(peak_rows_, retained_rows());
  }

  /// All retained rows (raw B_0 and reduced blocks) as one weighted set.
  WeightedPointSet snapshot() const { return concat(blocks_.size()); }

  CoresetSketch finalize() {
    CoresetSketch S;
    S.d = d_;
    S.p = p_;
    S.loss = opt_.core.loss;
    if (reductions_ == 0) {
      S.base = snapshot();
      return S;
    }
    S = reduce_sketch(snapshot(), eps_);
    final_budget_ = S.error_budget;
    S.error_budget = budget();
    return S;
  }

  /// Relative budget compounded over the levels and the final reduction,
  /// using the largest budget any reduction reported.  Before finalize() the
  /// final term is the nominal ε.
  double budget() const {
    if (reductions_ == 0) return 0.0;
    const double fin = final_budget_ > 0.0 ? final_budget_ : eps_;
    return std::pow(1.0 + level_budget_, levels_) * (1.0 + fin) - 1.0;
  }

  std::size_t retained_rows() const {
    std::size_t r = b0_.size();
    for (const auto& b : blocks_)
      if (b) r += b->size();
    return r;
  }
  std::size_t capacity() const { return capacity_; }
  std::size_t peak_rows() const { return peak_rows_; }
  std::size_t rows_seen() const { return n_seen_; }
  std::size_t reductions() const { return reductions_; }
  int levels() const { return levels_; }
  double gamma() const { return gamma_; }
  bool block_nonempty(std::size_t i) const {
    return i == 0 ? !b0_.empty() : (i < blocks_.size() && blocks_[i].has_value());
  }

 private:
  int d_ = 0;
  double p_ = 1.0;
  double eps_ = 0.1;
  MergeReduceOptions opt_;
  Rng rng_;
  int levels_ = 1;
  double gamma_ = 0.1;
  std::size_t capacity_ = 1;
  std::vector<Vector> b0_;
  std::vector<double> b0w_;
  std::vector<std::optional<WeightedPointSet>> blocks_;  // index 0 unused
  std::size_t n_seen_ = 0, peak_rows_ = 0, reductions_ = 0;
  double level_budget_ = 0.0, final_budget_ = 0.0;

  WeightedPointSet concat(std::size_t upto) const {
    std::size_t m = b0_.size();
    for (std::size_t j = 1; j < upto && j < blocks_.size(); ++j)
      if (blocks_[j]) m += blocks_[j]->size();
    WeightedPointSet out;
    out.p = p_;
    out.points.resize(static_cast<Eigen::Index>(m), d_);
    out.weights.resize(static_cast<Eigen::Index>(m));
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < b0_.size(); ++k) {
      out.points.row(r) = b0_[k].transpose();
      out.weights[r++] = b0w_[k];
    }
    for (std::size_t j = 1; j < upto && j < blocks_.size(); ++j) {
      if (!blocks_[j]) continue;
      const auto& b = *blocks_[j];
      out.points.middleRows(r, b.points.rows()) = b.points;
      out.weights.segment(r, b.weights.size()) = b.weights;
      r += b.points.rows();
    }
    return out;
  }

  /// Multiplicative build when the rows span R^d, else the direction split
  /// without rounding.
  CoresetSketch reduce_sketch(const WeightedPointSet& P, double budget) {
    int rank = 0;
    detail::row_space(detail::scaled_rows(P.points, P.weights, P.p), rank);
    if (rank == d_) return build_multiplicative(P, budget, rng_, opt_.core);
    return build_through_transform(P, Matrix::Identity(d_, d_), budget, rng_, opt_.core);
  }
};

}  // namespace subsketch
