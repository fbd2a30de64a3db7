#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eosprobe {

/// Pairwise (binary-counter) summation over a fixed-order sequence of scalars.
/// The reduction tree depends only on the number of terms, so results are
/// bit-identical for a given input sequence no matter how the terms were
/// produced (serial or chunked across threads).
class PairwiseScalarSum {
 public:
  void add(double x) {
    for (std::size_t lvl = 0;; ++lvl) {
      if (lvl == levels_.size()) {
        levels_.push_back(x);
        occupied_.push_back(true);
        return;
      }
      if (!occupied_[lvl]) {
        levels_[lvl] = x;
        occupied_[lvl] = true;
        return;
      }
      x = levels_[lvl] + x;
      occupied_[lvl] = false;
    }
  }

  double total() const {
    double s = 0.0;
    for (std::size_t lvl = 0; lvl < levels_.size(); ++lvl)
      if (occupied_[lvl]) s += levels_[lvl];
    return s;
  }

  void reset() {
    levels_.clear();
    occupied_.clear();
  }

 private:
  std::vector<double> levels_;
  std::vector<bool> occupied_;
};

/// Same binary-counter scheme for fixed-length vectors (per-example gradients
/// and HVPs). Keeps O(log n) temporaries instead of materializing all terms.
class PairwiseVectorSum {
 public:
  explicit PairwiseVectorSum(std::size_t dim) : dim_(dim) {}

  void add(std::span<const double> x) {
    scratch_.assign(x.begin(), x.end());
    std::vector<double>* cur = &scratch_;
    for (std::size_t lvl = 0;; ++lvl) {
      if (lvl == levels_.size()) {
        levels_.push_back(*cur);
        occupied_.push_back(true);
        return;
      }
      if (!occupied_[lvl]) {
        levels_[lvl] = *cur;
        occupied_[lvl] = true;
        return;
      }
      for (std::size_t i = 0; i < dim_; ++i) (*cur)[i] = levels_[lvl][i] + (*cur)[i];
      occupied_[lvl] = false;
    }
  }

  /// Folds the remaining partials (low level first) into `out`.
  void total(std::span<double> out) const {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = 0.0;
    for (std::size_t lvl = 0; lvl < levels_.size(); ++lvl)
      if (occupied_[lvl])
        for (std::size_t i = 0; i < dim_; ++i) out[i] += levels_[lvl][i];
  }

  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  std::vector<std::vector<double>> levels_;
  std::vector<bool> occupied_;
  std::vector<double> scratch_;
};

}  // namespace eosprobe
