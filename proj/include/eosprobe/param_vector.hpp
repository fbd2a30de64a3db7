#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "eosprobe/errors.hpp"

namespace eosprobe {

/// Flat vector of network weights. Gradients, Hessian-vector products and
/// eigenvectors all live in this coordinate system. Length is fixed by the
/// model; every binary operation checks it.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n) : v_(n, 0.0) {}
  explicit ParamVector(std::vector<double> v) : v_(std::move(v)) {}

  std::size_t size() const noexcept { return v_.size(); }
  bool empty() const noexcept { return v_.empty(); }

  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }

  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }

  std::span<double> span() noexcept { return {v_.data(), v_.size()}; }
  std::span<const double> span() const noexcept { return {v_.data(), v_.size()}; }

  const std::vector<double>& values() const noexcept { return v_; }

  void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

  bool all_finite() const noexcept {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool operator==(const ParamVector& o) const noexcept { return v_ == o.v_; }

 private:
  std::vector<double> v_;
};

inline void check_same_size(const ParamVector& a, const ParamVector& b, const char* where) {
  if (a.size() != b.size())
    throw ShapeError(std::string(where) + ": length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
}

inline double dot(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const ParamVector& a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  check_same_size(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(ParamVector& x, double alpha) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= alpha;
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "add");
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "sub");
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline ParamVector scaled(const ParamVector& a, double alpha) {
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
  return r;
}

}  // namespace eosprobe
