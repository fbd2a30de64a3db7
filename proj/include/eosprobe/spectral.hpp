#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "eosprobe/param_vector.hpp"

namespace eosprobe::spectral {

/// Top-k eigenpairs of a symmetric operator, selected by absolute value and
/// reported sorted descending by signed value. Eigenvectors are orthonormal
/// and sign-fixed (largest-magnitude coordinate positive).
struct SpectralResult {
  std::vector<double> eigenvalues;
  std::vector<ParamVector> eigenvectors;
  std::vector<double> residuals;  // ||H h_i - lambda_i h_i||_2
  std::vector<bool> converged;    // per pair
  int iterations = 0;

  int k() const noexcept { return static_cast<int>(eigenvalues.size()); }
  bool all_converged() const noexcept {
    for (bool c : converged)
      if (!c) return false;
    return !converged.empty();
  }
};

using HvpFn = std::function<ParamVector(const ParamVector&)>;

/// Block (simultaneous) power iteration over HVPs: each sweep applies the
/// operator to a k-dimensional block, re-orthonormalizes by modified
/// Gram-Schmidt, and takes block Rayleigh quotients (Rayleigh-Ritz) as
/// eigenvalue estimates, which keeps clustered top eigenvalues resolvable.
/// A sweep's pairs count as converged when the relative eigenvalue change
/// since the previous sweep is below tol and the residual is below
/// tol*max(1,|lambda|). Non-convergence after max_iters is not an error:
/// the result comes back with converged flags for the caller to decide.
/// warm_start seeds the block with prior eigenvectors.
SpectralResult top_k_eigenpairs(const HvpFn& hvp, std::size_t n_params, int k,
                                double tol = 1e-6, int max_iters = 1000,
                                const std::vector<ParamVector>* warm_start = nullptr);

/// Largest eigenvalue below which eta_star is treated as undefined.
inline constexpr double kLambdaMin = 1e-12;

/// Maximum stable learning rate 2/lambda; undefined for near-zero or
/// negative curvature.
std::optional<double> eta_star(double lambda);

/// Stability ratio eta/eta_star.
double rho(double eta, double eta_star);

/// rho for a whole eigenvalue list; NaN where eta_star is undefined.
std::vector<double> rho_series(double eta, const std::vector<double>& eigenvalues);

/// Eigen-decomposition of a dense symmetric matrix (row-major n*n) by cyclic
/// Jacobi rotations; eigenvalues descending, eigenvectors as rows of `vecs`.
/// Used for the k*k Ritz projections and the built-in verify suite.
void jacobi_eigh(const std::vector<double>& sym, std::size_t n,
                 std::vector<double>& values, std::vector<double>& vectors);

}  // namespace eosprobe::spectral
