#include "eosprobe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eosprobe/errors.hpp"
#include "eosprobe/rng.hpp"

namespace eosprobe::spectral {

std::optional<double> eta_star(double lambda) {
  if (!(lambda > kLambdaMin)) return std::nullopt;
  return 2.0 / lambda;
}

double rho(double eta, double eta_star) { return eta / eta_star; }

std::vector<double> rho_series(double eta, const std::vector<double>& eigenvalues) {
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double l : eigenvalues) {
    const auto es = eta_star(l);
    out.push_back(es ? rho(eta, *es) : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

void jacobi_eigh(const std::vector<double>& sym, std::size_t n,
                 std::vector<double>& values, std::vector<double>& vectors) {
  if (sym.size() != n * n) throw SpectralError("jacobi_eigh: matrix size mismatch");
  std::vector<double> a = sym;
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    double diag = 0.0;
    for (std::size_t p = 0; p < n; ++p) diag += a[p * n + p] * a[p * n + p];
    if (off <= 1e-30 * std::max(1.0, diag)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a[r * n + p];
          const double arq = a[r * n + q];
          a[r * n + p] = c * arp - s * arq;
          a[r * n + q] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a[p * n + r];
          const double aqr = a[q * n + r];
          a[p * n + r] = c * apr - s * aqr;
          a[q * n + r] = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vpr = vectors[p * n + r];
          const double vqr = vectors[q * n + r];
          vectors[p * n + r] = c * vpr - s * vqr;
          vectors[q * n + r] = s * vpr + c * vqr;
        }
      }
    }
  }

  values.resize(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });
  std::vector<double> sorted_vecs(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = diag[order[i]];
    for (std::size_t r = 0; r < n; ++r) sorted_vecs[i * n + r] = vectors[order[i] * n + r];
  }
  vectors = std::move(sorted_vecs);
}

namespace {

/// Modified Gram-Schmidt in place. Near-zero columns (operator rank below
/// the block size) are re-seeded deterministically and re-orthogonalized.
void mgs_orthonormalize(std::vector<ParamVector>& basis, NormalSampler& rng) {
  const std::size_t n = basis.empty() ? 0 : basis[0].size();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (int attempt = 0;; ++attempt) {
      for (std::size_t j = 0; j < i; ++j) {
        const double c = dot(basis[j], basis[i]);
        axpy(-c, basis[j], basis[i]);
      }
      const double nrm = norm2(basis[i]);
      if (nrm > 1e-12) {
        scale(basis[i], 1.0 / nrm);
        break;
      }
      if (attempt > 4) throw SpectralError("block collapsed during orthonormalization");
      for (std::size_t r = 0; r < n; ++r) basis[i][r] = rng.normal();
    }
  }
}

void fix_sign(ParamVector& v) {
  std::size_t arg = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    if (m > best) {
      best = m;
      arg = i;
    }
  }
  if (v[arg] < 0.0) scale(v, -1.0);
}

}  // namespace

SpectralResult top_k_eigenpairs(const HvpFn& hvp, std::size_t n_params, int k,
                                double tol, int max_iters,
                                const std::vector<ParamVector>* warm_start) {
  if (k < 1) throw SpectralError("top_k_eigenpairs: k must be >= 1");
  if (static_cast<std::size_t>(k) > n_params)
    throw SpectralError("top_k_eigenpairs: k exceeds the parameter count");
  if (!(tol > 0.0)) throw SpectralError("top_k_eigenpairs: tol must be > 0");

  const std::size_t kk = static_cast<std::size_t>(k);
  NormalSampler rng(0x5eed5eedULL ^ (n_params * 2654435761ULL) ^ static_cast<std::uint64_t>(k));

  std::vector<ParamVector> basis;
  basis.reserve(kk);
  if (warm_start) {
    for (const auto& w : *warm_start) {
      if (w.size() != n_params) throw ShapeError("warm start vector length mismatch");
      basis.push_back(w);
      if (basis.size() == kk) break;
    }
  }
  while (basis.size() < kk) {
    ParamVector v(n_params);
    for (std::size_t i = 0; i < n_params; ++i) v[i] = rng.normal();
    basis.push_back(std::move(v));
  }
  mgs_orthonormalize(basis, rng);

  SpectralResult result;
  std::vector<double> prev_values;
  std::vector<ParamVector> ritz(kk), applied(kk);
  std::vector<double> tmat(kk * kk), tvals, tvecs;

  int sweep = 0;
  for (sweep = 1; sweep <= max_iters; ++sweep) {
    // Y = H X
    std::vector<ParamVector> y(kk);
    for (std::size_t i = 0; i < kk; ++i) {
      y[i] = hvp(basis[i]);
      if (y[i].size() != n_params) throw ShapeError("hvp returned wrong length");
      if (!y[i].all_finite())
        throw SpectralError("hvp returned non-finite values during power iteration");
    }

    // Rayleigh-Ritz on the block: T = X^T Y (symmetrized).
    for (std::size_t i = 0; i < kk; ++i)
      for (std::size_t j = 0; j < kk; ++j) tmat[i * kk + j] = dot(basis[i], y[j]);
    for (std::size_t i = 0; i < kk; ++i)
      for (std::size_t j = i + 1; j < kk; ++j) {
        const double m = 0.5 * (tmat[i * kk + j] + tmat[j * kk + i]);
        tmat[i * kk + j] = m;
        tmat[j * kk + i] = m;
      }
    jacobi_eigh(tmat, kk, tvals, tvecs);

    // Order Ritz pairs by |value| descending: the block tracks the dominant
    // |lambda| subspace, so pairing stays stable across sweeps.
    std::vector<std::size_t> order(kk);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ma = std::abs(tvals[a]), mb = std::abs(tvals[b]);
      if (ma != mb) return ma > mb;
      return tvals[a] > tvals[b];
    });

    std::vector<double> values(kk);
    for (std::size_t i = 0; i < kk; ++i) {
      const std::size_t oi = order[i];
      values[i] = tvals[oi];
      ParamVector vi(n_params), wi(n_params);
      for (std::size_t j = 0; j < kk; ++j) {
        axpy(tvecs[oi * kk + j], basis[j], vi);
        axpy(tvecs[oi * kk + j], y[j], wi);
      }
      ritz[i] = std::move(vi);
      applied[i] = std::move(wi);
    }

    std::vector<double> residuals(kk);
    for (std::size_t i = 0; i < kk; ++i) {
      ParamVector r = applied[i];
      axpy(-values[i], ritz[i], r);
      residuals[i] = norm2(r);
    }

    std::vector<bool> converged(kk, false);
    bool all = !prev_values.empty();
    for (std::size_t i = 0; i < kk; ++i) {
      const bool value_ok =
          !prev_values.empty() &&
          std::abs(values[i] - prev_values[i]) <= tol * std::max(1.0, std::abs(values[i]));
      const bool res_ok = residuals[i] <= tol * std::max(1.0, std::abs(values[i]));
      converged[i] = value_ok && res_ok;
      all = all && converged[i];
    }

    result.eigenvalues = values;
    result.residuals = residuals;
    result.converged = converged;
    result.iterations = sweep;
    prev_values = values;

    if (all) break;
    if (sweep == max_iters) break;

    // Next block: one power step applied to the Ritz vectors.
    basis = applied;
    mgs_orthonormalize(basis, rng);
  }

  // Report sorted descending by signed value.
  std::vector<std::size_t> order(kk);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.eigenvalues[a] > result.eigenvalues[b];
  });
  SpectralResult out;
  out.iterations = result.iterations;
  out.eigenvalues.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    const std::size_t oi = order[i];
    out.eigenvalues.push_back(result.eigenvalues[oi]);
    ParamVector v = ritz[oi];
    fix_sign(v);
    out.eigenvectors.push_back(std::move(v));
    out.residuals.push_back(result.residuals[oi]);
    out.converged.push_back(result.converged[oi]);
  }
  return out;
}

}  // namespace eosprobe::spectral
