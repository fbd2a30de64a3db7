#include "eosprobe/subspace.hpp"

#include <cmath>

#include "eosprobe/errors.hpp"

namespace eosprobe::subspace {

namespace {
constexpr double kNormTol = 1e-8;
constexpr double kOrthoTol = 1e-7;
}  // namespace

GradientDecomposition decompose(const ParamVector& g, const spectral::SpectralResult& eig,
                                int k_top) {
  const int k = eig.k();
  if (k_top < 0 || k_top > k)
    throw Error("subspace", "k_top must lie in [0, k]");
  for (int i = 0; i < k; ++i) {
    check_same_size(g, eig.eigenvectors[static_cast<std::size_t>(i)], "decompose");
    const double n = norm2(eig.eigenvectors[static_cast<std::size_t>(i)]);
    if (std::abs(n - 1.0) > kNormTol)
      throw Error("subspace", "eigenvector " + std::to_string(i) + " is not unit length");
    for (int j = i + 1; j < k; ++j) {
      const double d = dot(eig.eigenvectors[static_cast<std::size_t>(i)],
                           eig.eigenvectors[static_cast<std::size_t>(j)]);
      if (std::abs(d) > kOrthoTol)
        throw Error("subspace", "eigenvectors " + std::to_string(i) + "," + std::to_string(j) +
                                    " are not orthogonal");
    }
  }

  GradientDecomposition out;
  out.coordinates.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    out.coordinates[static_cast<std::size_t>(i)] =
        dot(eig.eigenvectors[static_cast<std::size_t>(i)], g);

  out.top = ParamVector(g.size());
  for (int i = 0; i < k_top; ++i)
    axpy(out.coordinates[static_cast<std::size_t>(i)],
         eig.eigenvectors[static_cast<std::size_t>(i)], out.top);
  out.bulk = sub(g, out.top);
  out.top_norm = norm2(out.top);
  out.bulk_norm = norm2(out.bulk);
  return out;
}

double taylor_delta(double eta, std::span<const double> d, std::span<const double> lambda) {
  if (d.size() != lambda.size())
    throw Error("subspace", "taylor_delta: coordinate/eigenvalue length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s += d[i] * d[i] * (0.5 * eta * lambda[i] - 1.0);
  return eta * s;
}

std::optional<double> step_attribution(const ad::LossGraph& graph, const ParamVector& theta,
                                       const ParamVector& component, double eta,
                                       const data::LabeledDataset& d) {
  check_same_size(theta, component, "step_attribution");
  const double base = graph.eval_loss(theta, d);
  ParamVector moved = theta;
  axpy(-eta, component, moved);
  double perturbed;
  try {
    perturbed = graph.eval_loss(moved, d);
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
  if (!std::isfinite(perturbed)) return std::nullopt;
  return perturbed - base;
}

}  // namespace eosprobe::subspace
