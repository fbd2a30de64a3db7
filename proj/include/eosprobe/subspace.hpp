#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eosprobe/dataset.hpp"
#include "eosprobe/loss_graph.hpp"
#include "eosprobe/param_vector.hpp"
#include "eosprobe/spectral.hpp"

namespace eosprobe::subspace {

/// Split of a gradient along an eigenbasis: coordinates d_i = h_i . g for
/// every supplied eigenvector, the top component (span of the first k_top
/// eigenvectors) and the bulk remainder g - top.
struct GradientDecomposition {
  std::vector<double> coordinates;
  ParamVector top;
  ParamVector bulk;
  double top_norm = 0.0;
  double bulk_norm = 0.0;
};

/// k_top is the number of leading eigenvectors spanning the top subspace
/// (n_c - 1 in the usual convention; the caller decides). Eigenvectors are
/// checked for orthonormality and rejected if they fail.
GradientDecomposition decompose(const ParamVector& g, const spectral::SpectralResult& eig,
                                int k_top);

/// Order-2 Taylor prediction of the loss change for a step -eta*g expressed
/// in eigencoordinates: eta * sum_i d_i^2 (eta*lambda_i/2 - 1).
double taylor_delta(double eta, std::span<const double> d, std::span<const double> lambda);

/// Measured loss change from stepping only along `component`:
/// L(theta - eta*component) - L(theta). theta itself is never modified.
/// Returns nullopt when the perturbed loss is non-finite (divergent step).
std::optional<double> step_attribution(const ad::LossGraph& graph, const ParamVector& theta,
                                       const ParamVector& component, double eta,
                                       const data::LabeledDataset& d);

}  // namespace eosprobe::subspace
