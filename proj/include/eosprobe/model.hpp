#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "eosprobe/param_vector.hpp"

namespace eosprobe::model {

enum class Activation { relu, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Dense {
  int in = 0, out = 0;
};
struct Conv {
  int in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
};
struct MaxPool {
  int k = 0;
};
struct Flatten {};

using Layer = std::variant<Dense, Conv, MaxPool, Flatten>;

/// Architecture description sufficient to rebuild a network deterministically:
/// layer list, activation kind, class count and the initialization seed.
/// The activation follows every dense/conv layer except the last parametric
/// one. Parameters are laid out layer by layer, weights then biases; dense
/// weights are [out][in] row-major, conv weights [out_ch][in_ch][k][k].
struct ModelSpec {
  std::vector<Layer> layers;
  Activation activation = Activation::tanh;
  int n_c = 0;
  std::uint64_t seed = 0;
  // 0 selects the per-activation default: sqrt(2) for relu, 5/3 for tanh.
  double init_gain = 0.0;
};

std::size_t param_count(const ModelSpec& spec);

/// Walks the layer list from `input_shape`, checking that adjacent shapes
/// compose and that the final layer width equals n_c. Returns the shape after
/// each layer (input shape first).
std::vector<std::vector<int>> shape_chain(const ModelSpec& spec,
                                          const std::vector<int>& input_shape);

/// Kaiming-normal weights, std = gain / sqrt(fan_in); biases exactly zero.
/// fan_in is `in` for dense and in_ch*k*k for conv. Draws come from
/// MT19937-64 + Box-Muller seeded with spec.seed, in parameter layout order.
ParamVector init_kaiming(const ModelSpec& spec);

/// Plain forward pass to logits (length n_c). Reference path for inference
/// and tests; training uses the tape built by ad::LossGraph.
std::vector<double> forward(const ModelSpec& spec, const ParamVector& theta,
                            std::span<const double> x, const std::vector<int>& input_shape);

/// log-sum-exp(logits) - logits[label], max-shifted for stability.
double softmax_ce(std::span<const double> logits, int label);

/// Canonical structured-text form: fixed key order, one key=value per line,
/// so serialized specs are diffable. from_text accepts exactly this format.
std::string to_text(const ModelSpec& spec);
ModelSpec from_text(const std::string& text);

/// Small MLP: dense(input, hidden[0]) ... dense(hidden[last], n_c).
ModelSpec tiny_mlp(int input_dim, const std::vector<int>& hidden, int n_c,
                   Activation act, std::uint64_t seed);

/// Small convolutional net for {ch,h,w} inputs: two conv(3x3) stages with
/// 2x2 max-pooling, then flatten and two dense layers.
ModelSpec tiny_conv(const std::vector<int>& input_shape, int c1, int c2, int hidden,
                    int n_c, Activation act, std::uint64_t seed);

}  // namespace eosprobe::model
