#pragma once

// Straightforward re-implementation of the forward pass used as an oracle for
// model::forward and the loss graph. Kept naive on purpose.

#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "eosprobe/model.hpp"
#include "eosprobe/param_vector.hpp"

namespace testsupport {

inline std::vector<double> reference_forward(const eosprobe::model::ModelSpec& spec,
                                             const eosprobe::ParamVector& theta,
                                             std::span<const double> x,
                                             const std::vector<int>& input_shape) {
  using namespace eosprobe::model;
  std::vector<double> cur(x.begin(), x.end());
  std::vector<int> shape = input_shape;
  std::size_t at = 0;

  std::size_t last_parametric = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li)
    if (std::holds_alternative<Dense>(spec.layers[li]) ||
        std::holds_alternative<Conv>(spec.layers[li]))
      last_parametric = li;

  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Layer& l = spec.layers[li];
    bool parametric = false;
    if (const auto* d = std::get_if<Dense>(&l)) {
      parametric = true;
      std::vector<double> next(static_cast<std::size_t>(d->out), 0.0);
      for (int j = 0; j < d->out; ++j) {
        double acc = 0.0;
        for (int i = 0; i < d->in; ++i)
          acc += theta[at + static_cast<std::size_t>(j * d->in + i)] * cur[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(j)] =
            acc + theta[at + static_cast<std::size_t>(d->in * d->out + j)];
      }
      at += static_cast<std::size_t>(d->in * d->out + d->out);
      cur = next;
      shape = {d->out};
    } else if (const auto* c = std::get_if<Conv>(&l)) {
      parametric = true;
      const int ih = shape[1], iw = shape[2];
      const int oh = (ih - c->kernel) / c->stride + 1;
      const int ow = (iw - c->kernel) / c->stride + 1;
      const std::size_t per_oc =
          static_cast<std::size_t>(c->in_ch) * static_cast<std::size_t>(c->kernel * c->kernel);
      std::vector<double> next(static_cast<std::size_t>(c->out_ch * oh * ow), 0.0);
      for (int oc = 0; oc < c->out_ch; ++oc)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            double acc = theta[at + per_oc * static_cast<std::size_t>(c->out_ch) +
                               static_cast<std::size_t>(oc)];
            for (int ic = 0; ic < c->in_ch; ++ic)
              for (int ky = 0; ky < c->kernel; ++ky)
                for (int kx = 0; kx < c->kernel; ++kx)
                  acc += theta[at + static_cast<std::size_t>(oc) * per_oc +
                               static_cast<std::size_t>((ic * c->kernel + ky) * c->kernel + kx)] *
                         cur[static_cast<std::size_t>(
                             (ic * ih + oy * c->stride + ky) * iw + ox * c->stride + kx)];
            next[static_cast<std::size_t>((oc * oh + oy) * ow + ox)] = acc;
          }
      at += per_oc * static_cast<std::size_t>(c->out_ch) + static_cast<std::size_t>(c->out_ch);
      cur = next;
      shape = {c->out_ch, oh, ow};
    } else if (const auto* m = std::get_if<MaxPool>(&l)) {
      const int ih = shape[1], iw = shape[2];
      const int oh = (ih - m->k) / m->k + 1;
      const int ow = (iw - m->k) / m->k + 1;
      std::vector<double> next(static_cast<std::size_t>(shape[0] * oh * ow));
      for (int ch = 0; ch < shape[0]; ++ch)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            double best = -1e300;
            for (int ky = 0; ky < m->k; ++ky)
              for (int kx = 0; kx < m->k; ++kx)
                best = std::max(best, cur[static_cast<std::size_t>(
                                          (ch * ih + oy * m->k + ky) * iw + ox * m->k + kx)]);
            next[static_cast<std::size_t>((ch * oh + oy) * ow + ox)] = best;
          }
      cur = next;
      shape = {shape[0], oh, ow};
    } else {
      int flat = 1;
      for (int d : shape) flat *= d;
      shape = {flat};
    }
    if (parametric && li != last_parametric) {
      for (auto& u : cur)
        u = spec.activation == Activation::relu ? (u > 0.0 ? u : 0.0) : std::tanh(u);
    }
  }
  return cur;
}

}  // namespace testsupport
