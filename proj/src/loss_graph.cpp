#include "eosprobe/loss_graph.hpp"

#include <cmath>
#include <variant>

#include "eosprobe/errors.hpp"
#include "eosprobe/numerics.hpp"
#include "eosprobe/parallel.hpp"

namespace eosprobe::ad {

namespace {

// Examples reduce in 64-aligned chunks; chunk partials then reduce in chunk
// order. Both stages use the same pairwise tree, so the result depends only
// on n_D, never on the thread budget.
constexpr std::size_t kChunk = 64;

std::size_t flat_size(const std::vector<int>& s) {
  std::size_t r = 1;
  for (int d : s) r *= static_cast<std::size_t>(d);
  return s.empty() ? 0 : r;
}

}  // namespace

LossGraph::LossGraph(const model::ModelSpec& spec, const std::vector<int>& input_shape) {
  const auto chain = model::shape_chain(spec, input_shape);
  input_size_ = flat_size(input_shape);
  n_c_ = spec.n_c;
  n_params_ = model::param_count(spec);

  Tape& t = tape_;

  // Aux slots: [x | one-hot label]; HVP direction slots appended later.
  std::vector<NodeId> cur(input_size_);
  for (std::size_t i = 0; i < input_size_; ++i)
    cur[i] = t.aux(static_cast<std::uint32_t>(i));

  std::size_t last_parametric = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li)
    if (std::holds_alternative<model::Dense>(spec.layers[li]) ||
        std::holds_alternative<model::Conv>(spec.layers[li]))
      last_parametric = li;

  std::uint32_t at = 0;  // parameter slot cursor
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const model::Layer& l = spec.layers[li];
    const auto& in_shape = chain[li];
    const auto& out_shape = chain[li + 1];
    std::vector<NodeId> next(flat_size(out_shape));
    bool parametric = false;

    if (const auto* d = std::get_if<model::Dense>(&l)) {
      parametric = true;
      const std::uint32_t w0 = at;
      const std::uint32_t b0 = at + static_cast<std::uint32_t>(d->in * d->out);
      for (int j = 0; j < d->out; ++j) {
        NodeId acc = t.param(b0 + static_cast<std::uint32_t>(j));
        const std::uint32_t row = w0 + static_cast<std::uint32_t>(j * d->in);
        for (int i = 0; i < d->in; ++i)
          acc = t.fma(t.param(row + static_cast<std::uint32_t>(i)),
                      cur[static_cast<std::size_t>(i)], acc);
        next[static_cast<std::size_t>(j)] = acc;
      }
      at = b0 + static_cast<std::uint32_t>(d->out);
    } else if (const auto* c = std::get_if<model::Conv>(&l)) {
      parametric = true;
      const int ih = in_shape[1], iw = in_shape[2];
      const int oh = out_shape[1], ow = out_shape[2];
      const std::uint32_t w0 = at;
      const std::uint32_t per_oc =
          static_cast<std::uint32_t>(c->in_ch * c->kernel * c->kernel);
      const std::uint32_t b0 = w0 + per_oc * static_cast<std::uint32_t>(c->out_ch);
      for (int oc = 0; oc < c->out_ch; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            NodeId acc = t.param(b0 + static_cast<std::uint32_t>(oc));
            for (int ic = 0; ic < c->in_ch; ++ic) {
              for (int ky = 0; ky < c->kernel; ++ky) {
                for (int kx = 0; kx < c->kernel; ++kx) {
                  const std::uint32_t wi =
                      w0 + static_cast<std::uint32_t>(oc) * per_oc +
                      static_cast<std::uint32_t>((ic * c->kernel + ky) * c->kernel + kx);
                  const int iy = oy * c->stride + ky;
                  const int ix = ox * c->stride + kx;
                  const std::size_t xi =
                      (static_cast<std::size_t>(ic) * ih + iy) * static_cast<std::size_t>(iw) + ix;
                  acc = t.fma(t.param(wi), cur[xi], acc);
                }
              }
            }
            next[(static_cast<std::size_t>(oc) * oh + oy) * static_cast<std::size_t>(ow) + ox] = acc;
          }
        }
      }
      at = b0 + static_cast<std::uint32_t>(c->out_ch);
    } else if (const auto* m = std::get_if<model::MaxPool>(&l)) {
      const int ih = in_shape[1], iw = in_shape[2];
      const int oh = out_shape[1], ow = out_shape[2];
      for (int ch = 0; ch < in_shape[0]; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            NodeId best = 0;
            bool first = true;
            for (int ky = 0; ky < m->k; ++ky) {
              for (int kx = 0; kx < m->k; ++kx) {
                const int iy = oy * m->k + ky;
                const int ix = ox * m->k + kx;
                const NodeId v =
                    cur[(static_cast<std::size_t>(ch) * ih + iy) * static_cast<std::size_t>(iw) + ix];
                best = first ? v : t.max2(best, v);
                first = false;
              }
            }
            next[(static_cast<std::size_t>(ch) * oh + oy) * static_cast<std::size_t>(ow) + ox] = best;
          }
        }
      }
    } else {
      next = cur;
    }

    if (parametric && li != last_parametric) {
      if (spec.activation == model::Activation::relu)
        for (auto& id : next) id = t.relu(id);
      else
        for (auto& id : next) id = t.tanh(id);
    }
    cur = std::move(next);
  }

  // Softmax cross-entropy with a detached max shift:
  // loss = (m + log sum_j exp(z_j - m)) - sum_j onehot_j z_j.
  std::vector<NodeId> onehot(static_cast<std::size_t>(n_c_));
  for (int c = 0; c < n_c_; ++c)
    onehot[static_cast<std::size_t>(c)] =
        t.aux(static_cast<std::uint32_t>(input_size_ + static_cast<std::size_t>(c)));

  NodeId m = cur[0];
  for (std::size_t j = 1; j < cur.size(); ++j) m = t.max_shift(m, cur[j]);
  NodeId s = t.exp(t.sub(cur[0], m));
  for (std::size_t j = 1; j < cur.size(); ++j)
    s = t.add(s, t.exp(t.sub(cur[j], m)));
  NodeId zlab = t.zero();
  for (std::size_t j = 0; j < cur.size(); ++j) zlab = t.fma(onehot[j], cur[j], zlab);
  loss_id_ = t.sub(t.add(m, t.log(s)), zlab);

  if (t.param_slots() != n_params_)
    throw ModelError("internal: tape parameter slots disagree with param_count");
  extend_for_hvp();
}

LossGraph LossGraph::from_tape(Tape tape, NodeId loss, std::size_t input_size, int n_c) {
  if (n_c < 1) throw ModelError("from_tape: n_c must be >= 1");
  if (tape.aux_slots() > input_size + static_cast<std::size_t>(n_c))
    throw ModelError("from_tape: tape reads aux slots beyond x + one-hot layout");
  LossGraph g;
  g.tape_ = std::move(tape);
  g.loss_id_ = loss;
  g.n_params_ = g.tape_.param_slots();
  g.input_size_ = input_size;
  g.n_c_ = n_c;
  g.extend_for_hvp();
  return g;
}

void LossGraph::extend_for_hvp() {
  fwd_end_ = static_cast<std::size_t>(loss_id_) + 1;
  if (fwd_end_ > tape_.size()) throw ModelError("loss node outside tape");

  const std::vector<NodeId> grads = append_symbolic_gradient(tape_, loss_id_);
  const NodeId zero = tape_.zero();
  const std::uint32_t v0 = static_cast<std::uint32_t>(input_size_ + static_cast<std::size_t>(n_c_));
  NodeId acc = zero;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i] == zero) continue;
    acc = tape_.fma(grads[i], tape_.aux(v0 + static_cast<std::uint32_t>(i)), acc);
  }
  sdot_id_ = acc;
}

void LossGraph::check_inputs(const ParamVector& theta, const data::LabeledDataset& d) const {
  if (theta.size() != n_params_)
    throw ShapeError("parameter vector has length " + std::to_string(theta.size()) +
                     ", graph expects " + std::to_string(n_params_));
  if (d.n_examples() == 0) throw DataError("dataset is empty");
  if (d.input_size() != input_size_)
    throw ShapeError("dataset input size " + std::to_string(d.input_size()) +
                     ", graph expects " + std::to_string(input_size_));
  if (d.n_c != n_c_)
    throw ShapeError("dataset has n_c = " + std::to_string(d.n_c) + ", graph expects " +
                     std::to_string(n_c_));
}

double LossGraph::run_batch(const ParamVector& theta, const ParamVector* v,
                            const data::LabeledDataset& d, Mode mode,
                            ParamVector* vec_out) const {
  check_inputs(theta, d);
  if (mode == Mode::hvp) {
    check_same_size(theta, *v, "hvp");
  }

  const std::size_t n = d.n_examples();
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  const std::size_t eval_end = (mode == Mode::hvp) ? tape_.size() : fwd_end_;
  const NodeId seed = (mode == Mode::hvp) ? sdot_id_ : loss_id_;
  const std::size_t aux_len = input_size_ + static_cast<std::size_t>(n_c_) +
                              (mode == Mode::hvp ? n_params_ : 0);
  const bool want_vec = mode != Mode::loss;

  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<std::vector<double>> chunk_vec(
      want_vec ? n_chunks : 0, std::vector<double>());

  parallel_for(static_cast<int>(n_chunks), [&](int ci) {
    const std::size_t lo = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t hi = std::min(lo + kChunk, n);

    std::vector<double> vals(eval_end), adj;
    std::vector<double> aux(aux_len, 0.0);
    std::vector<double> example_vec;
    if (want_vec) {
      adj.resize(eval_end);
      example_vec.resize(n_params_);
    }
    if (mode == Mode::hvp)
      std::copy(v->data(), v->data() + n_params_,
                aux.begin() + static_cast<std::ptrdiff_t>(input_size_ + n_c_));

    PairwiseScalarSum loss_sum;
    PairwiseVectorSum vec_sum(n_params_);

    for (std::size_t e = lo; e < hi; ++e) {
      const auto x = d.example(e);
      std::copy(x.begin(), x.end(), aux.begin());
      std::fill(aux.begin() + static_cast<std::ptrdiff_t>(input_size_),
                aux.begin() + static_cast<std::ptrdiff_t>(input_size_ + n_c_), 0.0);
      aux[input_size_ + static_cast<std::size_t>(d.labels[e])] = 1.0;

      eval_forward(tape_, eval_end, theta.span(), aux, vals);
      loss_sum.add(vals[loss_id_]);
      if (want_vec) {
        std::fill(example_vec.begin(), example_vec.end(), 0.0);
        eval_backward(tape_, eval_end, seed, vals, adj, example_vec);
        vec_sum.add(example_vec);
      }
    }

    chunk_loss[static_cast<std::size_t>(ci)] = loss_sum.total();
    if (want_vec) {
      chunk_vec[static_cast<std::size_t>(ci)].resize(n_params_);
      vec_sum.total(chunk_vec[static_cast<std::size_t>(ci)]);
    }
  });

  PairwiseScalarSum loss_total;
  for (std::size_t c = 0; c < n_chunks; ++c) loss_total.add(chunk_loss[c]);
  const double loss = loss_total.total() / static_cast<double>(n);

  if (want_vec) {
    PairwiseVectorSum vec_total(n_params_);
    for (std::size_t c = 0; c < n_chunks; ++c) vec_total.add(chunk_vec[c]);
    ParamVector out(n_params_);
    vec_total.total(out.span());
    scale(out, 1.0 / static_cast<double>(n));
    if (!out.all_finite())
      throw DivergenceError(mode == Mode::hvp ? "non-finite Hessian-vector product"
                                              : "non-finite gradient");
    *vec_out = std::move(out);
  }

  if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss");
  return loss;
}

double LossGraph::eval_loss(const ParamVector& theta, const data::LabeledDataset& d) const {
  return run_batch(theta, nullptr, d, Mode::loss, nullptr);
}

ParamVector LossGraph::gradient(const ParamVector& theta, const data::LabeledDataset& d) const {
  ParamVector g;
  run_batch(theta, nullptr, d, Mode::grad, &g);
  return g;
}

double LossGraph::loss_and_gradient(const ParamVector& theta, const data::LabeledDataset& d,
                                    ParamVector& grad) const {
  return run_batch(theta, nullptr, d, Mode::grad, &grad);
}

ParamVector LossGraph::hvp(const ParamVector& theta, const ParamVector& v,
                           const data::LabeledDataset& d) const {
  ParamVector out;
  run_batch(theta, &v, d, Mode::hvp, &out);
  return out;
}

ParamVector LossGraph::fd_gradient(const ParamVector& theta, const data::LabeledDataset& d,
                                   double eps) const {
  if (!(eps > 0.0)) throw Error("autodiff", "fd_gradient: eps must be > 0");
  check_inputs(theta, d);
  ParamVector g(n_params_);
  ParamVector probe = theta;
  for (std::size_t i = 0; i < n_params_; ++i) {
    const double h = eps * (1.0 + std::abs(theta[i]));
    probe[i] = theta[i] + h;
    const double lp = eval_loss(probe, d);
    probe[i] = theta[i] - h;
    const double lm = eval_loss(probe, d);
    probe[i] = theta[i];
    g[i] = (lp - lm) / (2.0 * h);
  }
  return g;
}

ParamVector LossGraph::fd_hvp(const ParamVector& theta, const ParamVector& v,
                              const data::LabeledDataset& d, double eps) const {
  if (!(eps > 0.0)) throw Error("autodiff", "fd_hvp: eps must be > 0");
  check_same_size(theta, v, "fd_hvp");
  ParamVector plus = theta, minus = theta;
  axpy(eps, v, plus);
  axpy(-eps, v, minus);
  ParamVector gp = gradient(plus, d);
  ParamVector gm = gradient(minus, d);
  ParamVector out = sub(gp, gm);
  scale(out, 1.0 / (2.0 * eps));
  return out;
}

}  // namespace eosprobe::ad
