#include "eosprobe/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eosprobe/errors.hpp"

namespace eosprobe::ad {

NodeId Tape::push(Node n) {
  if (nodes_.size() >= std::numeric_limits<NodeId>::max())
    throw Error("tape", "tape node limit exceeded");
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(double v) {
  if (v == 0.0 && have_zero_) return zero_id_;
  if (v == 1.0 && have_one_) return one_id_;
  const NodeId id = push({Op::Const, 0, 0, 0, v});
  if (v == 0.0 && !have_zero_) {
    zero_id_ = id;
    have_zero_ = true;
  } else if (v == 1.0 && !have_one_) {
    one_id_ = id;
    have_one_ = true;
  }
  return id;
}

NodeId Tape::param(std::uint32_t slot) {
  param_slots_ = std::max(param_slots_, slot + 1);
  return push({Op::Param, slot, 0, 0, 0.0});
}

NodeId Tape::aux(std::uint32_t slot) {
  aux_slots_ = std::max(aux_slots_, slot + 1);
  return push({Op::Aux, slot, 0, 0, 0.0});
}

void eval_forward(const Tape& t, std::size_t end, std::span<const double> theta,
                  std::span<const double> aux, std::span<double> values) {
  const Node* n = t.nodes().data();
  double* v = values.data();
  for (std::size_t i = 0; i < end; ++i) {
    const Node& nd = n[i];
    switch (nd.op) {
      case Op::Const: v[i] = nd.k; break;
      case Op::Param: v[i] = theta[nd.a]; break;
      case Op::Aux: v[i] = aux[nd.a]; break;
      case Op::Add: v[i] = v[nd.a] + v[nd.b]; break;
      case Op::Sub: v[i] = v[nd.a] - v[nd.b]; break;
      case Op::Mul: v[i] = v[nd.a] * v[nd.b]; break;
      case Op::Div: v[i] = v[nd.a] / v[nd.b]; break;
      case Op::Fma: v[i] = v[nd.a] * v[nd.b] + v[nd.c]; break;
      case Op::Neg: v[i] = -v[nd.a]; break;
      case Op::Tanh: v[i] = std::tanh(v[nd.a]); break;
      case Op::Relu: v[i] = v[nd.a] > 0.0 ? v[nd.a] : 0.0; break;
      case Op::Exp: v[i] = std::exp(v[nd.a]); break;
      case Op::Log: v[i] = std::log(v[nd.a]); break;
      case Op::Step: v[i] = v[nd.a] > 0.0 ? 1.0 : 0.0; break;
      case Op::Max2:
      case Op::MaxShift: v[i] = v[nd.b] > v[nd.a] ? v[nd.b] : v[nd.a]; break;
      case Op::Ge: v[i] = v[nd.a] >= v[nd.b] ? 1.0 : 0.0; break;
    }
  }
}

void eval_backward(const Tape& t, std::size_t end, NodeId seed,
                   std::span<const double> values, std::span<double> adjoint,
                   std::span<double> param_grad) {
  const Node* n = t.nodes().data();
  const double* v = values.data();
  double* adj = adjoint.data();
  std::fill(adj, adj + end, 0.0);
  adj[seed] = 1.0;
  for (std::size_t idx = end; idx-- > 0;) {
    const double a = adj[idx];
    if (a == 0.0) continue;
    const Node& nd = n[idx];
    switch (nd.op) {
      case Op::Const: break;
      case Op::Param: param_grad[nd.a] += a; break;
      case Op::Aux: break;
      case Op::Add:
        adj[nd.a] += a;
        adj[nd.b] += a;
        break;
      case Op::Sub:
        adj[nd.a] += a;
        adj[nd.b] -= a;
        break;
      case Op::Mul:
        adj[nd.a] += a * v[nd.b];
        adj[nd.b] += a * v[nd.a];
        break;
      case Op::Div:
        adj[nd.a] += a / v[nd.b];
        adj[nd.b] -= a * v[idx] / v[nd.b];
        break;
      case Op::Fma:
        adj[nd.a] += a * v[nd.b];
        adj[nd.b] += a * v[nd.a];
        adj[nd.c] += a;
        break;
      case Op::Neg: adj[nd.a] -= a; break;
      case Op::Tanh: adj[nd.a] += a * (1.0 - v[idx] * v[idx]); break;
      case Op::Relu: adj[nd.a] += v[nd.a] > 0.0 ? a : 0.0; break;
      case Op::Exp: adj[nd.a] += a * v[idx]; break;
      case Op::Log: adj[nd.a] += a / v[nd.a]; break;
      case Op::Step: break;
      case Op::Max2:
        if (v[nd.a] >= v[nd.b])
          adj[nd.a] += a;
        else
          adj[nd.b] += a;
        break;
      case Op::Ge: break;
      case Op::MaxShift: break;
    }
  }
}

std::vector<NodeId> append_symbolic_gradient(Tape& t, NodeId seed) {
  // Adjoint node per tape position; 0 is only valid as "none" because node 0
  // can never be an adjoint of a later node's input chain seeded at `seed`
  // unless it is `seed` itself, which is handled explicitly.
  const std::size_t fwd_end = seed + 1;
  std::vector<NodeId> adj(fwd_end, 0);
  std::vector<bool> has(fwd_end, false);
  const NodeId one = t.one();
  const NodeId zero = t.zero();
  adj[seed] = one;
  has[seed] = true;

  std::vector<NodeId> grads(t.param_slots(), zero);

  auto accumulate = [&](NodeId target, NodeId delta) {
    if (has[target])
      adj[target] = t.add(adj[target], delta);
    else {
      adj[target] = delta;
      has[target] = true;
    }
  };

  for (std::size_t idx = fwd_end; idx-- > 0;) {
    if (!has[idx]) continue;
    const Node nd = t.nodes()[idx];  // copy: push may reallocate
    const NodeId a = adj[idx];
    const NodeId self = static_cast<NodeId>(idx);
    switch (nd.op) {
      case Op::Const: break;
      case Op::Param: {
        auto& g = grads[nd.a];
        g = (g == zero) ? a : t.add(g, a);
        break;
      }
      case Op::Aux: break;
      case Op::Add:
        accumulate(nd.a, a);
        accumulate(nd.b, a);
        break;
      case Op::Sub:
        accumulate(nd.a, a);
        accumulate(nd.b, t.neg(a));
        break;
      case Op::Mul:
        accumulate(nd.a, t.mul(a, nd.b));
        accumulate(nd.b, t.mul(a, nd.a));
        break;
      case Op::Div:
        // d(x/y)/dx = 1/y, d(x/y)/dy = -(x/y)/y
        accumulate(nd.a, t.div(a, nd.b));
        accumulate(nd.b, t.neg(t.mul(a, t.div(self, nd.b))));
        break;
      case Op::Fma:
        accumulate(nd.a, t.mul(a, nd.b));
        accumulate(nd.b, t.mul(a, nd.a));
        accumulate(nd.c, a);
        break;
      case Op::Neg: accumulate(nd.a, t.neg(a)); break;
      case Op::Tanh:
        accumulate(nd.a, t.mul(a, t.sub(one, t.mul(self, self))));
        break;
      case Op::Relu: accumulate(nd.a, t.mul(a, t.step(nd.a))); break;
      case Op::Exp: accumulate(nd.a, t.mul(a, self)); break;
      case Op::Log: accumulate(nd.a, t.div(a, nd.a)); break;
      case Op::Step: break;
      case Op::Max2: {
        const NodeId g = t.ge(nd.a, nd.b);
        accumulate(nd.a, t.mul(a, g));
        accumulate(nd.b, t.mul(a, t.sub(one, g)));
        break;
      }
      case Op::Ge: break;
      case Op::MaxShift: break;
    }
  }
  return grads;
}

}  // namespace eosprobe::ad
