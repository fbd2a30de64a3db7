#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace eosprobe::ad {

/// Scalar tape operations. Every op is a plain IEEE double operation so
/// evaluation is fully deterministic.
///
/// Step and Ge evaluate to {0,1} and are treated as locally constant (zero
/// derivative): Step carries the ReLU subgradient convention relu'(0) = 0 and
/// a zero second-derivative contribution, Ge routes max/maxpool adjoints.
/// MaxShift is a detached running max used only to stabilize log-sum-exp; its
/// derivative is defined as zero, which leaves the value of the loss and all
/// derivatives unchanged wherever the argmax is locally constant.
enum class Op : std::uint8_t {
  Const,     // k
  Param,     // theta[a]
  Aux,       // aux[a]
  Add,       // v[a] + v[b]
  Sub,       // v[a] - v[b]
  Mul,       // v[a] * v[b]
  Div,       // v[a] / v[b]
  Fma,       // v[a] * v[b] + v[c]   (two roundings, not std::fma)
  Neg,       // -v[a]
  Tanh,      // tanh(v[a])
  Relu,      // max(v[a], 0)
  Exp,       // exp(v[a])
  Log,       // log(v[a])
  Step,      // v[a] > 0 ? 1 : 0
  Max2,      // max(v[a], v[b]), ties keep v[a]
  Ge,        // v[a] >= v[b] ? 1 : 0
  MaxShift,  // max(v[a], v[b]) with derivative treated as zero
};

struct Node {
  Op op;
  std::uint32_t a = 0, b = 0, c = 0;
  double k = 0.0;
};

using NodeId = std::uint32_t;

/// Append-only computation tape over a flat parameter vector plus an
/// auxiliary input vector (example features, one-hot labels, the HVP
/// direction). Nodes are stored in topological order by construction.
class Tape {
 public:
  NodeId constant(double v);
  NodeId param(std::uint32_t slot);
  NodeId aux(std::uint32_t slot);

  NodeId add(NodeId x, NodeId y) { return push({Op::Add, x, y, 0, 0.0}); }
  NodeId sub(NodeId x, NodeId y) { return push({Op::Sub, x, y, 0, 0.0}); }
  NodeId mul(NodeId x, NodeId y) { return push({Op::Mul, x, y, 0, 0.0}); }
  NodeId div(NodeId x, NodeId y) { return push({Op::Div, x, y, 0, 0.0}); }
  NodeId fma(NodeId x, NodeId y, NodeId z) { return push({Op::Fma, x, y, z, 0.0}); }
  NodeId neg(NodeId x) { return push({Op::Neg, x, 0, 0, 0.0}); }
  NodeId tanh(NodeId x) { return push({Op::Tanh, x, 0, 0, 0.0}); }
  NodeId relu(NodeId x) { return push({Op::Relu, x, 0, 0, 0.0}); }
  NodeId exp(NodeId x) { return push({Op::Exp, x, 0, 0, 0.0}); }
  NodeId log(NodeId x) { return push({Op::Log, x, 0, 0, 0.0}); }
  NodeId step(NodeId x) { return push({Op::Step, x, 0, 0, 0.0}); }
  NodeId max2(NodeId x, NodeId y) { return push({Op::Max2, x, y, 0, 0.0}); }
  NodeId ge(NodeId x, NodeId y) { return push({Op::Ge, x, y, 0, 0.0}); }
  NodeId max_shift(NodeId x, NodeId y) { return push({Op::MaxShift, x, y, 0, 0.0}); }

  NodeId zero() { return constant(0.0); }
  NodeId one() { return constant(1.0); }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::uint32_t param_slots() const noexcept { return param_slots_; }
  std::uint32_t aux_slots() const noexcept { return aux_slots_; }

 private:
  NodeId push(Node n);

  std::vector<Node> nodes_;
  std::uint32_t param_slots_ = 0;
  std::uint32_t aux_slots_ = 0;
  NodeId zero_id_ = 0;
  NodeId one_id_ = 0;
  bool have_zero_ = false;
  bool have_one_ = false;
};

/// Forward sweep over nodes [0, end). `values` must have at least `end`
/// entries.
void eval_forward(const Tape& t, std::size_t end, std::span<const double> theta,
                  std::span<const double> aux, std::span<double> values);

/// Numeric reverse sweep over nodes [0, end) from `seed` (whose adjoint is
/// set to 1). Adds d(seed)/d(theta[slot]) into `param_grad`. `adjoint` is the
/// caller's workspace (at least `end` entries); it is cleared here.
void eval_backward(const Tape& t, std::size_t end, NodeId seed,
                   std::span<const double> values, std::span<double> adjoint,
                   std::span<double> param_grad);

/// Appends nodes that compute d(seed)/d(theta[slot]) for every parameter
/// slot, i.e. the backward pass written onto the tape itself. Returns one
/// node id per slot (a shared zero constant where the parameter does not
/// influence `seed`). Differentiating a scalar built from these nodes yields
/// exact second-order reverse-mode derivatives.
std::vector<NodeId> append_symbolic_gradient(Tape& t, NodeId seed);

}  // namespace eosprobe::ad
