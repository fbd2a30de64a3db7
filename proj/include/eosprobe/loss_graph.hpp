#pragma once

#include <cstddef>

#include "eosprobe/dataset.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/param_vector.hpp"
#include "eosprobe/tape.hpp"

namespace eosprobe::ad {

/// Evaluatable description of the full-batch training loss: a per-example
/// scalar tape (shared structure, per-example inputs) whose mean over the
/// dataset is the loss. The tape also carries its own backward pass as nodes,
/// so hvp() reverse-differentiates the scalar g.v exactly (second-order
/// reverse mode); finite differences exist only as oracles.
///
/// Per-example evaluations may run on worker threads; every reduction walks
/// a fixed pairwise tree keyed only to the example index, so all results are
/// bit-identical regardless of the thread budget.
class LossGraph {
 public:
  /// Builds the graph for a model: forward pass to logits plus the
  /// max-shifted softmax-cross-entropy tail.
  LossGraph(const model::ModelSpec& spec, const std::vector<int>& input_shape);

  /// Wraps a hand-built per-example tape (test graphs). Aux slot layout must
  /// be [x (input_size), one-hot label (n_c)]; the HVP direction slots are
  /// appended here.
  static LossGraph from_tape(Tape tape, NodeId loss, std::size_t input_size, int n_c);

  std::size_t param_count() const noexcept { return n_params_; }
  std::size_t input_size() const noexcept { return input_size_; }
  int n_c() const noexcept { return n_c_; }
  std::size_t tape_size() const noexcept { return tape_.size(); }

  /// Mean criterion over the whole dataset (full batch, no sampling).
  double eval_loss(const ParamVector& theta, const data::LabeledDataset& d) const;

  ParamVector gradient(const ParamVector& theta, const data::LabeledDataset& d) const;

  /// One fused pass; returns the loss and fills `grad`.
  double loss_and_gradient(const ParamVector& theta, const data::LabeledDataset& d,
                           ParamVector& grad) const;

  /// Exact H.v by differentiating g.v; linear in v.
  ParamVector hvp(const ParamVector& theta, const ParamVector& v,
                  const data::LabeledDataset& d) const;

  /// Central-difference oracle, step eps*(1+|theta_i|) per coordinate.
  ParamVector fd_gradient(const ParamVector& theta, const data::LabeledDataset& d,
                          double eps) const;

  /// Central difference of gradients along v with step eps.
  ParamVector fd_hvp(const ParamVector& theta, const ParamVector& v,
                     const data::LabeledDataset& d, double eps) const;

 private:
  LossGraph() = default;
  void extend_for_hvp();
  void check_inputs(const ParamVector& theta, const data::LabeledDataset& d) const;

  enum class Mode { loss, grad, hvp };
  double run_batch(const ParamVector& theta, const ParamVector* v,
                   const data::LabeledDataset& d, Mode mode, ParamVector* vec_out) const;

  Tape tape_;
  std::size_t fwd_end_ = 0;   // nodes [0, fwd_end_) compute the loss
  NodeId loss_id_ = 0;
  NodeId sdot_id_ = 0;        // g.v node at the end of the extended tape
  std::size_t n_params_ = 0;
  std::size_t input_size_ = 0;
  int n_c_ = 0;
};

}  // namespace eosprobe::ad
