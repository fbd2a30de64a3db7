#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "eosprobe/dataset.hpp"
#include "eosprobe/loss_graph.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/param_vector.hpp"
#include "eosprobe/spectral.hpp"
#include "eosprobe/telemetry.hpp"

namespace eosprobe::train {

enum class Mode { fixed_lr, gradient_flow };
enum class Termination { loss_threshold, iteration_cap, divergence };

const char* to_string(Mode m);
const char* to_string(Termination t);
Mode mode_from_string(const std::string& s);

struct TrainConfig {
  double eta = 0.001;
  std::int64_t max_iters = 0;        // 0 resolves to round(40/eta)
  double stop_loss = 0.1;
  std::int64_t telemetry_every = 0;  // 0 resolves to round(1/eta), capped at 500
  std::int64_t snapshot_every = 100;
  int k = 20;                        // tracked eigenpairs (clamped to n_params)
  int k_top = 0;                     // 0 resolves to n_c - 1
  std::uint64_t seed = 0;            // carried in configs; model/data seeds derive from it
  Mode mode = Mode::fixed_lr;
  double flow_cap = 0.001;           // eta_max in gradient-flow mode
  double flow_safety = 0.5;          // eta_n = min(flow_cap, flow_safety / lambda_1)
  double spectral_tol = 1e-6;
  int spectral_max_iters = 1000;
  bool measure_attribution = true;

  void validate() const;
  std::int64_t resolved_max_iters() const;
  std::int64_t resolved_telemetry_every() const;
};

/// Everything one training run produces: ordered telemetry, the snapshot
/// index, and how the run ended. t is n*eta in fixed_lr mode and the running
/// sum of step sizes in gradient_flow mode.
struct RunRecord {
  std::vector<TelemetryRecord> telemetry;
  std::map<std::int64_t, ParamVector> snapshots;
  Termination termination = Termination::iteration_cap;
  std::int64_t final_iteration = 0;
  double final_loss = 0.0;
  ParamVector final_theta;

  void snapshot(const ParamVector& theta, std::int64_t n) { snapshots.emplace(n, theta); }
  /// Bit-identical stored parameters; throws on unknown iterations.
  const ParamVector& restore(std::int64_t n) const;
};

/// Telemetry consumers. Records arrive strictly in iteration order from the
/// single trainer thread that owns the run.
struct RunSinks {
  std::function<void(const TelemetryRecord&)> on_telemetry;
  std::function<void(std::int64_t, const ParamVector&)> on_snapshot;
};

/// One descent step theta' = theta - eta * g.
ParamVector gd_step(const ParamVector& theta, const ParamVector& g, double eta);

/// Full-batch gradient descent without momentum at fixed eta. Pauses at every
/// telemetry boundary for the analysis pipeline: warm-started spectral solve,
/// gradient decomposition, and measured step attribution. Stops when the loss
/// drops below stop_loss, the iteration cap is reached, or the loss diverges.
RunRecord train(const TrainConfig& cfg, const model::ModelSpec& spec,
                const data::LabeledDataset& data, const RunSinks& sinks = {});

/// Same loop over a prebuilt graph and explicit starting point. k_top
/// defaults to data.n_c - 1.
RunRecord train(const TrainConfig& cfg, const ad::LossGraph& graph, ParamVector theta,
                const data::LabeledDataset& data, const RunSinks& sinks = {});

/// Adaptive-step approximation of the gradient flow d(theta)/dt = -g: before
/// every step, lambda_1 is recomputed (warm-started) and the step size set to
/// min(flow_cap, flow_safety / lambda_1). Emits one light record (loss,
/// lambda block, t) per iteration; a stale flag marks records that reused the
/// last converged lambda_1.
RunRecord train_gradient_flow(const TrainConfig& cfg, const model::ModelSpec& spec,
                              const data::LabeledDataset& data, const RunSinks& sinks = {});

RunRecord train_gradient_flow(const TrainConfig& cfg, const ad::LossGraph& graph,
                              ParamVector theta, const data::LabeledDataset& data,
                              const RunSinks& sinks = {});

}  // namespace eosprobe::train
