#include "eosprobe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eosprobe/errors.hpp"
#include "eosprobe/subspace.hpp"

namespace eosprobe::train {

const char* to_string(Mode m) { return m == Mode::fixed_lr ? "fixed_lr" : "gradient_flow"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::loss_threshold: return "loss_threshold";
    case Termination::iteration_cap: return "iteration_cap";
    default: return "divergence";
  }
}

Mode mode_from_string(const std::string& s) {
  if (s == "fixed_lr") return Mode::fixed_lr;
  if (s == "gradient_flow") return Mode::gradient_flow;
  throw ConfigError("unknown train mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("train: eta must be > 0");
  if (!(stop_loss > 0.0)) throw ConfigError("train: stop_loss must be > 0");
  if (telemetry_every < 0) throw ConfigError("train: telemetry_every must be >= 1 (or 0 for auto)");
  if (snapshot_every < 1) throw ConfigError("train: snapshot_every must be >= 1");
  if (k < 1) throw ConfigError("train: k must be >= 1");
  if (mode == Mode::gradient_flow) {
    if (!(flow_cap > 0.0)) throw ConfigError("train: flow_cap must be > 0");
    if (!(flow_safety > 0.0)) throw ConfigError("train: flow_safety must be > 0");
  }
}

std::int64_t TrainConfig::resolved_max_iters() const {
  if (max_iters > 0) return max_iters;
  return static_cast<std::int64_t>(std::llround(40.0 / eta));
}

std::int64_t TrainConfig::resolved_telemetry_every() const {
  if (telemetry_every > 0) return telemetry_every;
  const auto every = static_cast<std::int64_t>(std::llround(1.0 / eta));
  return std::clamp<std::int64_t>(every, 1, 500);
}

const ParamVector& RunRecord::restore(std::int64_t n) const {
  const auto it = snapshots.find(n);
  if (it == snapshots.end())
    throw Error("snapshot", "no snapshot stored for iteration " + std::to_string(n));
  return it->second;
}

ParamVector gd_step(const ParamVector& theta, const ParamVector& g, double eta) {
  check_same_size(theta, g, "gd_step");
  ParamVector out = theta;
  axpy(-eta, g, out);
  return out;
}

namespace {

struct RunContext {
  const TrainConfig& cfg;
  const ad::LossGraph& graph;
  const data::LabeledDataset& data;
  int k_eff;
  int k_top_eff;
};

/// Spectral solve warm-started from the previous block; fills the
/// eigen-telemetry fields of `rec`.
spectral::SpectralResult solve_spectrum(const RunContext& ctx, const ParamVector& theta,
                                        const std::vector<ParamVector>* warm,
                                        TelemetryRecord& rec) {
  const auto hvp_fn = [&](const ParamVector& v) { return ctx.graph.hvp(theta, v, ctx.data); };
  auto eig = spectral::top_k_eigenpairs(hvp_fn, ctx.graph.param_count(), ctx.k_eff,
                                        ctx.cfg.spectral_tol, ctx.cfg.spectral_max_iters, warm);
  rec.lambda = eig.eigenvalues;
  rec.eta_star.clear();
  for (double l : eig.eigenvalues) {
    const auto es = spectral::eta_star(l);
    rec.eta_star.push_back(es ? *es : std::numeric_limits<double>::quiet_NaN());
  }
  rec.rho = spectral::rho_series(rec.eta, eig.eigenvalues);
  rec.spectral_converged = eig.all_converged();
  return eig;
}

}  // namespace

RunRecord train(const TrainConfig& cfg, const model::ModelSpec& spec,
                const data::LabeledDataset& data, const RunSinks& sinks) {
  const ad::LossGraph graph(spec, data.shape);
  return train(cfg, graph, model::init_kaiming(spec), data, sinks);
}

RunRecord train(const TrainConfig& cfg, const ad::LossGraph& graph, ParamVector theta,
                const data::LabeledDataset& data, const RunSinks& sinks) {
  cfg.validate();
  if (cfg.mode != Mode::fixed_lr) throw ConfigError("train: config mode is not fixed_lr");
  data.validate();

  const int n_params = static_cast<int>(graph.param_count());
  const int k_eff = std::min(cfg.k, n_params);
  const int k_top_eff = std::min(cfg.k_top > 0 ? cfg.k_top : data.n_c - 1, k_eff);
  const RunContext ctx{cfg, graph, data, k_eff, k_top_eff};

  const std::int64_t max_iters = cfg.resolved_max_iters();
  const std::int64_t every = cfg.resolved_telemetry_every();

  RunRecord run;
  ParamVector g;
  std::vector<ParamVector> warm;
  double loss = std::numeric_limits<double>::quiet_NaN();

  for (std::int64_t n = 0;; ++n) {
    try {
      loss = graph.loss_and_gradient(theta, data, g);
    } catch (const DivergenceError&) {
      run.termination = Termination::divergence;
      run.final_iteration = n;
      run.final_loss = std::numeric_limits<double>::quiet_NaN();
      run.final_theta = theta;
      return run;
    }

    if (n % cfg.snapshot_every == 0) {
      run.snapshot(theta, n);
      if (sinks.on_snapshot) sinks.on_snapshot(n, theta);
    }

    if (n % every == 0) {
      TelemetryRecord rec;
      rec.iteration = n;
      rec.eta = cfg.eta;
      rec.t = static_cast<double>(n) * cfg.eta;
      rec.loss = loss;
      rec.grad_norm = norm2(g);
      rec.cadence = static_cast<int>(every);
      rec.k_top = k_top_eff;

      const auto eig = solve_spectrum(ctx, theta, warm.empty() ? nullptr : &warm, rec);
      warm = eig.eigenvectors;

      const auto dec = subspace::decompose(g, eig, k_top_eff);
      rec.coord = dec.coordinates;
      rec.top_norm = dec.top_norm;
      rec.bulk_norm = dec.bulk_norm;

      if (cfg.measure_attribution) {
        const auto dt = subspace::step_attribution(graph, theta, dec.top, cfg.eta, data);
        const auto db = subspace::step_attribution(graph, theta, dec.bulk, cfg.eta, data);
        rec.delta_top = dt ? *dt : std::numeric_limits<double>::quiet_NaN();
        rec.delta_bulk = db ? *db : std::numeric_limits<double>::quiet_NaN();
      }

      run.telemetry.push_back(rec);
      if (sinks.on_telemetry) sinks.on_telemetry(rec);
    }

    if (loss < cfg.stop_loss) {
      run.termination = Termination::loss_threshold;
      run.final_iteration = n;
      run.final_loss = loss;
      run.final_theta = theta;
      return run;
    }
    if (n >= max_iters) {
      run.termination = Termination::iteration_cap;
      run.final_iteration = n;
      run.final_loss = loss;
      run.final_theta = theta;
      return run;
    }

    theta = gd_step(theta, g, cfg.eta);
  }
}

RunRecord train_gradient_flow(const TrainConfig& cfg, const model::ModelSpec& spec,
                              const data::LabeledDataset& data, const RunSinks& sinks) {
  const ad::LossGraph graph(spec, data.shape);
  return train_gradient_flow(cfg, graph, model::init_kaiming(spec), data, sinks);
}

RunRecord train_gradient_flow(const TrainConfig& cfg, const ad::LossGraph& graph,
                              ParamVector theta, const data::LabeledDataset& data,
                              const RunSinks& sinks) {
  cfg.validate();
  if (cfg.mode != Mode::gradient_flow)
    throw ConfigError("train_gradient_flow: config mode is not gradient_flow");
  data.validate();

  const int n_params = static_cast<int>(graph.param_count());
  const int k_eff = std::min(cfg.k, n_params);
  const RunContext ctx{cfg, graph, data, k_eff, 0};

  const std::int64_t max_iters = cfg.resolved_max_iters();

  RunRecord run;
  ParamVector g;
  std::vector<ParamVector> warm;
  double t_accum = 0.0;
  double last_good_lambda1 = std::numeric_limits<double>::quiet_NaN();
  double loss = std::numeric_limits<double>::quiet_NaN();

  for (std::int64_t n = 0;; ++n) {
    try {
      loss = graph.loss_and_gradient(theta, data, g);
    } catch (const DivergenceError&) {
      run.termination = Termination::divergence;
      run.final_iteration = n;
      run.final_loss = std::numeric_limits<double>::quiet_NaN();
      run.final_theta = theta;
      return run;
    }

    if (n % cfg.snapshot_every == 0) {
      run.snapshot(theta, n);
      if (sinks.on_snapshot) sinks.on_snapshot(n, theta);
    }

    TelemetryRecord rec;
    rec.iteration = n;
    rec.t = t_accum;
    rec.loss = loss;
    rec.grad_norm = norm2(g);
    rec.cadence = 1;
    rec.eta = cfg.flow_cap;  // provisional; rho uses the actual step below

    const auto eig = solve_spectrum(ctx, theta, warm.empty() ? nullptr : &warm, rec);
    warm = eig.eigenvectors;

    double lambda1 = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    const bool lambda1_ok = !eig.converged.empty() && eig.converged.front();
    if (!lambda1_ok && std::isfinite(last_good_lambda1)) {
      lambda1 = last_good_lambda1;
      rec.lambda_stale = true;
    } else if (lambda1_ok) {
      last_good_lambda1 = lambda1;
    }

    double eta_n = cfg.flow_cap;
    if (lambda1 > spectral::kLambdaMin) eta_n = std::min(cfg.flow_cap, cfg.flow_safety / lambda1);
    rec.eta = eta_n;
    rec.rho = spectral::rho_series(eta_n, rec.lambda);

    run.telemetry.push_back(rec);
    if (sinks.on_telemetry) sinks.on_telemetry(rec);

    if (loss < cfg.stop_loss) {
      run.termination = Termination::loss_threshold;
      run.final_iteration = n;
      run.final_loss = loss;
      run.final_theta = theta;
      return run;
    }
    if (n >= max_iters) {
      run.termination = Termination::iteration_cap;
      run.final_iteration = n;
      run.final_loss = loss;
      run.final_theta = theta;
      return run;
    }

    theta = gd_step(theta, g, eta_n);
    t_accum += eta_n;
  }
}

}  // namespace eosprobe::train
