#include "eosprobe/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "eosprobe/errors.hpp"
#include "eosprobe/snapshot.hpp"
#include "eosprobe/spectral.hpp"
#include "eosprobe/telemetry.hpp"

namespace eosprobe::expt {

namespace fs = std::filesystem;

const char* to_string(Family f) {
  switch (f) {
    case Family::eos_sweep: return "eos_sweep";
    case Family::class_sweep: return "class_sweep";
    case Family::fine_grained_entry: return "fine_grained_entry";
    case Family::flow_scaling: return "flow_scaling";
    case Family::cusp_probe: return "cusp_probe";
    default: return "attribution_table";
  }
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

model::ModelSpec model_from_config(const cfg::Config& c, int n_c, int input_dim_hint) {
  const std::string arch = c.get_string("model.arch", "tinymlp");
  const auto act = model::activation_from_string(c.get_string("model.activation", "tanh"));
  const std::uint64_t seed = c.get_uint("model.seed", c.get_uint("seed", 0) + 1);

  model::ModelSpec spec;
  if (arch == "tinymlp") {
    std::vector<int> hidden = {32, 32};
    if (c.has("model.hidden")) hidden = c.get_int_list("model.hidden");
    spec = model::tiny_mlp(input_dim_hint, hidden, n_c, act, seed);
  } else if (arch == "linear") {
    spec = model::tiny_mlp(input_dim_hint, {}, n_c, act, seed);
  } else if (arch == "tinyconv") {
    std::vector<int> ch = {4, 8};
    if (c.has("model.conv_channels")) ch = c.get_int_list("model.conv_channels");
    if (ch.size() != 2) throw ConfigError("model.conv_channels needs exactly 2 entries");
    const int hidden = static_cast<int>(c.get_int("model.conv_hidden", 32));
    const auto shape = c.has("model.input_shape") ? c.get_int_list("model.input_shape")
                                                  : std::vector<int>{3, 32, 32};
    spec = model::tiny_conv(shape, ch[0], ch[1], hidden, n_c, act, seed);
  } else {
    throw ConfigError("unknown model.arch '" + arch + "'");
  }
  spec.init_gain = c.get_double("model.init_gain", 0.0);
  return spec;
}

data::LabeledDataset dataset_from_config(const cfg::Config& c) {
  const std::string kind = c.get_string("data.kind", "synthetic");
  data::LabeledDataset d;
  if (kind == "synthetic") {
    const int n_d = static_cast<int>(c.get_int("data.n_d", 128));
    const int n_c = static_cast<int>(c.get_int("data.n_c", 2));
    const int dim = static_cast<int>(c.get_int("data.dim", std::max(4, n_c)));
    const double sep = c.get_double("data.separation", 3.0);
    const std::uint64_t seed = c.get_uint("data.seed", c.get_uint("seed", 0) + 2);
    d = data::synth_dataset(n_d, n_c, dim, sep, seed);
  } else if (kind == "cifar10") {
    std::vector<fs::path> paths;
    for (const auto& p : c.get_string_list("data.paths")) paths.emplace_back(p);
    d = data::load_cifar10_binary(paths, c.get_bool("data.center", false));
  } else {
    throw ConfigError("unknown data.kind '" + kind + "'");
  }
  if (c.has("data.keep_classes")) d = data::subset_classes(d, c.get_int_list("data.keep_classes"));
  if (c.has("data.subset_n"))
    d = data::subset_size(d, static_cast<std::size_t>(c.get_int("data.subset_n")),
                          c.get_uint("data.subset_seed", c.get_uint("seed", 0) + 3));
  return d;
}

train::TrainConfig train_config_from_config(const cfg::Config& c) {
  train::TrainConfig t;
  t.eta = c.get_double("train.eta", t.eta);
  t.max_iters = c.get_int("train.max_iters", t.max_iters);
  t.stop_loss = c.get_double("train.stop_loss", t.stop_loss);
  t.telemetry_every = c.get_int("train.telemetry_every", t.telemetry_every);
  t.snapshot_every = c.get_int("train.snapshot_every", t.snapshot_every);
  t.k = static_cast<int>(c.get_int("train.k", t.k));
  t.k_top = static_cast<int>(c.get_int("train.k_top", t.k_top));
  t.seed = c.get_uint("train.seed", c.get_uint("seed", 0));
  t.mode = train::mode_from_string(c.get_string("train.mode", "fixed_lr"));
  t.flow_cap = c.get_double("train.flow_cap", t.flow_cap);
  t.flow_safety = c.get_double("train.flow_safety", t.flow_safety);
  t.spectral_tol = c.get_double("train.spectral_tol", t.spectral_tol);
  t.spectral_max_iters = static_cast<int>(c.get_int("train.spectral_max_iters", t.spectral_max_iters));
  t.measure_attribution = c.get_bool("train.attribution", t.measure_attribution);
  t.validate();
  return t;
}

cfg::Config resolve_cell_config(const cfg::Config& base) {
  cfg::Config out;
  for (const auto& [k, v] : base.entries()) {
    if (k.rfind("model.", 0) == 0 || k.rfind("data.", 0) == 0 || k.rfind("train.", 0) == 0 ||
        k == "seed")
      out.set(k, v);
  }
  return out;
}

namespace {

/// Fills in the derived seeds and dims so a cell config is self-contained
/// even when the base config relied on defaults.
void pin_cell_defaults(cfg::Config& c, const data::LabeledDataset& d,
                       const model::ModelSpec& spec) {
  c.set("data.n_c", std::to_string(d.n_c));
  c.set("model.seed", std::to_string(spec.seed));
  c.set("model.activation", model::to_string(spec.activation));
  if (!c.has("data.seed")) c.set("data.seed", std::to_string(c.get_uint("seed", 0) + 2));
  if (!c.has("train.seed")) c.set("train.seed", std::to_string(c.get_uint("seed", 0)));
}

Cell make_cell(const std::string& name, const cfg::Config& cell_cfg) {
  Cell cell;
  cell.name = name;
  cell.dataset = dataset_from_config(cell_cfg);
  cell.spec = model_from_config(cell_cfg, cell.dataset.n_c,
                                static_cast<int>(cell.dataset.input_size()));
  cell.config = train_config_from_config(cell_cfg);
  cell.resolved = resolve_cell_config(cell_cfg);
  pin_cell_defaults(cell.resolved, cell.dataset, cell.spec);
  return cell;
}

int plan_workers(const cfg::Config& c) {
  return std::max(1, static_cast<int>(c.get_int("workers", 1)));
}

std::string eta_tag(double eta) {
  std::ostringstream s;
  s << eta;
  std::string t = s.str();
  for (auto& ch : t)
    if (ch == '.') ch = 'p';
  return t;
}

}  // namespace

ExperimentPlan make_eos_sweep_plan(const cfg::Config& c, const fs::path& out) {
  ExperimentPlan plan;
  plan.family = Family::eos_sweep;
  plan.out_dir = out;
  plan.workers = plan_workers(c);
  plan.resolved = c;

  std::vector<double> etas = {0.003, 0.001, 0.0003, 0.0001};
  if (c.has("sweep.etas")) etas = c.get_double_list("sweep.etas");
  std::vector<std::string> archs = {"tinymlp"};
  if (c.has("sweep.archs")) archs = c.get_string_list("sweep.archs");
  std::vector<std::string> acts = {"tanh", "relu"};
  if (c.has("sweep.activations")) acts = c.get_string_list("sweep.activations");

  for (const auto& arch : archs) {
    for (const auto& act : acts) {
      for (double eta : etas) {
        cfg::Config cc = c;
        cc.set("model.arch", arch);
        cc.set("model.activation", act);
        cc.set("train.eta", fmt(eta));
        plan.cells.push_back(make_cell(arch + "-" + act + "-eta" + eta_tag(eta), cc));
      }
    }
  }
  return plan;
}

ExperimentPlan make_class_sweep_plan(const cfg::Config& c, const fs::path& out) {
  ExperimentPlan plan;
  plan.family = Family::class_sweep;
  plan.out_dir = out;
  plan.workers = plan_workers(c);
  plan.resolved = c;

  // Default grid: 2, 3, 5 classes plus the full set.
  const int full_nc = static_cast<int>(c.get_int("data.n_c", 10));
  std::vector<std::vector<int>> keeps;
  if (c.has("classes.sizes")) {
    for (int s : c.get_int_list("classes.sizes")) {
      if (s > full_nc) throw ConfigError("classes.sizes entry exceeds data.n_c");
      std::vector<int> keep;
      for (int i = 0; i < s; ++i) keep.push_back(i);
      keeps.push_back(keep);
    }
  } else {
    for (int s : {2, 3, 5})
      if (s <= full_nc) {
        std::vector<int> keep;
        for (int i = 0; i < s; ++i) keep.push_back(i);
        keeps.push_back(keep);
      }
  }
  {
    std::vector<int> all;
    for (int i = 0; i < full_nc; ++i) all.push_back(i);
    keeps.push_back(all);
  }

  for (const auto& keep : keeps) {
    cfg::Config cc = c;
    cc.set("data.keep_classes", join_ints(keep));
    plan.cells.push_back(make_cell("nc" + std::to_string(keep.size()), cc));
  }
  return plan;
}

ExperimentPlan make_entry_plan(const cfg::Config& c, const fs::path& out) {
  ExperimentPlan plan;
  plan.family = Family::fine_grained_entry;
  plan.out_dir = out;
  plan.workers = 1;
  plan.resolved = c;

  cfg::Config cc = c;
  cc.set("train.telemetry_every", std::to_string(c.get_int("entry.cadence", 10)));
  cc.set("train.max_iters", std::to_string(c.get_int("entry.horizon", 2000)));
  plan.cells.push_back(make_cell("entry", cc));
  return plan;
}

ExperimentPlan make_flow_scaling_plan(const cfg::Config& c, const fs::path& out) {
  ExperimentPlan plan;
  plan.family = Family::flow_scaling;
  plan.out_dir = out;
  plan.workers = plan_workers(c);
  plan.resolved = c;

  std::vector<int> sizes = {32, 64, 128, 256, 512};
  if (c.has("flow.sizes")) sizes = c.get_int_list("flow.sizes");
  for (int n_d : sizes) {
    cfg::Config cc = c;
    cc.set("data.n_d", std::to_string(n_d));
    cc.set("train.mode", "gradient_flow");
    plan.cells.push_back(make_cell("nd" + std::to_string(n_d), cc));
  }
  return plan;
}

CellResult run_cell(const Cell& cell, const fs::path& out_dir) {
  const fs::path cells_dir = out_dir / "cells";
  fs::create_directories(cells_dir);
  const fs::path final_dir = cells_dir / cell.name;
  const fs::path tmp_dir = cells_dir / (cell.name + ".tmp");
  fs::remove_all(tmp_dir);
  fs::create_directories(tmp_dir / "snapshots");

  cell.resolved.write(tmp_dir / "config.resolved");
  {
    std::ofstream ms(tmp_dir / "model.spec", std::ios::binary);
    ms << model::to_text(cell.spec);
  }

  const std::uint64_t config_hash = io::fnv1a64(cell.resolved.to_string());

  train::RunSinks sinks;
  sinks.on_snapshot = [&](std::int64_t n, const ParamVector& theta) {
    char name[32];
    std::snprintf(name, sizeof name, "iter_%08lld.snap", static_cast<long long>(n));
    std::map<std::string, std::string> meta;
    meta["iteration"] = std::to_string(n);
    meta["config_hash"] = std::to_string(config_hash);
    io::write_snapshot(theta, meta, tmp_dir / "snapshots" / name);
  };

  CellResult result;
  result.name = cell.name;
  result.n_c = cell.dataset.n_c;
  if (cell.config.mode == train::Mode::fixed_lr) {
    result.run = train::train(cell.config, cell.spec, cell.dataset, sinks);
    const int n_params = static_cast<int>(model::param_count(cell.spec));
    const int k_eff = std::min(cell.config.k, n_params);
    result.k_top = std::min(cell.config.k_top > 0 ? cell.config.k_top : cell.dataset.n_c - 1, k_eff);
  } else {
    result.run = train::train_gradient_flow(cell.config, cell.spec, cell.dataset, sinks);
    result.k_top = 0;
  }

  io::write_telemetry(result.run.telemetry, tmp_dir / "telemetry.txt");
  {
    std::ofstream sum(tmp_dir / "summary.txt", std::ios::binary);
    sum << "cell=" << cell.name << "\n";
    sum << "termination=" << train::to_string(result.run.termination) << "\n";
    sum << "final_iteration=" << result.run.final_iteration << "\n";
    sum << "final_loss=" << fmt(result.run.final_loss) << "\n";
    sum << "telemetry_records=" << result.run.telemetry.size() << "\n";
    sum << "snapshots=" << result.run.snapshots.size() << "\n";
  }

  fs::remove_all(final_dir);
  fs::rename(tmp_dir, final_dir);
  return result;
}

namespace {

/// Work queue over cells. Results land in cell order; divergent or failed
/// cells surface as summaries, not exceptions, so a sweep always completes.
std::vector<CellResult> run_cells(const ExperimentPlan& plan) {
  std::vector<CellResult> results(plan.cells.size());
  std::vector<std::string> failures(plan.cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.cells.size()) return;
      try {
        results[i] = run_cell(plan.cells[i], plan.out_dir);
      } catch (const std::exception& e) {
        failures[i] = e.what();
        results[i].name = plan.cells[i].name;
      }
    }
  };

  const int workers =
      std::max(1, std::min<int>(plan.workers, static_cast<int>(plan.cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty())
      throw Error("experiment", "cell '" + plan.cells[i].name + "' failed: " + failures[i]);
  return results;
}

plot::TelemetrySet to_set(const std::vector<CellResult>& results) {
  plot::TelemetrySet set;
  for (const auto& r : results) set.emplace_back(r.name, r.run.telemetry);
  return set;
}

}  // namespace

std::vector<CellResult> run_eos_sweep(const ExperimentPlan& plan) {
  fs::create_directories(plan.out_dir);
  plan.resolved.write(plan.out_dir / "config.resolved");
  auto results = run_cells(plan);

  const auto set = to_set(results);
  std::vector<int> k_tops;
  for (const auto& r : results) k_tops.push_back(std::max(1, r.k_top));
  plot::emit_rho_pair_figure(set, k_tops, "Edge of stability: rho pairs per cell",
                             plan.out_dir / "fig1_rho.svg", plan.out_dir / "fig1_rho.tsv");
  plot::emit_grad_norm_figure(set, "Gradient concentration",
                              plan.out_dir / "fig3_grad_norms.svg",
                              plan.out_dir / "fig3_grad_norms.tsv");
  return results;
}

std::vector<CellResult> run_class_sweep(const ExperimentPlan& plan) {
  fs::create_directories(plan.out_dir);
  plan.resolved.write(plan.out_dir / "config.resolved");
  auto results = run_cells(plan);

  const auto set = to_set(results);
  std::vector<int> k_tops;
  for (const auto& r : results) k_tops.push_back(std::max(1, r.n_c - 1));
  plot::emit_rho_pair_figure(set, k_tops, "Edge of stability vs class count",
                             plan.out_dir / "fig2_classes.svg", plan.out_dir / "fig2_classes.tsv");
  return results;
}

CellResult run_fine_grained_entry(const ExperimentPlan& plan) {
  fs::create_directories(plan.out_dir);
  plan.resolved.write(plan.out_dir / "config.resolved");
  if (plan.cells.size() != 1)
    throw Error("experiment", "fine_grained_entry expects exactly one cell");
  auto result = run_cell(plan.cells[0], plan.out_dir);
  plot::emit_entry_figures(result.run.telemetry, std::max(1, result.k_top),
                           plan.out_dir / "fig4_entry_rho.svg",
                           plan.out_dir / "fig4_entry_coords.svg",
                           plan.out_dir / "fig4_entry.tsv");
  return result;
}

std::vector<FlowScalingRow> peak_table(const std::vector<CellResult>& cells,
                                       const std::vector<int>& sizes) {
  if (cells.size() != sizes.size())
    throw Error("experiment", "peak_table: one dataset size per cell required");
  std::vector<FlowScalingRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    FlowScalingRow row;
    row.n_d = sizes[i];
    bool found = false;
    // First global maximum of lambda_1 over the run.
    for (const auto& rec : cells[i].run.telemetry) {
      if (rec.lambda.empty()) continue;
      const double l1 = rec.lambda.front();
      if (!found || l1 > row.peak_lambda1) {
        row.peak_lambda1 = l1;
        row.t_peak = rec.t;
        row.iter_peak = rec.iteration;
        found = true;
      }
    }
    if (!found) throw Error("experiment", "flow cell '" + cells[i].name + "' has no lambda telemetry");
    rows.push_back(row);
  }
  return rows;
}

FlowScalingResult run_flow_scaling(const ExperimentPlan& plan) {
  fs::create_directories(plan.out_dir);
  plan.resolved.write(plan.out_dir / "config.resolved");

  FlowScalingResult out;
  out.cells = run_cells(plan);

  std::vector<int> sizes;
  for (const auto& cell : plan.cells)
    sizes.push_back(static_cast<int>(cell.resolved.get_int("data.n_d")));
  out.rows = peak_table(out.cells, sizes);

  // Least-squares fit of peak lambda_1 against n_D.
  const std::size_t n = out.rows.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : out.rows) {
    sx += r.n_d;
    sy += r.peak_lambda1;
    sxx += static_cast<double>(r.n_d) * r.n_d;
    sxy += static_cast<double>(r.n_d) * r.peak_lambda1;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (n >= 2 && denom != 0.0) {
    out.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / static_cast<double>(n);
    const double mean_y = sy / static_cast<double>(n);
    double ss_res = 0, ss_tot = 0;
    for (const auto& r : out.rows) {
      const double fit = out.slope * r.n_d + out.intercept;
      ss_res += (r.peak_lambda1 - fit) * (r.peak_lambda1 - fit);
      ss_tot += (r.peak_lambda1 - mean_y) * (r.peak_lambda1 - mean_y);
    }
    out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  }

  {
    std::ofstream t(plan.out_dir / "peak_lambda.tsv", std::ios::binary);
    t << "n_d\tpeak_lambda1\tt_peak\titer_peak\n";
    for (const auto& r : out.rows)
      t << r.n_d << '\t' << fmt(r.peak_lambda1) << '\t' << fmt(r.t_peak) << '\t' << r.iter_peak
        << '\n';
    t << "# fit slope=" << fmt(out.slope) << " intercept=" << fmt(out.intercept)
      << " r_squared=" << fmt(out.r_squared) << "\n";
  }
  plot::emit_lambda_figure(to_set(out.cells), "Peak curvature under gradient flow",
                           plan.out_dir / "fig_flow_lambda.svg",
                           plan.out_dir / "fig_flow_lambda.tsv");
  return out;
}

CuspProfile run_cusp_probe(const train::RunRecord& run, const model::ModelSpec& spec,
                           const data::LabeledDataset& dataset, const train::TrainConfig& cfg,
                           int n_delta, double half_width) {
  if (run.snapshots.empty()) throw Error("experiment", "cusp probe needs a run with snapshots");
  if (n_delta < 3) throw Error("experiment", "cusp probe needs at least 3 grid points");
  if (!(half_width > 0)) throw Error("experiment", "cusp probe needs half_width > 0");

  CuspProfile profile;

  // Peak lambda_1: first global maximum over the telemetry.
  bool found = false;
  double peak = 0.0;
  for (const auto& rec : run.telemetry) {
    if (rec.lambda.empty()) continue;
    if (!found || rec.lambda.front() > peak) {
      peak = rec.lambda.front();
      profile.peak_iteration = rec.iteration;
      found = true;
    }
  }
  if (!found) throw Error("experiment", "cusp probe: run has no lambda telemetry");

  // Nearest stored snapshot (ties to the earlier iteration).
  std::int64_t best_iter = -1;
  std::int64_t best_dist = -1;
  for (const auto& [iter, theta] : run.snapshots) {
    const std::int64_t dist = std::llabs(iter - profile.peak_iteration);
    if (best_iter < 0 || dist < best_dist) {
      best_iter = iter;
      best_dist = dist;
    }
  }
  profile.snapshot_iteration = best_iter;
  const ParamVector& theta_star = run.restore(best_iter);

  const ad::LossGraph graph(spec, dataset.shape);
  const int k_eff = std::min(cfg.k, static_cast<int>(graph.param_count()));
  const auto hvp_fn = [&](const ParamVector& v) { return graph.hvp(theta_star, v, dataset); };
  const auto eig = spectral::top_k_eigenpairs(hvp_fn, graph.param_count(), k_eff,
                                              cfg.spectral_tol, cfg.spectral_max_iters);
  profile.lambda1_at_star = eig.eigenvalues.front();
  const ParamVector& h1 = eig.eigenvectors.front();

  // Symmetric grid with exact endpoints and an exact zero center.
  if (n_delta % 2 == 0) ++n_delta;
  const int m = n_delta / 2;
  profile.deltas.resize(static_cast<std::size_t>(n_delta));
  profile.deltas[static_cast<std::size_t>(m)] = 0.0;
  for (int j = 1; j <= m; ++j) {
    const double d = half_width * (static_cast<double>(j) / static_cast<double>(m));
    profile.deltas[static_cast<std::size_t>(m + j)] = d;
    profile.deltas[static_cast<std::size_t>(m - j)] = -d;
  }

  const double base = graph.eval_loss(theta_star, dataset);
  profile.delta_loss.resize(profile.deltas.size());
  for (std::size_t i = 0; i < profile.deltas.size(); ++i) {
    ParamVector moved = theta_star;
    axpy(profile.deltas[i], h1, moved);
    profile.delta_loss[i] = graph.eval_loss(moved, dataset) - base;
  }
  return profile;
}

std::vector<AttributionRow> attribution_table(const plot::TelemetrySet& set, double rho_gate,
                                              int min_points) {
  std::vector<AttributionRow> rows;
  for (const auto& [name, records] : set) {
    std::vector<double> tops, bulks;
    double eta = 0.0;
    for (const auto& r : records) {
      if (r.k_top < 1 || static_cast<std::size_t>(r.k_top) > r.rho.size()) continue;
      const double gate = r.rho[static_cast<std::size_t>(r.k_top - 1)];
      if (!(gate > rho_gate)) continue;
      if (!std::isfinite(r.delta_top) || !std::isfinite(r.delta_bulk)) continue;
      tops.push_back(r.delta_top);
      bulks.push_back(r.delta_bulk);
      eta = r.eta;
    }
    if (static_cast<int>(tops.size()) < min_points) continue;

    auto mean_std = [](const std::vector<double>& xs) {
      const double n = static_cast<double>(xs.size());
      double mean = 0;
      for (double x : xs) mean += x;
      mean /= n;
      double var = 0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
      return std::pair<double, double>{mean, std::sqrt(var)};
    };

    AttributionRow row;
    row.cell = name;
    row.eta = eta;
    row.points = static_cast<int>(tops.size());
    std::tie(row.mean_top, row.std_top) = mean_std(tops);
    std::tie(row.mean_bulk, row.std_bulk) = mean_std(bulks);
    rows.push_back(row);
  }
  return rows;
}

void write_attribution_table(const std::vector<AttributionRow>& rows,
                             const fs::path& tsv_path, const fs::path& txt_path) {
  {
    std::ofstream t(tsv_path, std::ios::binary);
    if (!t) throw IoError("cannot open " + tsv_path.string() + " for writing");
    t << "cell\teta\tpoints\tmean_delta_top\tstd_delta_top\tmean_delta_bulk\tstd_delta_bulk\n";
    for (const auto& r : rows)
      t << r.cell << '\t' << fmt(r.eta) << '\t' << r.points << '\t' << fmt(r.mean_top) << '\t'
        << fmt(r.std_top) << '\t' << fmt(r.mean_bulk) << '\t' << fmt(r.std_bulk) << '\n';
  }
  {
    std::ofstream t(txt_path, std::ios::binary);
    if (!t) throw IoError("cannot open " + txt_path.string() + " for writing");
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-10s %6s %22s %22s\n", "cell", "eta", "points",
                  "mean dL_top (std)", "mean dL_bulk (std)");
    t << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-24s %-10g %6d %12.4g (%.4g) %12.4g (%.4g)\n",
                    r.cell.c_str(), r.eta, r.points, r.mean_top, r.std_top, r.mean_bulk,
                    r.std_bulk);
      t << line;
    }
  }
}

}  // namespace eosprobe::expt
