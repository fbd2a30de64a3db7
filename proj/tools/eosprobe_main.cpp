#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "eosprobe/config.hpp"
#include "eosprobe/errors.hpp"
#include "eosprobe/experiments.hpp"
#include "eosprobe/figures.hpp"
#include "eosprobe/parallel.hpp"
#include "eosprobe/snapshot.hpp"
#include "eosprobe/telemetry.hpp"
#include "eosprobe/verify.hpp"
#include "eosprobe/version.hpp"

namespace fs = std::filesystem;
using namespace eosprobe;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_out) {
  cmd->add_option("--config", args.config_path, "config file (key=value lines)");
  cmd->add_option("--set", args.overrides, "config override key=value (repeatable)")
      ->take_all();
  cmd->add_option("--out", args.out_dir, "output directory")->default_val(default_out);
  cmd->add_option("--seed", args.seed, "base seed (overrides the config's `seed`)");
  cmd->add_option("--threads", args.threads,
                  "worker threads for per-example evaluation (env EOSPROBE_THREADS)");
}

cfg::Config resolve_config(const CommonArgs& args) {
  cfg::Config c;
  if (!args.config_path.empty()) c = cfg::Config::from_file(args.config_path);
  for (const auto& o : args.overrides) c.set(o);
  if (args.seed >= 0) c.set("seed", std::to_string(args.seed));

  int threads = args.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("EOSPROBE_THREADS")) threads = std::atoi(env);
  }
  if (threads <= 0) threads = static_cast<int>(c.get_int("threads", 0));
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  set_thread_count(threads);
  c.set("threads", std::to_string(threads));
  return c;
}

/// The resolved config lands in the output directory before anything runs.
fs::path prepare_out(const CommonArgs& args, const cfg::Config& c) {
  const fs::path out(args.out_dir);
  fs::create_directories(out);
  c.write(out / "config.resolved");
  return out;
}

void print_run_summary(const expt::CellResult& result) {
  std::cout << "cell " << result.name << ": termination="
            << train::to_string(result.run.termination)
            << " final_iteration=" << result.run.final_iteration
            << " final_loss=" << result.run.final_loss
            << " telemetry_records=" << result.run.telemetry.size() << "\n";
}

int cmd_single_run(const CommonArgs& args, train::Mode mode) {
  cfg::Config c = resolve_config(args);
  c.set("train.mode", train::to_string(mode));
  const fs::path out = prepare_out(args, c);

  cfg::Config cell_cfg = c;
  expt::ExperimentPlan plan;
  expt::Cell cell;
  cell.name = "run";
  cell.dataset = expt::dataset_from_config(cell_cfg);
  cell.spec = expt::model_from_config(cell_cfg, cell.dataset.n_c,
                                      static_cast<int>(cell.dataset.input_size()));
  cell.config = expt::train_config_from_config(cell_cfg);
  cell.resolved = expt::resolve_cell_config(cell_cfg);
  cell.resolved.set("data.n_c", std::to_string(cell.dataset.n_c));
  cell.resolved.set("model.seed", std::to_string(cell.spec.seed));
  cell.resolved.set("train.mode", train::to_string(mode));

  const auto result = expt::run_cell(cell, out);
  print_run_summary(result);

  if (mode == train::Mode::gradient_flow) {
    plot::TelemetrySet set{{result.name, result.run.telemetry}};
    plot::emit_lambda_figure(set, "lambda_1 under gradient flow", out / "fig_flow_lambda.svg",
                             out / "fig_flow_lambda.tsv");
  } else if (!result.run.telemetry.empty()) {
    plot::TelemetrySet set{{result.name, result.run.telemetry}};
    std::vector<int> k_tops{std::max(1, result.k_top)};
    plot::emit_rho_pair_figure(set, k_tops, "Stability ratios", out / "fig_rho.svg",
                               out / "fig_rho.tsv");
    plot::emit_grad_norm_figure(set, "Gradient concentration", out / "fig_grad_norms.svg",
                                out / "fig_grad_norms.tsv");
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  auto plan = expt::make_eos_sweep_plan(c, args.out_dir);
  const auto results = expt::run_eos_sweep(plan);
  for (const auto& r : results) print_run_summary(r);

  // Attribution table over the sweep's qualifying telemetry.
  plot::TelemetrySet set;
  for (const auto& r : results) set.emplace_back(r.name, r.run.telemetry);
  const auto rows = expt::attribution_table(set, c.get_double("table.rho_gate", 0.7),
                                            static_cast<int>(c.get_int("table.min_points", 3)));
  expt::write_attribution_table(rows, plan.out_dir / "attribution.tsv",
                                plan.out_dir / "attribution.txt");
  return 0;
}

int cmd_classes(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  auto plan = expt::make_class_sweep_plan(c, args.out_dir);
  const auto results = expt::run_class_sweep(plan);
  for (const auto& r : results) print_run_summary(r);
  return 0;
}

int cmd_entry(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  auto plan = expt::make_entry_plan(c, args.out_dir);
  const auto result = expt::run_fine_grained_entry(plan);
  print_run_summary(result);
  return 0;
}

int cmd_flow(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  if (c.has("flow.sizes")) {
    auto plan = expt::make_flow_scaling_plan(c, args.out_dir);
    const auto result = expt::run_flow_scaling(plan);
    for (const auto& r : result.cells) print_run_summary(r);
    std::cout << "peak lambda_1 fit: slope=" << result.slope << " intercept=" << result.intercept
              << " r_squared=" << result.r_squared << "\n";
    return 0;
  }
  return cmd_single_run(args, train::Mode::gradient_flow);
}

/// Rebuilds a RunRecord (telemetry + snapshots) from a cell directory.
struct LoadedRun {
  cfg::Config config;
  model::ModelSpec spec;
  data::LabeledDataset dataset;
  train::TrainConfig train_cfg;
  train::RunRecord run;
};

LoadedRun load_run_dir(const fs::path& dir) {
  LoadedRun lr;
  lr.config = cfg::Config::from_file(dir / "config.resolved");
  lr.dataset = expt::dataset_from_config(lr.config);
  {
    std::ifstream ms(dir / "model.spec", std::ios::binary);
    if (!ms) throw IoError("cannot open " + (dir / "model.spec").string());
    std::string text((std::istreambuf_iterator<char>(ms)), std::istreambuf_iterator<char>());
    lr.spec = model::from_text(text);
  }
  lr.train_cfg = expt::train_config_from_config(lr.config);
  lr.run.telemetry = io::read_telemetry(dir / "telemetry.txt");

  const fs::path snap_dir = dir / "snapshots";
  if (fs::exists(snap_dir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(snap_dir))
      if (e.path().extension() == ".snap") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto snap = io::read_snapshot(f);
      const auto it = snap.meta.find("iteration");
      if (it == snap.meta.end())
        throw IoError(f.string() + ": snapshot metadata lacks an iteration");
      lr.run.snapshots.emplace(std::stoll(it->second), snap.theta);
    }
  }
  return lr;
}

int cmd_cusp(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  const std::string run_dir = c.get_string("cusp.run");
  const fs::path out = prepare_out(args, c);

  LoadedRun lr = load_run_dir(run_dir);
  const int n_delta = static_cast<int>(c.get_int("cusp.n_delta", 121));
  const double half_width = c.get_double("cusp.half_width", 0.003);
  const auto profile =
      expt::run_cusp_probe(lr.run, lr.spec, lr.dataset, lr.train_cfg, n_delta, half_width);

  plot::emit_cusp_figure(profile.deltas, profile.delta_loss,
                         "Loss along h_1 at peak curvature", out / "fig5_cusp.svg",
                         out / "fig5_cusp.tsv");
  std::ofstream sum(out / "cusp_summary.txt", std::ios::binary);
  sum << "peak_iteration=" << profile.peak_iteration << "\n"
      << "snapshot_iteration=" << profile.snapshot_iteration << "\n"
      << "lambda1_at_star=" << profile.lambda1_at_star << "\n"
      << "n_delta=" << profile.deltas.size() << "\n"
      << "half_width=" << half_width << "\n";
  std::cout << "cusp profile: peak at iteration " << profile.peak_iteration << ", snapshot "
            << profile.snapshot_iteration << ", lambda1 " << profile.lambda1_at_star << ", "
            << profile.deltas.size() << " samples\n";
  return 0;
}

int cmd_table(const CommonArgs& args) {
  cfg::Config c = resolve_config(args);
  const fs::path out = prepare_out(args, c);

  plot::TelemetrySet set;
  for (const auto& root : c.get_string_list("table.runs")) {
    const fs::path p(root);
    std::vector<fs::path> cell_dirs;
    if (fs::exists(p / "cells")) {
      for (const auto& e : fs::directory_iterator(p / "cells"))
        if (e.is_directory()) cell_dirs.push_back(e.path());
      std::sort(cell_dirs.begin(), cell_dirs.end());
    } else {
      cell_dirs.push_back(p);
    }
    for (const auto& d : cell_dirs)
      set.emplace_back(d.filename().string(), io::read_telemetry(d / "telemetry.txt"));
  }

  const auto rows = expt::attribution_table(set, c.get_double("table.rho_gate", 0.7),
                                            static_cast<int>(c.get_int("table.min_points", 3)));
  expt::write_attribution_table(rows, out / "attribution.tsv", out / "attribution.txt");
  std::ifstream txt(out / "attribution.txt");
  std::cout << txt.rdbuf();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eosprobe: curvature telemetry for full-batch gradient descent"};
  app.set_version_flag("--version", std::string("eosprobe ") + kVersion);
  app.require_subcommand(1);

  CommonArgs train_args, flow_args, sweep_args, classes_args, entry_args, cusp_args, table_args;
  auto* sc_train = app.add_subcommand("train", "one fixed-learning-rate training run");
  add_common(sc_train, train_args, "out-train");
  auto* sc_flow = app.add_subcommand(
      "flow", "gradient-flow (adaptive step) run, or a dataset-size scaling sweep");
  add_common(sc_flow, flow_args, "out-flow");
  auto* sc_sweep = app.add_subcommand("sweep", "learning-rate x architecture sweep");
  add_common(sc_sweep, sweep_args, "out-sweep");
  auto* sc_classes = app.add_subcommand("classes", "class-count sweep");
  add_common(sc_classes, classes_args, "out-classes");
  auto* sc_entry = app.add_subcommand("entry", "fine-grained edge-of-stability entry run");
  add_common(sc_entry, entry_args, "out-entry");
  auto* sc_cusp = app.add_subcommand("cusp", "cusp profile at peak curvature of a stored run");
  add_common(sc_cusp, cusp_args, "out-cusp");
  auto* sc_table = app.add_subcommand("table", "attribution table from stored telemetry");
  add_common(sc_table, table_args, "out-table");
  auto* sc_verify = app.add_subcommand("verify", "run the built-in oracle suite");
  int verify_threads = 0;
  sc_verify->add_option("--threads", verify_threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_train->parsed()) return cmd_single_run(train_args, train::Mode::fixed_lr);
    if (sc_flow->parsed()) return cmd_flow(flow_args);
    if (sc_sweep->parsed()) return cmd_sweep(sweep_args);
    if (sc_classes->parsed()) return cmd_classes(classes_args);
    if (sc_entry->parsed()) return cmd_entry(entry_args);
    if (sc_cusp->parsed()) return cmd_cusp(cusp_args);
    if (sc_table->parsed()) return cmd_table(table_args);
    if (sc_verify->parsed()) {
      if (verify_threads > 0) set_thread_count(verify_threads);
      return verify::run_verify(std::cout) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
