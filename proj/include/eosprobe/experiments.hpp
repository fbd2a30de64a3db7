#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eosprobe/config.hpp"
#include "eosprobe/dataset.hpp"
#include "eosprobe/figures.hpp"
#include "eosprobe/model.hpp"
#include "eosprobe/trainer.hpp"

namespace eosprobe::expt {

enum class Family {
  eos_sweep,
  class_sweep,
  fine_grained_entry,
  flow_scaling,
  cusp_probe,
  attribution_table,
};

/// One independently reproducible grid cell: its resolved config alone
/// rebuilds the model, the dataset and the run.
struct Cell {
  std::string name;
  model::ModelSpec spec;
  data::LabeledDataset dataset;
  train::TrainConfig config;
  cfg::Config resolved;
};

struct ExperimentPlan {
  Family family = Family::eos_sweep;
  std::vector<Cell> cells;
  std::filesystem::path out_dir;
  int workers = 1;
  cfg::Config resolved;  // plan-level resolved config
};

struct CellResult {
  std::string name;
  train::RunRecord run;
  int k_top = 0;
  int n_c = 0;
};

/// Model/dataset/train-config construction from a flat config (model.*,
/// data.*, train.* keys). Shared by all plan builders and the CLI.
model::ModelSpec model_from_config(const cfg::Config& c, int n_c, int input_dim_hint);
data::LabeledDataset dataset_from_config(const cfg::Config& c);
train::TrainConfig train_config_from_config(const cfg::Config& c);

/// Serializes the cell-defining keys of `c` into a fresh config that rebuilds
/// exactly this cell.
cfg::Config resolve_cell_config(const cfg::Config& base);

ExperimentPlan make_eos_sweep_plan(const cfg::Config& c, const std::filesystem::path& out);
ExperimentPlan make_class_sweep_plan(const cfg::Config& c, const std::filesystem::path& out);
ExperimentPlan make_entry_plan(const cfg::Config& c, const std::filesystem::path& out);
ExperimentPlan make_flow_scaling_plan(const cfg::Config& c, const std::filesystem::path& out);

/// Trains one cell and writes its directory atomically (<out>/cells/<name>):
/// config.resolved, model.spec, telemetry.txt, snapshots/, summary.txt.
CellResult run_cell(const Cell& cell, const std::filesystem::path& out_dir);

/// Runs every cell of the plan through a work queue (cells are independent;
/// divergent cells are recorded and the sweep continues) and emits the
/// family's figures and long-format tables.
std::vector<CellResult> run_eos_sweep(const ExperimentPlan& plan);
std::vector<CellResult> run_class_sweep(const ExperimentPlan& plan);
CellResult run_fine_grained_entry(const ExperimentPlan& plan);

struct FlowScalingRow {
  int n_d = 0;
  double peak_lambda1 = 0.0;
  double t_peak = 0.0;
  std::int64_t iter_peak = 0;
};

struct FlowScalingResult {
  std::vector<CellResult> cells;
  std::vector<FlowScalingRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // reported, never asserted
};

std::vector<FlowScalingRow> peak_table(const std::vector<CellResult>& cells,
                                       const std::vector<int>& sizes);
FlowScalingResult run_flow_scaling(const ExperimentPlan& plan);

struct CuspProfile {
  std::vector<double> deltas;  // symmetric grid, exact 0 center, exact ends
  std::vector<double> delta_loss;
  std::int64_t peak_iteration = 0;      // telemetry argmax of lambda_1
  std::int64_t snapshot_iteration = 0;  // nearest stored snapshot
  double lambda1_at_star = 0.0;
};

/// Restores theta* at the snapshot nearest to peak lambda_1, recomputes h_1
/// there and profiles the loss along it. Every profile value is a fresh
/// full-batch loss evaluation.
CuspProfile run_cusp_probe(const train::RunRecord& run, const model::ModelSpec& spec,
                           const data::LabeledDataset& dataset, const train::TrainConfig& cfg,
                           int n_delta, double half_width);

struct AttributionRow {
  std::string cell;
  double eta = 0.0;
  int points = 0;
  double mean_top = 0.0, std_top = 0.0;
  double mean_bulk = 0.0, std_bulk = 0.0;
};

/// Table-1-style summary: over telemetry points with rho_{k_top} > rho_gate,
/// mean and sample std of the measured step attributions; cells with fewer
/// than min_points qualifying points are omitted.
std::vector<AttributionRow> attribution_table(const plot::TelemetrySet& set, double rho_gate,
                                              int min_points);

void write_attribution_table(const std::vector<AttributionRow>& rows,
                             const std::filesystem::path& tsv_path,
                             const std::filesystem::path& txt_path);

const char* to_string(Family f);

}  // namespace eosprobe::expt
