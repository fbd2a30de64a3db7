#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eosprobe/svg_plot.hpp"
#include "eosprobe/telemetry.hpp"

namespace eosprobe::plot {

using TelemetrySet =
    std::vector<std::pair<std::string, std::vector<train::TelemetryRecord>>>;

/// Every figure writer also emits the underlying data as a long-format TSV
/// (one row per telemetry point per series: cell, series, iteration, t,
/// value), so plots can be rebuilt externally.
struct LongRow {
  std::string cell;
  std::string series;
  std::int64_t iteration;
  double t;
  double value;
};

void write_long_table(const std::vector<LongRow>& rows, const std::filesystem::path& path);

/// Stability-ratio pair per cell: solid rho_{k_top}, dotted rho_{k_top+1}
/// against t. k_top is given per cell (class sweeps vary it).
void emit_rho_pair_figure(const TelemetrySet& set, const std::vector<int>& k_top,
                          const std::string& title, const std::filesystem::path& svg_path,
                          const std::filesystem::path& table_path);

/// Gradient concentration: solid ||P_top g||, dotted ||P_bulk g|| against t.
void emit_grad_norm_figure(const TelemetrySet& set, const std::string& title,
                           const std::filesystem::path& svg_path,
                           const std::filesystem::path& table_path);

/// Fine-grained entry: rho_1..rho_{k_top} and |d_i| series for one run.
void emit_entry_figures(const std::vector<train::TelemetryRecord>& records, int k_top,
                        const std::filesystem::path& rho_svg_path,
                        const std::filesystem::path& coord_svg_path,
                        const std::filesystem::path& table_path);

/// Cusp profile: loss change against displacement along h1.
void emit_cusp_figure(const std::vector<double>& deltas, const std::vector<double>& dloss,
                      const std::string& title, const std::filesystem::path& svg_path,
                      const std::filesystem::path& table_path);

/// lambda_1(t) per gradient-flow run.
void emit_lambda_figure(const TelemetrySet& set, const std::string& title,
                        const std::filesystem::path& svg_path,
                        const std::filesystem::path& table_path);

}  // namespace eosprobe::plot
