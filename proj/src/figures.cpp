#include "eosprobe/figures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "eosprobe/errors.hpp"

namespace eosprobe::plot {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double nan_() { return std::numeric_limits<double>::quiet_NaN(); }

double rho_at(const train::TelemetryRecord& r, int index1) {
  const std::size_t i = static_cast<std::size_t>(index1 - 1);
  return (index1 >= 1 && i < r.rho.size()) ? r.rho[i] : nan_();
}

}  // namespace

void write_long_table(const std::vector<LongRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "cell\tseries\titeration\tt\tvalue\n";
  for (const auto& r : rows)
    out << r.cell << '\t' << r.series << '\t' << r.iteration << '\t' << fmt(r.t) << '\t'
        << fmt(r.value) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void emit_rho_pair_figure(const TelemetrySet& set, const std::vector<int>& k_top,
                          const std::string& title, const std::filesystem::path& svg_path,
                          const std::filesystem::path& table_path) {
  if (set.empty()) throw IoError("emit_rho_pair_figure: empty telemetry set");
  if (k_top.size() != set.size())
    throw IoError("emit_rho_pair_figure: one k_top per cell required");

  Figure fig;
  fig.title = title;
  fig.xlabel = "t = n*eta";
  fig.ylabel = "rho";
  fig.logy = true;
  std::vector<LongRow> rows;

  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& [name, records] = set[c];
    const int kt = k_top[c];
    Series solid, dotted;
    solid.label = name + " rho_" + std::to_string(kt);
    solid.color = static_cast<int>(c);
    dotted.label = name + " rho_" + std::to_string(kt + 1);
    dotted.style = LineStyle::dotted;
    dotted.color = static_cast<int>(c);
    for (const auto& r : records) {
      solid.x.push_back(r.t);
      solid.y.push_back(rho_at(r, kt));
      dotted.x.push_back(r.t);
      dotted.y.push_back(rho_at(r, kt + 1));
      rows.push_back({name, "rho_" + std::to_string(kt), r.iteration, r.t, rho_at(r, kt)});
      rows.push_back(
          {name, "rho_" + std::to_string(kt + 1), r.iteration, r.t, rho_at(r, kt + 1)});
    }
    fig.series.push_back(std::move(solid));
    fig.series.push_back(std::move(dotted));
  }

  write_long_table(rows, table_path);
  write_svg(fig, svg_path);
}

void emit_grad_norm_figure(const TelemetrySet& set, const std::string& title,
                           const std::filesystem::path& svg_path,
                           const std::filesystem::path& table_path) {
  if (set.empty()) throw IoError("emit_grad_norm_figure: empty telemetry set");

  Figure fig;
  fig.title = title;
  fig.xlabel = "t = n*eta";
  fig.ylabel = "gradient component norm";
  fig.logy = true;
  std::vector<LongRow> rows;

  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& [name, records] = set[c];
    Series solid, dotted;
    solid.label = name + " |P_top g|";
    solid.color = static_cast<int>(c);
    dotted.label = name + " |P_bulk g|";
    dotted.style = LineStyle::dotted;
    dotted.color = static_cast<int>(c);
    for (const auto& r : records) {
      solid.x.push_back(r.t);
      solid.y.push_back(r.top_norm);
      dotted.x.push_back(r.t);
      dotted.y.push_back(r.bulk_norm);
      rows.push_back({name, "top_norm", r.iteration, r.t, r.top_norm});
      rows.push_back({name, "bulk_norm", r.iteration, r.t, r.bulk_norm});
    }
    fig.series.push_back(std::move(solid));
    fig.series.push_back(std::move(dotted));
  }

  write_long_table(rows, table_path);
  write_svg(fig, svg_path);
}

void emit_entry_figures(const std::vector<train::TelemetryRecord>& records, int k_top,
                        const std::filesystem::path& rho_svg_path,
                        const std::filesystem::path& coord_svg_path,
                        const std::filesystem::path& table_path) {
  if (records.empty()) throw IoError("emit_entry_figures: empty telemetry");

  Figure rho_fig, coord_fig;
  rho_fig.title = "Entering the edge of stability: rho_i";
  rho_fig.xlabel = "t = n*eta";
  rho_fig.ylabel = "rho_i";
  rho_fig.logy = true;
  coord_fig.title = "Entering the edge of stability: |d_i|";
  coord_fig.xlabel = "t = n*eta";
  coord_fig.ylabel = "|d_i| = |h_i . g|";
  coord_fig.logy = true;
  std::vector<LongRow> rows;

  for (int i = 1; i <= k_top; ++i) {
    Series rs, cs;
    rs.label = "rho_" + std::to_string(i);
    rs.color = i - 1;
    cs.label = "|d_" + std::to_string(i) + "|";
    cs.color = i - 1;
    for (const auto& r : records) {
      rs.x.push_back(r.t);
      rs.y.push_back(rho_at(r, i));
      const double d = (static_cast<std::size_t>(i - 1) < r.coord.size())
                           ? std::abs(r.coord[static_cast<std::size_t>(i - 1)])
                           : nan_();
      cs.x.push_back(r.t);
      cs.y.push_back(d);
      rows.push_back({"entry", rs.label, r.iteration, r.t, rho_at(r, i)});
      rows.push_back({"entry", "abs_d_" + std::to_string(i), r.iteration, r.t, d});
    }
    rho_fig.series.push_back(std::move(rs));
    coord_fig.series.push_back(std::move(cs));
  }

  write_long_table(rows, table_path);
  write_svg(rho_fig, rho_svg_path);
  write_svg(coord_fig, coord_svg_path);
}

void emit_cusp_figure(const std::vector<double>& deltas, const std::vector<double>& dloss,
                      const std::string& title, const std::filesystem::path& svg_path,
                      const std::filesystem::path& table_path) {
  if (deltas.empty() || deltas.size() != dloss.size())
    throw IoError("emit_cusp_figure: empty or mismatched profile");

  Figure fig;
  fig.title = title;
  fig.xlabel = "displacement along h_1";
  fig.ylabel = "loss change";
  Series s;
  s.label = "L(theta*+d h1) - L(theta*)";
  s.x = deltas;
  s.y = dloss;
  fig.series.push_back(std::move(s));

  std::vector<LongRow> rows;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    rows.push_back({"cusp", "delta_loss", static_cast<std::int64_t>(i), deltas[i], dloss[i]});
  write_long_table(rows, table_path);
  write_svg(fig, svg_path);
}

void emit_lambda_figure(const TelemetrySet& set, const std::string& title,
                        const std::filesystem::path& svg_path,
                        const std::filesystem::path& table_path) {
  if (set.empty()) throw IoError("emit_lambda_figure: empty telemetry set");

  Figure fig;
  fig.title = title;
  fig.xlabel = "t";
  fig.ylabel = "lambda_1";
  fig.logy = true;
  std::vector<LongRow> rows;

  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& [name, records] = set[c];
    Series s;
    s.label = name;
    s.color = static_cast<int>(c);
    for (const auto& r : records) {
      const double l1 = r.lambda.empty() ? nan_() : r.lambda.front();
      s.x.push_back(r.t);
      s.y.push_back(l1);
      rows.push_back({name, "lambda_1", r.iteration, r.t, l1});
    }
    fig.series.push_back(std::move(s));
  }

  write_long_table(rows, table_path);
  write_svg(fig, svg_path);
}

}  // namespace eosprobe::plot
