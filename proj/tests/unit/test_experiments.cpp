#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eosprobe/config.hpp"
#include "eosprobe/errors.hpp"
#include "eosprobe/experiments.hpp"
#include "eosprobe/snapshot.hpp"
#include "eosprobe/svg_plot.hpp"
#include "eosprobe/telemetry.hpp"

using namespace eosprobe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

cfg::Config tiny_run_config() {
  return cfg::Config::from_string(
      "seed=5\n"
      "data.kind=synthetic\n"
      "data.n_d=12\n"
      "data.n_c=2\n"
      "data.dim=3\n"
      "data.separation=2\n"
      "model.arch=tinymlp\n"
      "model.hidden=5\n"
      "model.activation=tanh\n"
      "train.eta=0.05\n"
      "train.stop_loss=0.0001\n"
      "train.max_iters=40\n"
      "train.telemetry_every=10\n"
      "train.snapshot_every=20\n"
      "train.k=3\n");
}

train::TelemetryRecord gated_record(std::int64_t n, double rho1, double dtop, double dbulk) {
  train::TelemetryRecord r;
  r.iteration = n;
  r.eta = 0.01;
  r.k_top = 1;
  r.rho = {rho1, rho1 / 2};
  r.delta_top = dtop;
  r.delta_bulk = dbulk;
  return r;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("a cell writes a self-contained directory and reruns bit-identically") {
    const auto out1 = temp_dir("eosprobe_cell_a");
    const auto out2 = temp_dir("eosprobe_cell_b");
    const auto base = tiny_run_config();

    expt::Cell cell;
    cell.name = "tiny";
    cell.dataset = expt::dataset_from_config(base);
    cell.spec = expt::model_from_config(base, cell.dataset.n_c,
                                        static_cast<int>(cell.dataset.input_size()));
    cell.config = expt::train_config_from_config(base);
    cell.resolved = expt::resolve_cell_config(base);

    const auto r1 = expt::run_cell(cell, out1);
    const auto r2 = expt::run_cell(cell, out2);
    CHECK(slurp(out1 / "cells/tiny/telemetry.txt") == slurp(out2 / "cells/tiny/telemetry.txt"));
    CHECK(slurp(out1 / "cells/tiny/config.resolved") ==
          slurp(out2 / "cells/tiny/config.resolved"));
    CHECK(slurp(out1 / "cells/tiny/model.spec") == slurp(out2 / "cells/tiny/model.spec"));

    SUBCASE("the stored cell config alone rebuilds the same run") {
      const auto stored = cfg::Config::from_file(out1 / "cells/tiny/config.resolved");
      expt::Cell rebuilt;
      rebuilt.name = "tiny";
      rebuilt.dataset = expt::dataset_from_config(stored);
      rebuilt.spec = expt::model_from_config(stored, rebuilt.dataset.n_c,
                                             static_cast<int>(rebuilt.dataset.input_size()));
      rebuilt.config = expt::train_config_from_config(stored);
      rebuilt.resolved = stored;
      const auto out3 = temp_dir("eosprobe_cell_c");
      expt::run_cell(rebuilt, out3);
      CHECK(slurp(out3 / "cells/tiny/telemetry.txt") ==
            slurp(out1 / "cells/tiny/telemetry.txt"));
      fs::remove_all(out3);
    }

    SUBCASE("snapshots on disk restore bit-identically") {
      const auto snap = io::read_snapshot(out1 / "cells/tiny/snapshots/iter_00000020.snap");
      CHECK(snap.theta == r1.run.restore(20));
      CHECK(snap.meta.at("iteration") == "20");
    }

    (void)r2;
    fs::remove_all(out1);
    fs::remove_all(out2);
  }

  TEST_CASE("rho ordering integrity holds on emitted telemetry") {
    const auto out = temp_dir("eosprobe_cell_rho");
    const auto base = tiny_run_config();
    expt::Cell cell;
    cell.name = "tiny";
    cell.dataset = expt::dataset_from_config(base);
    cell.spec = expt::model_from_config(base, cell.dataset.n_c,
                                        static_cast<int>(cell.dataset.input_size()));
    cell.config = expt::train_config_from_config(base);
    cell.resolved = expt::resolve_cell_config(base);
    expt::run_cell(cell, out);

    const auto records = io::read_telemetry(out / "cells/tiny/telemetry.txt");
    REQUIRE(!records.empty());
    for (const auto& r : records)
      for (std::size_t i = 1; i < r.rho.size(); ++i)
        if (std::isfinite(r.rho[i - 1]) && std::isfinite(r.rho[i]))
          CHECK(r.rho[i - 1] >= r.rho[i]);
    fs::remove_all(out);
  }

  TEST_CASE("cusp probe grid is exact and profile values are fresh evaluations") {
    const auto base = tiny_run_config();
    expt::Cell cell;
    cell.name = "probe";
    cell.dataset = expt::dataset_from_config(base);
    cell.spec = expt::model_from_config(base, cell.dataset.n_c,
                                        static_cast<int>(cell.dataset.input_size()));
    cell.config = expt::train_config_from_config(base);
    cell.config.stop_loss = 1e-9;  // run to the cap so snapshots exist
    cell.config.max_iters = 30;

    const auto run = train::train(cell.config, cell.spec, cell.dataset);
    const auto profile = expt::run_cusp_probe(run, cell.spec, cell.dataset, cell.config,
                                              121, 0.003);

    REQUIRE(profile.deltas.size() == 121);
    CHECK(profile.deltas.front() == -0.003);
    CHECK(profile.deltas.back() == 0.003);
    CHECK(profile.deltas[60] == 0.0);
    CHECK(profile.delta_loss[60] == 0.0);

    SUBCASE("profile equals independent re-evaluation bit for bit") {
      const ad::LossGraph graph(cell.spec, cell.dataset.shape);
      const ParamVector& theta_star = run.restore(profile.snapshot_iteration);
      const auto hvp_fn = [&](const ParamVector& v) {
        return graph.hvp(theta_star, v, cell.dataset);
      };
      const auto eig = spectral::top_k_eigenpairs(hvp_fn, graph.param_count(),
                                                  std::min<int>(cell.config.k,
                                                                static_cast<int>(graph.param_count())),
                                                  cell.config.spectral_tol,
                                                  cell.config.spectral_max_iters);
      const double base_loss = graph.eval_loss(theta_star, cell.dataset);
      for (std::size_t i : {std::size_t(0), std::size_t(17), std::size_t(60), std::size_t(90),
                            std::size_t(120)}) {
        ParamVector moved = theta_star;
        axpy(profile.deltas[i], eig.eigenvectors.front(), moved);
        const double fresh = graph.eval_loss(moved, cell.dataset) - base_loss;
        CHECK(fresh == profile.delta_loss[i]);
      }
    }

    SUBCASE("missing snapshots are an error") {
      train::RunRecord empty;
      empty.telemetry = run.telemetry;
      CHECK_THROWS_AS(
          expt::run_cusp_probe(empty, cell.spec, cell.dataset, cell.config, 11, 0.003), Error);
    }
  }

  TEST_CASE("attribution table gates on rho and omits thin cells") {
    plot::TelemetrySet set;
    // Cell A: 4 qualifying points.
    std::vector<train::TelemetryRecord> a;
    a.push_back(gated_record(0, 0.9, 0.01, -0.002));
    a.push_back(gated_record(1, 0.95, 0.02, -0.001));
    a.push_back(gated_record(2, 0.71, 0.00, -0.003));
    a.push_back(gated_record(3, 1.10, -0.01, -0.004));
    a.push_back(gated_record(4, 0.50, 9.0, 9.0));  // below the gate, ignored
    set.emplace_back("cell_a", a);
    // Cell B: only 2 qualifying points -> omitted.
    std::vector<train::TelemetryRecord> b;
    b.push_back(gated_record(0, 0.9, 0.1, -0.1));
    b.push_back(gated_record(1, 0.9, 0.1, -0.1));
    b.push_back(gated_record(2, 0.2, 0.1, -0.1));
    set.emplace_back("cell_b", b);
    // Cell C: all-zero attributions.
    std::vector<train::TelemetryRecord> c;
    for (int i = 0; i < 3; ++i) c.push_back(gated_record(i, 0.8, 0.0, 0.0));
    set.emplace_back("cell_c", c);

    const auto rows = expt::attribution_table(set, 0.7, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cell == "cell_a");
    CHECK(rows[0].points == 4);
    CHECK(rows[0].mean_bulk == doctest::Approx(-0.0025));
    CHECK(rows[1].cell == "cell_c");
    CHECK(rows[1].mean_top == 0.0);
    CHECK(rows[1].std_top == 0.0);
    CHECK(rows[1].mean_bulk == 0.0);
  }

  TEST_CASE("flow peak table finds the first global maximum") {
    expt::CellResult cell;
    cell.name = "nd32";
    for (int i = 0; i < 6; ++i) {
      train::TelemetryRecord r;
      r.iteration = i;
      r.t = 0.1 * i;
      r.lambda = {i < 3 ? 10.0 * i : 30.0 - 5.0 * (i - 3)};
      cell.run.telemetry.push_back(r);
    }
    // lambda series: 0,10,20,30(first max),25,20 -> wait: i<3 gives 0,10,20; i=3:30, i=4:25, i=5:20
    const auto rows = expt::peak_table({cell}, {32});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].peak_lambda1 == doctest::Approx(30.0));
    CHECK(rows[0].iter_peak == 3);
    CHECK(rows[0].n_d == 32);
  }

  TEST_CASE("svg writer draws series and rejects empty figures") {
    const auto out = temp_dir("eosprobe_svg");
    plot::Figure fig;
    fig.title = "test";
    fig.xlabel = "x";
    fig.ylabel = "y";
    plot::Series s;
    s.label = "curve";
    for (int i = 1; i <= 20; ++i) {
      s.x.push_back(i);
      s.y.push_back(i * i);
    }
    fig.series.push_back(s);
    plot::write_svg(fig, out / "ok.svg");
    const auto text = slurp(out / "ok.svg");
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);

    plot::Figure empty;
    empty.title = "empty";
    CHECK_THROWS_AS(plot::write_svg(empty, out / "bad.svg"), IoError);

    plot::Figure nan_only;
    nan_only.title = "nan";
    plot::Series n;
    n.label = "nan";
    n.x = {1.0, 2.0};
    n.y = {std::nan(""), std::nan("")};
    nan_only.series.push_back(n);
    CHECK_THROWS_AS(plot::write_svg(nan_only, out / "bad2.svg"), IoError);
    fs::remove_all(out);
  }

  TEST_CASE("class sweep plan covers the requested grid plus the full set") {
    auto c = cfg::Config::from_string(
        "seed=3\n"
        "data.kind=synthetic\n"
        "data.n_d=30\n"
        "data.n_c=5\n"
        "data.dim=5\n"
        "data.separation=2\n"
        "model.hidden=4\n"
        "train.eta=0.05\n"
        "train.max_iters=5\n"
        "train.telemetry_every=5\n"
        "train.k=2\n"
        "classes.sizes=2,3\n");
    const auto plan = expt::make_class_sweep_plan(c, temp_dir("eosprobe_classes_plan"));
    REQUIRE(plan.cells.size() == 3);  // 2, 3, full(5)
    CHECK(plan.cells[0].dataset.n_c == 2);
    CHECK(plan.cells[1].dataset.n_c == 3);
    CHECK(plan.cells[2].dataset.n_c == 5);
    fs::remove_all(plan.out_dir);
  }
}
