#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace eosprobe::train {

/// One analysis snapshot taken at a telemetry boundary (or every iteration
/// in gradient-flow mode). Vector fields hold one entry per tracked
/// eigenpair; eta_star/rho are NaN where the curvature is too small for the
/// ratio to be defined, and the measured step attributions are NaN when not
/// taken at this record.
struct TelemetryRecord {
  std::int64_t iteration = 0;
  double t = 0.0;
  double eta = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  int cadence = 1;
  int k_top = 0;  // leading eigenvectors spanning the top subspace
  bool spectral_converged = false;
  bool lambda_stale = false;
  std::vector<double> lambda;
  std::vector<double> eta_star;
  std::vector<double> rho;
  std::vector<double> coord;
  double top_norm = std::numeric_limits<double>::quiet_NaN();
  double bulk_norm = std::numeric_limits<double>::quiet_NaN();
  double delta_top = std::numeric_limits<double>::quiet_NaN();
  double delta_bulk = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace eosprobe::train

namespace eosprobe::io {

/// Line-oriented self-describing text: one `key=value ...` record per line
/// under a single header line, floats at full round-trip precision. Readable
/// mid-run (append-safe) and diffable.
void write_telemetry(const std::vector<train::TelemetryRecord>& records,
                     const std::filesystem::path& path);

std::string telemetry_to_string(const std::vector<train::TelemetryRecord>& records);

std::vector<train::TelemetryRecord> read_telemetry(const std::filesystem::path& path);

std::vector<train::TelemetryRecord> telemetry_from_string(const std::string& text);

}  // namespace eosprobe::io
