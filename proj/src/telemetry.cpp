#include "eosprobe/telemetry.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "eosprobe/errors.hpp"

namespace eosprobe::io {

namespace {

constexpr const char* kHeader = "# eosprobe-telemetry v1";

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

double parse_double(const std::string& s, int lineno) {
  const char* c = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(c, &end);
  if (end == c || *end != '\0')
    throw IoError("telemetry line " + std::to_string(lineno) + ": bad float '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s, int lineno) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(parse_double(tok, lineno));
  return out;
}

}  // namespace

std::string telemetry_to_string(const std::vector<train::TelemetryRecord>& records) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& r : records) {
    out += "iteration=" + std::to_string(r.iteration);
    out += " t=" + fmt(r.t);
    out += " eta=" + fmt(r.eta);
    out += " loss=" + fmt(r.loss);
    out += " grad_norm=" + fmt(r.grad_norm);
    out += " cadence=" + std::to_string(r.cadence);
    out += " k_top=" + std::to_string(r.k_top);
    out += " spectral_converged=" + std::to_string(r.spectral_converged ? 1 : 0);
    out += " lambda_stale=" + std::to_string(r.lambda_stale ? 1 : 0);
    out += " lambda=" + fmt_list(r.lambda);
    out += " eta_star=" + fmt_list(r.eta_star);
    out += " rho=" + fmt_list(r.rho);
    out += " coord=" + fmt_list(r.coord);
    out += " top_norm=" + fmt(r.top_norm);
    out += " bulk_norm=" + fmt(r.bulk_norm);
    out += " delta_top=" + fmt(r.delta_top);
    out += " delta_bulk=" + fmt(r.delta_bulk);
    out += '\n';
  }
  return out;
}

void write_telemetry(const std::vector<train::TelemetryRecord>& records,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << telemetry_to_string(records);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<train::TelemetryRecord> telemetry_from_string(const std::string& text) {
  if (text.empty()) throw IoError("telemetry text is empty (missing header)");
  if (text.back() != '\n') {
    // Count lines to name the offender.
    int lines = 1;
    for (char c : text)
      if (c == '\n') ++lines;
    throw IoError("telemetry line " + std::to_string(lines) + " is truncated (no newline)");
  }

  std::vector<train::TelemetryRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kHeader)
        throw IoError("telemetry line 1: expected header '" + std::string(kHeader) + "'");
      saw_header = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;

    train::TelemetryRecord r;
    bool have_iteration = false;
    std::istringstream fields(line);
    std::string kv;
    while (fields >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw IoError("telemetry line " + std::to_string(lineno) + ": field '" + kv +
                      "' has no '='");
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "iteration") {
        r.iteration = std::stoll(val);
        have_iteration = true;
      } else if (key == "t")
        r.t = parse_double(val, lineno);
      else if (key == "eta")
        r.eta = parse_double(val, lineno);
      else if (key == "loss")
        r.loss = parse_double(val, lineno);
      else if (key == "grad_norm")
        r.grad_norm = parse_double(val, lineno);
      else if (key == "cadence")
        r.cadence = std::stoi(val);
      else if (key == "k_top")
        r.k_top = std::stoi(val);
      else if (key == "spectral_converged")
        r.spectral_converged = val == "1";
      else if (key == "lambda_stale")
        r.lambda_stale = val == "1";
      else if (key == "lambda")
        r.lambda = parse_list(val, lineno);
      else if (key == "eta_star")
        r.eta_star = parse_list(val, lineno);
      else if (key == "rho")
        r.rho = parse_list(val, lineno);
      else if (key == "coord")
        r.coord = parse_list(val, lineno);
      else if (key == "top_norm")
        r.top_norm = parse_double(val, lineno);
      else if (key == "bulk_norm")
        r.bulk_norm = parse_double(val, lineno);
      else if (key == "delta_top")
        r.delta_top = parse_double(val, lineno);
      else if (key == "delta_bulk")
        r.delta_bulk = parse_double(val, lineno);
      else
        throw IoError("telemetry line " + std::to_string(lineno) + ": unknown field '" + key +
                      "'");
    }
    if (!have_iteration)
      throw IoError("telemetry line " + std::to_string(lineno) + ": missing iteration field");
    out.push_back(std::move(r));
  }
  if (!saw_header) throw IoError("telemetry file has no header line");
  return out;
}

std::vector<train::TelemetryRecord> read_telemetry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return telemetry_from_string(text);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace eosprobe::io
