#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eosprobe/errors.hpp"
#include "eosprobe/rng.hpp"
#include "eosprobe/snapshot.hpp"
#include "eosprobe/telemetry.hpp"

using namespace eosprobe;
using train::TelemetryRecord;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

TelemetryRecord random_record(NormalSampler& rng, std::uint64_t i) {
  TelemetryRecord r;
  r.iteration = static_cast<std::int64_t>(i * 7);
  r.t = rng.normal() * 10;
  r.eta = std::abs(rng.normal()) * 0.01;
  r.loss = std::abs(rng.normal());
  r.grad_norm = std::abs(rng.normal());
  r.cadence = static_cast<int>(1 + (rng.next_u64() % 500));
  r.k_top = static_cast<int>(rng.next_u64() % 4);
  r.spectral_converged = rng.next_u64() % 2;
  r.lambda_stale = rng.next_u64() % 2;
  const int k = static_cast<int>(rng.next_u64() % 5);
  for (int j = 0; j < k; ++j) {
    r.lambda.push_back(rng.normal() * 100);
    r.eta_star.push_back(rng.next_u64() % 4 ? 2.0 / r.lambda.back()
                                            : std::numeric_limits<double>::quiet_NaN());
    r.rho.push_back(rng.normal());
    r.coord.push_back(rng.normal());
  }
  r.top_norm = std::abs(rng.normal());
  r.bulk_norm = std::abs(rng.normal());
  r.delta_top = rng.next_u64() % 3 ? rng.normal() : std::numeric_limits<double>::quiet_NaN();
  r.delta_bulk = rng.normal();
  return r;
}

bool same_double(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

bool same_list(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_double(a[i], b[i])) return false;
  return true;
}

bool same_record(const TelemetryRecord& a, const TelemetryRecord& b) {
  return a.iteration == b.iteration && same_double(a.t, b.t) && same_double(a.eta, b.eta) &&
         same_double(a.loss, b.loss) && same_double(a.grad_norm, b.grad_norm) &&
         a.cadence == b.cadence && a.k_top == b.k_top &&
         a.spectral_converged == b.spectral_converged && a.lambda_stale == b.lambda_stale &&
         same_list(a.lambda, b.lambda) && same_list(a.eta_star, b.eta_star) &&
         same_list(a.rho, b.rho) && same_list(a.coord, b.coord) &&
         same_double(a.top_norm, b.top_norm) && same_double(a.bulk_norm, b.bulk_norm) &&
         same_double(a.delta_top, b.delta_top) && same_double(a.delta_bulk, b.delta_bulk);
}

}  // namespace

TEST_SUITE("telemetry_io") {
  TEST_CASE("write-read round trip preserves 1000 random records") {
    NormalSampler rng(99);
    std::vector<TelemetryRecord> records;
    for (std::uint64_t i = 0; i < 1000; ++i) records.push_back(random_record(rng, i));
    const auto path = temp_file("eosprobe_telemetry_roundtrip.txt");
    io::write_telemetry(records, path);
    const auto back = io::read_telemetry(path);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(same_record(records[i], back[i]));
    std::filesystem::remove(path);
  }

  TEST_CASE("empty record list writes just the header") {
    const auto path = temp_file("eosprobe_telemetry_empty.txt");
    io::write_telemetry({}, path);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == "# eosprobe-telemetry v1");
    std::string rest;
    CHECK(!std::getline(in, rest));
    CHECK(io::read_telemetry(path).empty());
    std::filesystem::remove(path);
  }

  TEST_CASE("truncated last line is reported with its line number") {
    const std::string text =
        "# eosprobe-telemetry v1\niteration=0 t=0 eta=0.1 loss=0.5";  // no newline
    try {
      io::telemetry_from_string(text);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
  }

  TEST_CASE("malformed line is reported with its line number") {
    const std::string text = "# eosprobe-telemetry v1\niteration=0 loss=ha\n";
    try {
      io::telemetry_from_string(text);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("missing header is rejected") {
    CHECK_THROWS_AS(io::telemetry_from_string("iteration=0\n"), IoError);
  }
}

TEST_SUITE("snapshot_io") {
  TEST_CASE("round trip is bit-identical, including meta") {
    NormalSampler rng(5);
    ParamVector theta(257);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = rng.normal() * 1e3;
    theta[3] = 0.0;
    theta[4] = -0.0;
    const auto path = temp_file("eosprobe_snapshot_roundtrip.snap");
    io::write_snapshot(theta, {{"iteration", "1200"}, {"config_hash", "42"}}, path);
    const auto snap = io::read_snapshot(path);
    REQUIRE(snap.theta.size() == theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      // Bit-level identity, signed zeros included.
      CHECK(std::memcmp(&snap.theta[i], &theta[i], sizeof(double)) == 0);
    }
    CHECK(snap.meta.at("iteration") == "1200");
    CHECK(snap.meta.at("config_hash") == "42");
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta");
  }

  TEST_CASE("any flipped payload byte is detected") {
    ParamVector theta(19);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = static_cast<double>(i) * 0.25;
    const auto path = temp_file("eosprobe_snapshot_corrupt.snap");
    io::write_snapshot(theta, {}, path);

    NormalSampler rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekg(0, std::ios::end);
      const auto size = static_cast<std::size_t>(f.tellg());
      const std::size_t pos = 24 + rng.next_u64() % (size - 32);  // inside the payload
      f.seekg(static_cast<std::streamoff>(pos));
      char byte;
      f.read(&byte, 1);
      byte = static_cast<char>(byte ^ 0x40);
      f.seekp(static_cast<std::streamoff>(pos));
      f.write(&byte, 1);
      f.close();
      CHECK_THROWS_AS(io::read_snapshot(path), IoError);
      // restore
      std::fstream g(path, std::ios::in | std::ios::out | std::ios::binary);
      byte = static_cast<char>(byte ^ 0x40);
      g.seekp(static_cast<std::streamoff>(pos));
      g.write(&byte, 1);
    }
    CHECK(io::read_snapshot(path).theta.size() == 19);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta");
  }

  TEST_CASE("version bump is an explicit error") {
    ParamVector theta(3);
    const auto path = temp_file("eosprobe_snapshot_version.snap");
    io::write_snapshot(theta, {}, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v2 = 2;
    f.write(&v2, 1);
    f.close();
    try {
      io::read_snapshot(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta");
  }

  TEST_CASE("non-snapshot files are rejected") {
    const auto path = temp_file("eosprobe_snapshot_junk.snap");
    std::ofstream(path) << "not a snapshot at all, definitely text";
    CHECK_THROWS_AS(io::read_snapshot(path), IoError);
    std::filesystem::remove(path);
  }
}
