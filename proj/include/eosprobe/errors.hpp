#pragma once

#include <stdexcept>
#include <string>

namespace eosprobe {

// All toolkit exceptions carry a short machine-parsable category used by the
// CLI error line ("error: <category>: <message>").
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct DataError : Error {
  explicit DataError(const std::string& m) : Error("data", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& m) : Error("model", m) {}
};

// Non-finite loss/gradient/HVP values. Trainers catch this and terminate the
// run with a divergence record instead of crashing.
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error("divergence", m) {}
};

struct SpectralError : Error {
  explicit SpectralError(const std::string& m) : Error("spectral", m) {}
};

}  // namespace eosprobe
