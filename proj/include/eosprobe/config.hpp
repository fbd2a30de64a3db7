#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eosprobe::cfg {

/// Flat key=value configuration with dotted keys (train.eta=0.001).
/// '#' starts a comment; later assignments and overrides win. Serialization
/// is canonical (sorted keys), so a resolved config is diffable and its text
/// hash identifies the run.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  /// "key=value" override, as passed via --set.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  /// Canonical text: one "# eosprobe <version>" comment, then sorted keys.
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& entries() const noexcept { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace eosprobe::cfg
