#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "eosprobe/param_vector.hpp"

namespace eosprobe::io {

/// Versioned binary container for a parameter vector:
///   bytes  0..7   magic "EOSSNAP\0"
///   bytes  8..11  u32 LE format version (currently 1)
///   bytes 12..15  u32 LE reserved (0)
///   bytes 16..23  u64 LE n_params
///   then          n_params little-endian IEEE-754 doubles
///   trailing      u64 LE FNV-1a checksum over everything before it
/// A structured-text sidecar at <path>.meta records iteration, config hash
/// and any other key=value metadata. Restore is bit-exact.
struct Snapshot {
  ParamVector theta;
  std::map<std::string, std::string> meta;
};

void write_snapshot(const ParamVector& theta, const std::map<std::string, std::string>& meta,
                    const std::filesystem::path& path);

Snapshot read_snapshot(const std::filesystem::path& path);

/// FNV-1a 64-bit hash; also used to fingerprint resolved configs.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace eosprobe::io
