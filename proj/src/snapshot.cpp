#include "eosprobe/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "eosprobe/errors.hpp"

namespace eosprobe::io {

namespace {

constexpr char kMagic[8] = {'E', 'O', 'S', 'S', 'N', 'A', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

void write_snapshot(const ParamVector& theta, const std::map<std::string, std::string>& meta,
                    const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(32 + theta.size() * 8);
  buf.append(kMagic, sizeof kMagic);
  put_u32(buf, kVersion);
  put_u32(buf, 0);
  put_u64(buf, static_cast<std::uint64_t>(theta.size()));
  for (std::size_t i = 0; i < theta.size(); ++i)
    put_u64(buf, std::bit_cast<std::uint64_t>(theta[i]));
  put_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
  out.close();

  std::ofstream m(path.string() + ".meta", std::ios::binary);
  if (!m) throw IoError("cannot open " + path.string() + ".meta for writing");
  for (const auto& [k, v] : meta) m << k << "=" << v << "\n";
  if (!m) throw IoError("failed writing " + path.string() + ".meta");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < 32 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw IoError(path.string() + ": not a snapshot file");
  const std::uint32_t version = get_u32(p + 8);
  if (version != kVersion)
    throw IoError(path.string() + ": unsupported snapshot version " + std::to_string(version));
  const std::uint64_t n = get_u64(p + 16);
  const std::size_t expect = 24 + n * 8 + 8;
  if (buf.size() != expect)
    throw IoError(path.string() + ": size " + std::to_string(buf.size()) + ", expected " +
                  std::to_string(expect));
  const std::uint64_t stored = get_u64(p + 24 + n * 8);
  const std::uint64_t actual = fnv1a64(buf.data(), 24 + n * 8);
  if (stored != actual) throw IoError(path.string() + ": checksum mismatch");

  Snapshot snap;
  snap.theta = ParamVector(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i)
    snap.theta[static_cast<std::size_t>(i)] = std::bit_cast<double>(get_u64(p + 24 + i * 8));

  const std::filesystem::path meta_path = path.string() + ".meta";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream m(meta_path, std::ios::binary);
    std::string line;
    while (std::getline(m, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      snap.meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return snap;
}

}  // namespace eosprobe::io
