#include "eosprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eosprobe/errors.hpp"
#include "eosprobe/rng.hpp"

namespace eosprobe::data {

void LabeledDataset::validate() const {
  if (labels.empty()) throw DataError("dataset is empty");
  if (n_c < 1) throw DataError("dataset has n_c < 1");
  if (shape.empty()) throw DataError("dataset has no input shape");
  if (inputs.size() != n_examples() * input_size())
    throw DataError("dataset input buffer size does not match n_D * input size");
  for (int l : labels)
    if (l < 0 || l >= n_c)
      throw DataError("label " + std::to_string(l) + " outside [0, " + std::to_string(n_c) + ")");
  for (double x : inputs)
    if (!std::isfinite(x)) throw DataError("non-finite input value");
}

LabeledDataset synth_dataset(int n_d, int n_c, int dim, double separation,
                             std::uint64_t seed) {
  if (n_c < 1 || dim < 1) throw DataError("synth_dataset: n_c and dim must be >= 1");
  if (n_d < n_c) throw DataError("synth_dataset: need n_D >= n_c");
  if (dim < n_c)
    throw DataError("synth_dataset: dim must be >= n_c so class means can be mutually equidistant");

  LabeledDataset d;
  d.shape = {dim};
  d.n_c = n_c;
  d.labels.reserve(static_cast<std::size_t>(n_d));
  d.inputs.reserve(static_cast<std::size_t>(n_d) * static_cast<std::size_t>(dim));

  // mean_c = (separation / sqrt(2)) * e_c gives pairwise mean distance
  // exactly `separation`.
  const double radius = separation / std::sqrt(2.0);

  const int base = n_d / n_c;
  const int rem = n_d % n_c;
  NormalSampler rng(seed);
  for (int c = 0; c < n_c; ++c) {
    const int count = base + (c < rem ? 1 : 0);
    for (int j = 0; j < count; ++j) {
      d.labels.push_back(c);
      for (int k = 0; k < dim; ++k) {
        const double mean = (k == c) ? radius : 0.0;
        d.inputs.push_back(mean + rng.normal());
      }
    }
  }

  std::ostringstream tag;
  tag << "synthetic(n_d=" << n_d << ",n_c=" << n_c << ",dim=" << dim
      << ",separation=" << separation << ",seed=" << seed << ")";
  d.provenance = tag.str();
  d.validate();
  return d;
}

namespace {
constexpr std::size_t kCifarRecord = 3073;
constexpr std::size_t kCifarPixels = 3072;
}  // namespace

LabeledDataset load_cifar10_binary(const std::vector<std::filesystem::path>& paths,
                                   bool subtract_channel_means) {
  if (paths.empty()) throw DataError("load_cifar10_binary: no files given");
  LabeledDataset d;
  d.shape = {3, 32, 32};
  d.n_c = 10;

  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() % kCifarRecord != 0)
      throw DataError(path.string() + ": length " + std::to_string(bytes.size()) +
                      " is not a multiple of 3073");
    const std::size_t n_rec = bytes.size() / kCifarRecord;
    for (std::size_t r = 0; r < n_rec; ++r) {
      const unsigned char* rec =
          reinterpret_cast<const unsigned char*>(bytes.data()) + r * kCifarRecord;
      if (rec[0] > 9)
        throw DataError(path.string() + ": label byte " + std::to_string(int(rec[0])) +
                        " > 9 at offset " + std::to_string(r * kCifarRecord));
      d.labels.push_back(static_cast<int>(rec[0]));
      for (std::size_t p = 0; p < kCifarPixels; ++p)
        d.inputs.push_back(static_cast<double>(rec[1 + p]) / 255.0);
    }
  }

  if (subtract_channel_means) {
    const std::size_t plane = 1024;
    double mean[3] = {0.0, 0.0, 0.0};
    const std::size_t n = d.labels.size();
    for (std::size_t i = 0; i < n; ++i)
      for (int ch = 0; ch < 3; ++ch)
        for (std::size_t p = 0; p < plane; ++p)
          mean[ch] += d.inputs[i * kCifarPixels + ch * plane + p];
    for (int ch = 0; ch < 3; ++ch) mean[ch] /= static_cast<double>(n * plane);
    for (std::size_t i = 0; i < n; ++i)
      for (int ch = 0; ch < 3; ++ch)
        for (std::size_t p = 0; p < plane; ++p)
          d.inputs[i * kCifarPixels + ch * plane + p] -= mean[ch];
  }

  std::ostringstream tag;
  tag << "cifar10(files=" << paths.size() << ",n_d=" << d.labels.size()
      << ",centered=" << (subtract_channel_means ? 1 : 0) << ")";
  d.provenance = tag.str();
  d.validate();
  return d;
}

LabeledDataset subset_classes(const LabeledDataset& d, const std::vector<int>& keep) {
  if (keep.empty()) throw DataError("subset_classes: keep list is empty");
  std::vector<int> remap(static_cast<std::size_t>(d.n_c), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const int c = keep[i];
    if (c < 0 || c >= d.n_c)
      throw DataError("subset_classes: unknown class id " + std::to_string(c));
    if (remap[static_cast<std::size_t>(c)] != -1)
      throw DataError("subset_classes: duplicate class id " + std::to_string(c));
    remap[static_cast<std::size_t>(c)] = static_cast<int>(i);
  }

  LabeledDataset out;
  out.shape = d.shape;
  out.n_c = static_cast<int>(keep.size());
  const std::size_t w = d.input_size();
  for (std::size_t i = 0; i < d.n_examples(); ++i) {
    const int m = remap[static_cast<std::size_t>(d.labels[i])];
    if (m < 0) continue;
    out.labels.push_back(m);
    const auto x = d.example(i);
    out.inputs.insert(out.inputs.end(), x.begin(), x.end());
  }
  if (out.labels.empty()) throw DataError("subset_classes: no examples left");
  (void)w;

  std::ostringstream tag;
  tag << d.provenance << "|classes(";
  for (std::size_t i = 0; i < keep.size(); ++i) tag << (i ? "," : "") << keep[i];
  tag << ")";
  out.provenance = tag.str();
  out.validate();
  return out;
}

LabeledDataset subset_size(const LabeledDataset& d, std::size_t n_d, std::uint64_t seed) {
  if (n_d < 1) throw DataError("subset_size: n_D must be >= 1");
  if (n_d > d.n_examples())
    throw DataError("subset_size: requested " + std::to_string(n_d) + " of " +
                    std::to_string(d.n_examples()) + " examples");

  // Indices per class, original order.
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.n_c));
  for (std::size_t i = 0; i < d.n_examples(); ++i)
    by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);

  // Largest-remainder apportionment of n_d across classes.
  const double total = static_cast<double>(d.n_examples());
  std::vector<std::size_t> want(by_class.size(), 0);
  std::vector<std::pair<double, int>> frac;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double exact = static_cast<double>(n_d) * static_cast<double>(by_class[c].size()) / total;
    want[c] = static_cast<std::size_t>(exact);
    assigned += want[c];
    frac.emplace_back(exact - static_cast<double>(want[c]), static_cast<int>(c));
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; assigned < n_d; ++j) {
    const auto c = static_cast<std::size_t>(frac[j % frac.size()].second);
    if (want[c] < by_class[c].size()) {
      ++want[c];
      ++assigned;
    }
  }

  // Partial Fisher-Yates per class, one shared RNG in class order.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pool = by_class[c];
    const std::size_t take = std::min(want[c], pool.size());
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t span = pool.size() - j;
      const std::size_t pick = j + static_cast<std::size_t>(rng() % span);
      std::swap(pool[j], pool[pick]);
      chosen.push_back(pool[j]);
    }
  }
  std::sort(chosen.begin(), chosen.end());

  LabeledDataset out;
  out.shape = d.shape;
  out.n_c = d.n_c;
  for (std::size_t i : chosen) {
    out.labels.push_back(d.labels[i]);
    const auto x = d.example(i);
    out.inputs.insert(out.inputs.end(), x.begin(), x.end());
  }

  std::ostringstream tag;
  tag << d.provenance << "|subset(n_d=" << n_d << ",seed=" << seed << ")";
  out.provenance = tag.str();
  out.validate();
  return out;
}

}  // namespace eosprobe::data
