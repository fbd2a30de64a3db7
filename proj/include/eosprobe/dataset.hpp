#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eosprobe::data {

/// Full-batch training set: n_D examples of a fixed input shape plus integer
/// class labels in [0, n_c). Labels are contiguous after any remapping.
struct LabeledDataset {
  std::vector<int> shape;      // input dims, e.g. {4} or {3,32,32}
  std::vector<double> inputs;  // n_D * input_size(), row-major per example
  std::vector<int> labels;
  int n_c = 0;
  std::string provenance;

  std::size_t n_examples() const noexcept { return labels.size(); }
  std::size_t input_size() const noexcept {
    std::size_t s = 1;
    for (int d : shape) s *= static_cast<std::size_t>(d);
    return shape.empty() ? 0 : s;
  }
  std::span<const double> example(std::size_t i) const noexcept {
    const std::size_t w = input_size();
    return {inputs.data() + i * w, w};
  }

  void validate() const;
};

/// Balanced Gaussian mixture: one unit-covariance component per class, class
/// means mutually `separation` apart (scaled basis vectors, so dim >= n_c).
/// Any remainder of n_D / n_c goes to the low class indices. Examples are
/// laid out class-major. Deterministic per seed (MT19937-64 + Box-Muller).
LabeledDataset synth_dataset(int n_d, int n_c, int dim, double separation,
                             std::uint64_t seed);

/// CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes
/// (R, G, B planes, row-major 32x32). Pixels scale to [0,1]; optionally
/// subtracts the per-channel dataset mean afterwards.
LabeledDataset load_cifar10_binary(const std::vector<std::filesystem::path>& paths,
                                   bool subtract_channel_means = false);

/// Keeps only the listed classes; labels remap to 0..keep.size()-1 in keep
/// order. Example order is preserved.
LabeledDataset subset_classes(const LabeledDataset& d, const std::vector<int>& keep);

/// Class-stratified uniform subsample without replacement (largest-remainder
/// apportionment, ties to low class indices). Selected examples keep their
/// original relative order. Deterministic per seed.
LabeledDataset subset_size(const LabeledDataset& d, std::size_t n_d, std::uint64_t seed);

}  // namespace eosprobe::data
