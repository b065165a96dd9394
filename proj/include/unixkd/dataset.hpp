#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unixkd/tensor.hpp"

namespace unixkd {

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// One split (train or test) of an image classification dataset.
struct DataSplit {
  size_t height = 0, width = 0, channels = 0, num_classes = 0;
  std::vector<float> images;  // [sample][channel][row][col], values in [0,1]
  std::vector<uint32_t> labels;

  size_t sample_size() const { return channels * height * width; }
  size_t num_samples() const { return labels.size(); }
  std::vector<size_t> sample_shape() const { return {channels, height, width}; }

  // Gathers the given samples into a double tensor [n, c, h, w].
  Tensor batch(const std::vector<size_t>& indices) const;

  std::string digest() const;
};

struct Dataset {
  DataSplit train;
  DataSplit test;
};

// Directory layout: <dir>/meta.json + images.f32le + labels.u32le.
DataSplit load_split(const std::string& dir);
void save_split(const std::string& dir, const DataSplit& split);

// Root with train/ and test/ subdirectories.
Dataset load_dataset(const std::string& root);
void save_dataset(const std::string& root, const Dataset& data);

struct GenConfig {
  size_t classes = 10;
  size_t per_class = 500;       // train samples per class
  size_t test_per_class = 100;
  size_t height = 8, width = 8, channels = 1;
  uint64_t seed = 0;
  double noise = 0.25;           // pixel noise around the class prototype
  double label_noise = 0.0;      // base train-label flip probability
  size_t hard_classes = 0;       // first H classes get extra label noise
  double hard_label_noise = 0.3;
};

// Gaussian class blobs rendered as images; hard classes carry noisy train
// labels. Test labels are always clean.
Dataset generate_dataset(const GenConfig& cfg);

uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
std::string fnv1a64_hex(uint64_t h);

}  // namespace unixkd
