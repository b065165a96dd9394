#include "unixkd/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "unixkd/rng.hpp"

namespace unixkd {

namespace fs = std::filesystem;
using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

std::string DataSplit::digest() const {
  uint64_t h = fnv1a64(images.data(), images.size() * sizeof(float));
  h = fnv1a64(labels.data(), labels.size() * sizeof(uint32_t), h);
  return fnv1a64_hex(h);
}

Tensor DataSplit::batch(const std::vector<size_t>& indices) const {
  const size_t s = sample_size();
  Tensor out({indices.size(), channels, height, width});
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= num_samples()) {
      throw DataError("batch: sample index out of range");
    }
    const float* src = images.data() + indices[i] * s;
    double* dst = out.data.data() + i * s;
    for (size_t j = 0; j < s; ++j) dst[j] = static_cast<double>(src[j]);
  }
  return out;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

std::vector<char> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto len = in.tellg();
  in.seekg(0);
  std::vector<char> bytes(static_cast<size_t>(len));
  in.read(bytes.data(), len);
  if (!in) throw DataError("failed to read " + path);
  return bytes;
}

size_t require_size_field(const json& meta, const char* key,
                          const std::string& dir) {
  if (!meta.contains(key) || !meta[key].is_number_unsigned()) {
    throw DataError(dir + "/meta.json: missing or non-integer \"" +
                    std::string(key) + "\"");
  }
  return meta[key].get<size_t>();
}

}  // namespace

DataSplit load_split(const std::string& dir) {
  const json meta = read_json_file(dir + "/meta.json");
  DataSplit split;
  const size_t num_samples = require_size_field(meta, "num_samples", dir);
  split.height = require_size_field(meta, "height", dir);
  split.width = require_size_field(meta, "width", dir);
  split.channels = require_size_field(meta, "channels", dir);
  split.num_classes = require_size_field(meta, "num_classes", dir);
  if (!meta.contains("digest") || !meta["digest"].is_string()) {
    throw DataError(dir + "/meta.json: missing \"digest\"");
  }
  if (split.num_classes == 0 || split.sample_size() == 0) {
    throw DataError(dir + "/meta.json: zero-sized samples or classes");
  }

  const std::vector<char> image_bytes = read_binary(dir + "/images.f32le");
  const size_t want_image_bytes =
      num_samples * split.sample_size() * sizeof(float);
  if (image_bytes.size() < want_image_bytes) {
    throw DataError(dir + "/images.f32le is truncated: " +
                    std::to_string(image_bytes.size()) + " bytes, expected " +
                    std::to_string(want_image_bytes));
  }
  if (image_bytes.size() > want_image_bytes) {
    throw DataError(dir + "/images.f32le size mismatch: " +
                    std::to_string(image_bytes.size()) + " bytes, expected " +
                    std::to_string(want_image_bytes));
  }
  split.images.resize(num_samples * split.sample_size());
  std::memcpy(split.images.data(), image_bytes.data(), want_image_bytes);

  const std::vector<char> label_bytes = read_binary(dir + "/labels.u32le");
  const size_t want_label_bytes = num_samples * sizeof(uint32_t);
  if (label_bytes.size() < want_label_bytes) {
    throw DataError(dir + "/labels.u32le is truncated: " +
                    std::to_string(label_bytes.size()) + " bytes, expected " +
                    std::to_string(want_label_bytes));
  }
  if (label_bytes.size() > want_label_bytes) {
    throw DataError(dir + "/labels.u32le size mismatch");
  }
  split.labels.resize(num_samples);
  std::memcpy(split.labels.data(), label_bytes.data(), want_label_bytes);

  for (size_t i = 0; i < split.labels.size(); ++i) {
    if (split.labels[i] >= split.num_classes) {
      throw DataError(dir + ": label " + std::to_string(split.labels[i]) +
                      " at sample " + std::to_string(i) + " is >= num_classes " +
                      std::to_string(split.num_classes));
    }
  }
  for (float v : split.images) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DataError(dir + ": pixel value outside [0,1]");
    }
  }

  const std::string recorded = meta["digest"].get<std::string>();
  if (recorded != split.digest()) {
    throw DataError(dir + ": digest mismatch, meta says " + recorded +
                    " but data hashes to " + split.digest());
  }
  return split;
}

void save_split(const std::string& dir, const DataSplit& split) {
  fs::create_directories(dir);
  json meta;
  meta["num_samples"] = split.num_samples();
  meta["height"] = split.height;
  meta["width"] = split.width;
  meta["channels"] = split.channels;
  meta["num_classes"] = split.num_classes;
  meta["digest"] = split.digest();
  std::ofstream mf(dir + "/meta.json");
  mf << meta.dump(2) << "\n";
  if (!mf) throw DataError("cannot write " + dir + "/meta.json");

  std::ofstream imf(dir + "/images.f32le", std::ios::binary);
  imf.write(reinterpret_cast<const char*>(split.images.data()),
            static_cast<std::streamsize>(split.images.size() * sizeof(float)));
  if (!imf) throw DataError("cannot write " + dir + "/images.f32le");

  std::ofstream lbf(dir + "/labels.u32le", std::ios::binary);
  lbf.write(reinterpret_cast<const char*>(split.labels.data()),
            static_cast<std::streamsize>(split.labels.size() * sizeof(uint32_t)));
  if (!lbf) throw DataError("cannot write " + dir + "/labels.u32le");
}

Dataset load_dataset(const std::string& root) {
  Dataset data;
  data.train = load_split(root + "/train");
  data.test = load_split(root + "/test");
  if (data.train.num_classes != data.test.num_classes ||
      data.train.sample_shape() != data.test.sample_shape()) {
    throw DataError(root + ": train/test metadata disagree");
  }
  return data;
}

void save_dataset(const std::string& root, const Dataset& data) {
  save_split(root + "/train", data.train);
  save_split(root + "/test", data.test);
}

namespace {

float clamp01(double v) {
  return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

}  // namespace

Dataset generate_dataset(const GenConfig& cfg) {
  if (cfg.classes < 1 || cfg.per_class < 1) {
    throw DataError("generate_dataset: need at least one class and sample");
  }
  if (cfg.hard_classes > cfg.classes) {
    throw DataError("generate_dataset: more hard classes than classes");
  }
  const size_t d = cfg.channels * cfg.height * cfg.width;
  SplitMix64 proto_rng = SplitMix64(cfg.seed).derive(0xb10b);
  std::vector<double> prototypes(cfg.classes * d);
  for (double& v : prototypes) v = 0.15 + 0.7 * proto_rng.next_double();

  auto fill_split = [&](DataSplit& split, size_t per_class, bool with_label_noise,
                        uint64_t salt) {
    split.height = cfg.height;
    split.width = cfg.width;
    split.channels = cfg.channels;
    split.num_classes = cfg.classes;
    const size_t n = per_class * cfg.classes;
    split.images.resize(n * d);
    split.labels.resize(n);
    SplitMix64 rng = SplitMix64(cfg.seed).derive(salt);
    size_t s = 0;
    for (size_t c = 0; c < cfg.classes; ++c) {
      for (size_t i = 0; i < per_class; ++i, ++s) {
        const double* mu = prototypes.data() + c * d;
        float* img = split.images.data() + s * d;
        for (size_t j = 0; j < d; ++j) {
          img[j] = clamp01(mu[j] + cfg.noise * rng.next_gaussian());
        }
        uint32_t label = static_cast<uint32_t>(c);
        if (with_label_noise) {
          const double flip_p = (c < cfg.hard_classes)
                                    ? cfg.hard_label_noise
                                    : cfg.label_noise;
          if (flip_p > 0.0 && rng.next_double() < flip_p) {
            label = static_cast<uint32_t>(rng.next_below(cfg.classes));
          }
        }
        split.labels[s] = label;
      }
    }
  };

  Dataset data;
  fill_split(data.train, cfg.per_class, true, 0x7261);
  fill_split(data.test, cfg.test_per_class, false, 0x7465);
  return data;
}

}  // namespace unixkd
