#include "unixkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "unixkd/config.hpp"
#include "unixkd/layers.hpp"
#include "unixkd/trainer.hpp"

namespace unixkd {

namespace fs = std::filesystem;
using nlohmann::json;

SamplingTrace load_trace(const std::string& run_dir, const DataSplit& train) {
  const std::string path = run_dir + "/trace.csv";
  std::ifstream in(path);
  if (!in) throw DataError("missing sampling trace: " + path);
  SamplingTrace trace;
  trace.labels = train.labels;
  trace.num_classes = train.num_classes;
  std::string line;
  std::getline(in, line);  // header
  if (line != "epoch,iteration,dataset_index") {
    throw DataError(path + ": unexpected header \"" + line + "\"");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRecord rec;
    char extra;
    if (std::sscanf(line.c_str(), "%u,%u,%u%c", &rec.epoch, &rec.iteration,
                    &rec.dataset_index, &extra) != 3) {
      throw DataError(path + ": malformed row \"" + line + "\"");
    }
    if (rec.dataset_index >= train.num_samples()) {
      throw DataError(path + ": dataset index " +
                      std::to_string(rec.dataset_index) + " out of range");
    }
    trace.num_epochs = std::max(trace.num_epochs, size_t{rec.epoch} + 1);
    trace.records.push_back(rec);
  }
  return trace;
}

CategoryCounts category_sampling_counts(const SamplingTrace& trace) {
  CategoryCounts counts;
  counts.totals.assign(trace.num_classes, 0);
  counts.per_epoch.assign(trace.num_epochs,
                          std::vector<uint64_t>(trace.num_classes, 0));
  for (const TraceRecord& rec : trace.records) {
    const uint32_t category = trace.labels[rec.dataset_index];
    ++counts.totals[category];
    ++counts.per_epoch[rec.epoch][category];
  }
  return counts;
}

std::vector<double> category_accuracy(const Model& model,
                                      const DataSplit& test) {
  const size_t classes = test.num_classes;
  std::vector<uint64_t> hits(classes, 0), seen(classes, 0);
  const size_t chunk = 256;
  std::vector<size_t> indices;
  for (size_t start = 0; start < test.num_samples(); start += chunk) {
    const size_t m = std::min(chunk, test.num_samples() - start);
    indices.resize(m);
    std::iota(indices.begin(), indices.end(), start);
    Tensor logits = model_forward(model, test.batch(indices));
    for (size_t i = 0; i < m; ++i) {
      const double* z = logits.data.data() + i * classes;
      size_t best = 0;
      for (size_t c = 1; c < classes; ++c) {
        if (z[c] > z[best]) best = c;
      }
      const uint32_t label = test.labels[start + i];
      ++seen[label];
      if (best == label) ++hits[label];
    }
  }
  std::vector<double> acc(classes);
  for (size_t c = 0; c < classes; ++c) {
    acc[c] = seen[c] == 0 ? std::nan("")
                          : 100.0 * static_cast<double>(hits[c]) /
                                static_cast<double>(seen[c]);
  }
  return acc;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (x.size() < 3) {
    throw std::invalid_argument("spearman: need at least 3 points");
  }
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double cov = 0, vx = 0, vy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx <= 0.0 || vy <= 0.0) {
    throw std::invalid_argument("spearman: a variable is constant");
  }
  return cov / std::sqrt(vx * vy);
}

namespace {

struct BinReader {
  std::ifstream in;
  std::string path;

  explicit BinReader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw DataError("missing recording: " + p);
  }
  bool at_eof() { return in.peek() == EOF; }
  uint32_t u32() {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw DataError(path + " is truncated");
    return v;
  }
  float f32() {
    float v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw DataError(path + " is truncated");
    return v;
  }
  uint8_t u8() {
    char v = 0;
    in.read(&v, 1);
    if (!in) throw DataError(path + " is truncated");
    return static_cast<uint8_t>(v);
  }
  void expect_magic(const char* magic) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::string(buf, 4) != magic) {
      throw DataError(path + ": bad magic, expected " + magic);
    }
  }
};

double entropy_of_logits(const std::vector<double>& z) {
  Tensor t = Tensor::of({1, z.size()}, z);
  Tensor p = softmax(t, 1.0);
  double h = 0.0;
  for (double v : p.data) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

CentroidStats centroid_distances(const std::string& run_dir) {
  BinReader reader(run_dir + "/features.bin");
  reader.expect_magic("UXFT");
  const uint32_t version = reader.u32();
  if (version != 1) throw DataError("features.bin: unknown version");
  const uint32_t batch = reader.u32();
  const uint32_t dim = reader.u32();
  const uint32_t classes = reader.u32();

  struct Running {
    std::vector<double> sum;
    uint64_t count = 0;
  };

  CentroidStats stats;
  std::vector<Running> centers(classes);
  double sel_sum = 0, all_sum = 0;
  uint64_t sel_n = 0, all_n = 0;
  int64_t cur_epoch = -1;

  auto flush_epoch = [&]() {
    if (cur_epoch < 0) return;
    stats.selected_mean.push_back(sel_n ? sel_sum / static_cast<double>(sel_n) : 0.0);
    stats.all_mean.push_back(all_n ? all_sum / static_cast<double>(all_n) : 0.0);
  };

  std::vector<double> feature(dim);
  while (!reader.at_eof()) {
    const uint32_t epoch = reader.u32();
    reader.u32();  // iteration
    if (static_cast<int64_t>(epoch) != cur_epoch) {
      flush_epoch();
      cur_epoch = epoch;
      for (Running& r : centers) {
        r.sum.assign(dim, 0.0);
        r.count = 0;
      }
      sel_sum = all_sum = 0.0;
      sel_n = all_n = 0;
    }
    for (uint32_t i = 0; i < batch; ++i) {
      reader.u32();  // dataset index
      const uint32_t label = reader.u32();
      if (label >= classes) throw DataError("features.bin: label out of range");
      const uint8_t selected = reader.u8();
      for (uint32_t j = 0; j < dim; ++j) feature[j] = reader.f32();

      Running& center = centers[label];
      if (center.sum.empty()) center.sum.assign(dim, 0.0);
      center.count += 1;
      double dist2 = 0.0;
      for (uint32_t j = 0; j < dim; ++j) {
        center.sum[j] += feature[j];
        const double mean = center.sum[j] / static_cast<double>(center.count);
        const double d = feature[j] - mean;
        dist2 += d * d;
      }
      const double dist = std::sqrt(dist2);
      all_sum += dist;
      ++all_n;
      if (selected) {
        sel_sum += dist;
        ++sel_n;
      }
    }
  }
  flush_epoch();
  return stats;
}

EntropyStats teacher_entropy_stats(const std::string& run_dir) {
  BinReader reader(run_dir + "/teacher_logits.bin");
  reader.expect_magic("UXTL");
  const uint32_t version = reader.u32();
  if (version != 1) throw DataError("teacher_logits.bin: unknown version");
  const uint32_t count = reader.u32();
  const uint32_t classes = reader.u32();

  EntropyStats stats;
  double sel_sum = 0, rnd_sum = 0;
  uint64_t n = 0;
  int64_t cur_epoch = -1;
  auto flush_epoch = [&]() {
    if (cur_epoch < 0) return;
    stats.selected_mean.push_back(n ? sel_sum / static_cast<double>(n) : 0.0);
    stats.random_mean.push_back(n ? rnd_sum / static_cast<double>(n) : 0.0);
  };

  std::vector<double> z(classes);
  while (!reader.at_eof()) {
    const uint32_t epoch = reader.u32();
    reader.u32();  // iteration
    if (static_cast<int64_t>(epoch) != cur_epoch) {
      flush_epoch();
      cur_epoch = epoch;
      sel_sum = rnd_sum = 0.0;
      n = 0;
    }
    for (uint32_t i = 0; i < count; ++i) {
      reader.u32();
      for (uint32_t c = 0; c < classes; ++c) z[c] = reader.f32();
      sel_sum += entropy_of_logits(z);
    }
    for (uint32_t i = 0; i < count; ++i) {
      reader.u32();
      for (uint32_t c = 0; c < classes; ++c) z[c] = reader.f32();
      rnd_sum += entropy_of_logits(z);
    }
    n += count;
  }
  flush_epoch();
  return stats;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void analyze_run(const std::string& run_dir) {
  std::ifstream rin(run_dir + "/report.json");
  if (!rin) throw DataError("missing " + run_dir + "/report.json");
  json report;
  try {
    rin >> report;
  } catch (const json::exception& e) {
    throw DataError(run_dir + "/report.json is malformed: " + e.what());
  }
  if (!report.contains("config")) {
    throw DataError(run_dir + "/report.json has no config echo");
  }
  const TrainConfig cfg = train_config_from_json(report["config"]);
  const Dataset data = load_dataset(cfg.dataset);

  const SamplingTrace trace = load_trace(run_dir, data.train);
  const CategoryCounts counts = category_sampling_counts(trace);

  {
    std::ofstream out(run_dir + "/category_counts.csv");
    out << "category,total";
    for (size_t e = 0; e < counts.per_epoch.size(); ++e) out << ",epoch" << e;
    out << "\n";
    for (size_t c = 0; c < counts.totals.size(); ++c) {
      out << c << "," << counts.totals[c];
      for (size_t e = 0; e < counts.per_epoch.size(); ++e) {
        out << "," << counts.per_epoch[e][c];
      }
      out << "\n";
    }
  }

  Model student = build_model(cfg.student_spec);
  load_params(student, run_dir + "/student.params");
  const std::vector<double> accuracy = category_accuracy(student, data.test);
  {
    std::ofstream out(run_dir + "/category_accuracy.csv");
    out << "category,accuracy\n";
    for (size_t c = 0; c < accuracy.size(); ++c) {
      out << c << "," << (std::isnan(accuracy[c]) ? "nan" : fmt(accuracy[c]))
          << "\n";
    }
  }

  {
    std::vector<double> xs, ys;
    for (size_t c = 0; c < accuracy.size(); ++c) {
      if (std::isnan(accuracy[c])) continue;
      xs.push_back(static_cast<double>(counts.totals[c]));
      ys.push_back(accuracy[c]);
    }
    std::ofstream out(run_dir + "/correlation.txt");
    out << fmt(spearman_correlation(ys, xs)) << "\n";
  }

  if (fs::exists(run_dir + "/features.bin")) {
    const CentroidStats stats = centroid_distances(run_dir);
    std::ofstream out(run_dir + "/centroid_distance.csv");
    out << "# raw euclidean distance of penultimate features to the online "
           "running per-category mean\n";
    out << "epoch,selected_mean,all_mean\n";
    for (size_t e = 0; e < stats.selected_mean.size(); ++e) {
      out << e << "," << fmt(stats.selected_mean[e]) << ","
          << fmt(stats.all_mean[e]) << "\n";
    }
  } else {
    std::cerr << "analyze: no features.bin, skipping centroid_distance.csv\n";
  }

  if (fs::exists(run_dir + "/teacher_logits.bin")) {
    const EntropyStats stats = teacher_entropy_stats(run_dir);
    std::ofstream out(run_dir + "/teacher_entropy.csv");
    out << "epoch,selected_mean,random_mean\n";
    for (size_t e = 0; e < stats.selected_mean.size(); ++e) {
      out << e << "," << fmt(stats.selected_mean[e]) << ","
          << fmt(stats.random_mean[e]) << "\n";
    }
  } else {
    std::cerr << "analyze: no teacher_logits.bin, skipping teacher_entropy.csv\n";
  }
}

}  // namespace unixkd
