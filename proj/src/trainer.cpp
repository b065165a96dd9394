#include "unixkd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "unixkd/losses.hpp"
#include "unixkd/mixup.hpp"
#include "unixkd/rng.hpp"

namespace unixkd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// rng stream salts
constexpr uint64_t kDataOrderStream = 0xDA7A;
constexpr uint64_t kPlanStream = 0x714A;
constexpr uint64_t kProbeStream = 0x9406;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

EvalResult evaluate(const Model& model, const DataSplit& test) {
  const size_t n = test.num_samples();
  const size_t classes = test.num_classes;
  EvalResult result;
  if (n == 0) return result;
  size_t top1_hits = 0, top5_hits = 0;
  const size_t chunk = 256;
  std::vector<size_t> indices(chunk);
  for (size_t start = 0; start < n; start += chunk) {
    const size_t m = std::min(chunk, n - start);
    indices.resize(m);
    std::iota(indices.begin(), indices.end(), start);
    Tensor logits = model_forward(model, test.batch(indices));
    for (size_t i = 0; i < m; ++i) {
      const double* z = logits.data.data() + i * classes;
      size_t best = 0;
      for (size_t c = 1; c < classes; ++c) {
        if (z[c] > z[best]) best = c;  // ties keep the lower index
      }
      const uint32_t label = test.labels[start + i];
      if (best == label) ++top1_hits;
      if (classes >= 5) {
        // rank of the label under (logit desc, index asc)
        size_t rank = 0;
        for (size_t c = 0; c < classes; ++c) {
          if (z[c] > z[label] || (z[c] == z[label] && c < label)) ++rank;
        }
        if (rank < 5) ++top5_hits;
      }
    }
  }
  result.top1 = 100.0 * static_cast<double>(top1_hits) / static_cast<double>(n);
  if (classes >= 5) {
    result.top5 = 100.0 * static_cast<double>(top5_hits) / static_cast<double>(n);
  }
  return result;
}

void save_params(const Model& model, const std::string& path) {
  const std::vector<double> params = flatten_params(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const char magic[4] = {'U', 'X', 'P', 'M'};
  out.write(magic, 4);
  const uint64_t count = params.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw DataError("failed writing " + path);
}

void load_params(Model& model, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "UXPM") {
    throw DataError(path + " is not a parameter file");
  }
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  std::vector<double> params(count);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw DataError(path + " is truncated");
  load_flat_params(model, params);
}

namespace {

std::vector<size_t> epoch_order(size_t n, SplitMix64 rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_below(i)]);
  }
  return order;
}

struct TrainState {
  Model* student = nullptr;
  const Model* teacher = nullptr;
  const TrainConfig* cfg = nullptr;
  LossConfig loss_cfg;
  CostLedger ledger;
  double lr = 0.0;
};

// teacher/student conv maps paired from the deepest end
void pair_feature_maps(const std::vector<Tensor>& teacher_maps,
                       const std::vector<Tensor>& student_maps,
                       std::vector<Tensor>& teacher_out,
                       std::vector<size_t>& student_idx) {
  const size_t pairs = std::min(teacher_maps.size(), student_maps.size());
  if (pairs == 0) {
    throw std::invalid_argument(
        "attention loss needs at least one conv feature map on both sides");
  }
  for (size_t p = 0; p < pairs; ++p) {
    teacher_out.push_back(teacher_maps[teacher_maps.size() - pairs + p]);
    student_idx.push_back(student_maps.size() - pairs + p);
  }
}

// One optimization step of the student on the given inputs. The caller has
// already charged the ledger for the passes this performs.
double distill_step(TrainState& ts, const Tensor& inputs,
                    const std::vector<uint32_t>& labels,
                    Tensor* teacher_logits_out) {
  const TrainConfig& cfg = *ts.cfg;
  const bool scratch = cfg.method == Method::scratch;
  const bool need_features =
      !scratch && (cfg.weight_at > 0.0 || cfg.weight_sp > 0.0);

  ForwardTrace student_trace =
      model_forward_trace(*ts.student, inputs, need_features);

  LossParts parts;
  Tensor logits_grad(student_trace.logits.shape);
  std::vector<Tensor> feature_grads;
  Tensor penult_grad;
  bool have_feature_grads = false, have_penult_grad = false;

  if (scratch) {
    CrossEntropy ce = cross_entropy(student_trace.logits, labels);
    parts.ce = ce.loss;
    logits_grad = ce.grad;
  } else {
    ForwardTrace teacher_trace =
        model_forward_trace(*ts.teacher, inputs, need_features);
    if (teacher_logits_out) *teacher_logits_out = teacher_trace.logits;

    if (cfg.weight_kd > 0.0) {
      KdLoss kd = kd_loss(teacher_trace.logits, student_trace.logits,
                          cfg.temperature, cfg.kd_tau_squared);
      parts.kd = kd.value;
      for (size_t i = 0; i < logits_grad.size(); ++i) {
        logits_grad[i] += cfg.weight_kd * kd.grad_student[i];
      }
    }
    if (cfg.weight_ce > 0.0) {
      CrossEntropy ce = cross_entropy(student_trace.logits, labels);
      parts.ce = ce.loss;
      for (size_t i = 0; i < logits_grad.size(); ++i) {
        logits_grad[i] += cfg.weight_ce * ce.grad[i];
      }
    }
    if (cfg.weight_sp > 0.0) {
      SpLoss sp = sp_loss(teacher_trace.penultimate, student_trace.penultimate);
      parts.sp = sp.value;
      penult_grad = Tensor(student_trace.penultimate.shape);
      for (size_t i = 0; i < penult_grad.size(); ++i) {
        penult_grad[i] = cfg.weight_sp * sp.grad_student[i];
      }
      have_penult_grad = true;
    }
    if (cfg.weight_at > 0.0) {
      std::vector<Tensor> paired_teacher;
      std::vector<size_t> student_idx;
      pair_feature_maps(teacher_trace.conv_features,
                        student_trace.conv_features, paired_teacher,
                        student_idx);
      std::vector<Tensor> paired_student;
      for (size_t idx : student_idx) {
        paired_student.push_back(student_trace.conv_features[idx]);
      }
      AtLoss at = at_loss(paired_teacher, paired_student);
      parts.at = at.value;
      feature_grads.clear();
      for (const Tensor& f : student_trace.conv_features) {
        feature_grads.push_back(Tensor(f.shape));
      }
      for (size_t p = 0; p < student_idx.size(); ++p) {
        Tensor& dst = feature_grads[student_idx[p]];
        for (size_t i = 0; i < dst.size(); ++i) {
          dst[i] += cfg.weight_at * at.grad_student[p][i];
        }
      }
      have_feature_grads = true;
    }
  }

  BackwardResult bw = model_backward(
      *ts.student, student_trace, logits_grad,
      have_feature_grads ? &feature_grads : nullptr,
      have_penult_grad ? &penult_grad : nullptr);
  sgd_update(*ts.student, bw.layer_grads, ts.lr, cfg.momentum,
             cfg.weight_decay);

  if (scratch) return *parts.ce;
  return combined_loss(ts.loss_cfg, parts);
}

struct ArtifactWriters {
  std::ofstream trace;
  std::ofstream features;
  std::ofstream logits;
  bool features_open = false;
  bool logits_open = false;

  void write_u32(std::ofstream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  void write_f32(std::ofstream& out, float v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
};

}  // namespace

TeacherResult train_teacher(const TrainConfig& cfg, const Dataset& data) {
  infer_shapes(cfg.teacher_spec);
  Model teacher = build_model(cfg.teacher_spec);
  if (data.train.num_classes != cfg.teacher_spec.num_classes) {
    throw ConfigError("teacher spec classes do not match the dataset");
  }

  const size_t n = data.train.num_samples();
  const size_t batch = cfg.batch_size;
  const size_t iters = n / batch;
  if (iters == 0) {
    throw ConfigError("teacher training: batch size exceeds the dataset");
  }
  const size_t epochs = cfg.effective_teacher_epochs();
  LrSchedule schedule;
  schedule.initial = cfg.effective_teacher_lr();
  schedule.decay_factor = cfg.lr.decay_factor;
  for (size_t p : cfg.lr.decay_epochs) {
    if (p < epochs) schedule.decay_epochs.push_back(p);
  }

  SplitMix64 master(cfg.effective_teacher_seed());
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    const std::vector<size_t> order =
        epoch_order(n, master.derive(kDataOrderStream + epoch));
    for (size_t it = 0; it < iters; ++it) {
      std::vector<size_t> idx(order.begin() + it * batch,
                              order.begin() + (it + 1) * batch);
      Tensor x = data.train.batch(idx);
      std::vector<uint32_t> labels(batch);
      for (size_t i = 0; i < batch; ++i) labels[i] = data.train.labels[idx[i]];
      ForwardTrace trace = model_forward_trace(teacher, x, false);
      CrossEntropy ce = cross_entropy(trace.logits, labels);
      if (!std::isfinite(ce.loss)) {
        throw NumericError("teacher training diverged (non-finite loss)");
      }
      BackwardResult bw = model_backward(teacher, trace, ce.grad);
      sgd_update(teacher, bw.layer_grads, lr, cfg.momentum, cfg.weight_decay);
    }
  }
  TeacherResult result{std::move(teacher), 0.0};
  result.test_top1 = evaluate(result.model, data.test).top1;
  return result;
}

TeacherResult obtain_teacher(const TrainConfig& cfg, const Dataset& data) {
  if (!cfg.teacher_params.empty()) {
    TeacherResult result{build_model(cfg.teacher_spec), 0.0};
    load_params(result.model, cfg.teacher_params);
    result.test_top1 = evaluate(result.model, data.test).top1;
    return result;
  }
  std::string cache_path;
  if (!cfg.teacher_cache.empty()) {
    const uint64_t digest_hash =
        fnv1a64(data.train.digest().data(), data.train.digest().size());
    const uint64_t key = spec_hash(cfg.teacher_spec) ^ digest_hash ^
                         SplitMix64::mix(cfg.effective_teacher_seed());
    cache_path = cfg.teacher_cache + "/teacher_" + fnv1a64_hex(key) + ".params";
    if (fs::exists(cache_path)) {
      TeacherResult result{build_model(cfg.teacher_spec), 0.0};
      load_params(result.model, cache_path);
      result.test_top1 = evaluate(result.model, data.test).top1;
      return result;
    }
  }
  TeacherResult result = train_teacher(cfg, data);
  if (!cache_path.empty()) {
    fs::create_directories(cfg.teacher_cache);
    save_params(result.model, cache_path);
  }
  return result;
}

ExperimentReport run_distillation(const TrainConfig& cfg, const Model* teacher,
                                  const Dataset& data,
                                  const std::string& artifacts_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const bool scratch = cfg.method == Method::scratch;
  if (!scratch && teacher == nullptr) {
    throw ConfigError("method " + std::string(method_name(cfg.method)) +
                      " needs a teacher");
  }
  if (data.train.num_classes != cfg.student_spec.num_classes) {
    throw ConfigError("student spec classes do not match the dataset");
  }
  if (!scratch && teacher->spec.num_classes != data.train.num_classes) {
    throw ConfigError("teacher classes do not match the dataset");
  }

  const size_t n_train = data.train.num_samples();
  const size_t batch = cfg.batch_size;
  const size_t iters_per_epoch = n_train / batch;  // last partial batch dropped
  if (iters_per_epoch == 0) {
    throw ConfigError("batch size " + std::to_string(batch) +
                      " exceeds the training set (" + std::to_string(n_train) +
                      " samples)");
  }
  const size_t k = cfg.effective_k();
  const CostModel cost_model = cost_model_from(cfg.teacher_spec, cfg.student_spec,
                                               cfg.backward_multiplier);

  TrainState ts;
  Model student = build_model(cfg.student_spec);
  ts.student = &student;
  ts.teacher = teacher;
  ts.cfg = &cfg;
  ts.loss_cfg.temperature = cfg.temperature;
  ts.loss_cfg.weight_ce = cfg.weight_ce;
  ts.loss_cfg.weight_kd = cfg.weight_kd;
  ts.loss_cfg.weight_at = cfg.weight_at;
  ts.loss_cfg.weight_sp = cfg.weight_sp;
  ts.loss_cfg.kd_tau_squared = cfg.kd_tau_squared;

  UnixConfig unix_cfg;
  unix_cfg.criterion = cfg.criterion;
  unix_cfg.alpha = cfg.alpha;
  unix_cfg.w = cfg.w;
  unix_cfg.b = cfg.effective_b();
  unix_cfg.k = k;
  unix_cfg.score_temperature = cfg.score_temperature;
  unix_cfg.per_sample_lambda = cfg.per_sample_lambda;
  unix_cfg.want_features = cfg.record_analysis;
  if (cfg.method == Method::uncertainty_only) {
    unix_cfg.lambda_mode = LambdaMode::forced_zero;
  }
  if (cfg.method == Method::nonadaptive_mixup) {
    unix_cfg.correction_mode = CorrectionMode::constant_one;
  }

  SplitMix64 master(cfg.seed);
  SplitMix64 plan_rng = master.derive(kPlanStream);
  SplitMix64 probe_rng = master.derive(kProbeStream);

  ArtifactWriters writers;
  const bool write_artifacts = !artifacts_dir.empty();
  const bool uses_scoring_pass = cfg.method == Method::unixkd ||
                                 cfg.method == Method::uncertainty_only ||
                                 cfg.method == Method::nonadaptive_mixup;
  const size_t selected_count = (cfg.method == Method::kd || scratch) ? batch : k;
  if (write_artifacts) {
    fs::create_directories(artifacts_dir);
    writers.trace.open(artifacts_dir + "/trace.csv");
    writers.trace << "epoch,iteration,dataset_index\n";
    if (cfg.record_analysis && uses_scoring_pass) {
      writers.features.open(artifacts_dir + "/features.bin", std::ios::binary);
      writers.features_open = true;
      writers.features.write("UXFT", 4);
      const auto shapes = infer_shapes(cfg.student_spec);
      const uint32_t dim =
          static_cast<uint32_t>(shape_product(shapes[shapes.size() - 2]));
      writers.write_u32(writers.features, 1);  // version
      writers.write_u32(writers.features, static_cast<uint32_t>(batch));
      writers.write_u32(writers.features, dim);
      writers.write_u32(writers.features,
                        static_cast<uint32_t>(data.train.num_classes));
    }
    if (cfg.record_analysis && !scratch) {
      writers.logits.open(artifacts_dir + "/teacher_logits.bin",
                          std::ios::binary);
      writers.logits_open = true;
      writers.logits.write("UXTL", 4);
      writers.write_u32(writers.logits, 1);
      writers.write_u32(writers.logits, static_cast<uint32_t>(selected_count));
      writers.write_u32(writers.logits,
                        static_cast<uint32_t>(data.train.num_classes));
    }
  }

  ExperimentReport report;
  report.config = cfg;
  report.cost_model = cost_model;
  const double kd_baseline_per_iter = kd_iteration_cost(cost_model, batch);

  uint64_t iterations_done = 0;
  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ts.lr = lr_at(cfg.lr, epoch);
    const std::vector<size_t> order =
        epoch_order(n_train, master.derive(kDataOrderStream + epoch));
    double loss_sum = 0.0;

    for (size_t it = 0; it < iters_per_epoch; ++it) {
      std::vector<size_t> idx(order.begin() + it * batch,
                              order.begin() + (it + 1) * batch);
      Tensor x = data.train.batch(idx);
      std::vector<uint32_t> batch_labels(batch);
      for (size_t i = 0; i < batch; ++i) {
        batch_labels[i] = data.train.labels[idx[i]];
      }

      Tensor inputs;
      std::vector<size_t> selected;  // positions within the batch
      Tensor scoring_features;       // penultimate of the raw batch, if any
      std::vector<size_t> selected_flags;

      switch (cfg.method) {
        case Method::kd:
        case Method::scratch: {
          inputs = x;
          selected.resize(batch);
          std::iota(selected.begin(), selected.end(), size_t{0});
          if (!scratch) ts.ledger.charge(PassKind::teacher_forward, batch);
          ts.ledger.charge(PassKind::student_forward, batch);
          ts.ledger.charge(PassKind::student_backward, batch);
          break;
        }
        case Method::random_kd: {
          selected = random_subset(batch, k, plan_rng);
          const size_t sample = data.train.sample_size();
          inputs = Tensor({k, data.train.channels, data.train.height,
                           data.train.width});
          for (size_t i = 0; i < k; ++i) {
            std::copy(x.data.begin() + selected[i] * sample,
                      x.data.begin() + (selected[i] + 1) * sample,
                      inputs.data.begin() + i * sample);
          }
          ts.ledger.charge(PassKind::teacher_forward, k);
          ts.ledger.charge(PassKind::student_forward, k);
          ts.ledger.charge(PassKind::student_backward, k);
          break;
        }
        case Method::mixup_only: {
          selected = random_subset(batch, k, plan_rng);
          const size_t sample = data.train.sample_size();
          Tensor sub({k, data.train.channels, data.train.height,
                      data.train.width});
          for (size_t i = 0; i < k; ++i) {
            std::copy(x.data.begin() + selected[i] * sample,
                      x.data.begin() + (selected[i] + 1) * sample,
                      sub.data.begin() + i * sample);
          }
          // conventional mixup: identity ranking, c = 1 for every sample
          UncertaintyScores id;
          id.scores.assign(k, 0.0);
          id.ranking.resize(k);
          std::iota(id.ranking.begin(), id.ranking.end(), size_t{0});
          MixupPlan plan;
          plan.alpha = cfg.alpha;
          plan.lambda = sample_beta(cfg.alpha, plan_rng);
          plan.shuffle = random_permutation(k, plan_rng);
          plan.corrections.assign(k, 1.0);
          plan.k = k;
          inputs = adaptive_mixup(sub, id, plan);
          ts.ledger.charge(PassKind::teacher_forward, k);
          ts.ledger.charge(PassKind::student_forward, k);
          ts.ledger.charge(PassKind::student_backward, k);
          break;
        }
        case Method::unixkd:
        case Method::uncertainty_only:
        case Method::nonadaptive_mixup: {
          UnixBatchResult ub = unix_batch(x, student, unix_cfg, plan_rng);
          ts.ledger.charge(PassKind::student_forward, batch);  // scoring pass
          inputs = std::move(ub.inputs);
          selected = std::move(ub.base_indices);
          scoring_features = std::move(ub.penultimate);
          ts.ledger.charge(PassKind::teacher_forward, k);
          ts.ledger.charge(PassKind::student_forward, k);
          ts.ledger.charge(PassKind::student_backward, k);
          break;
        }
      }

      std::vector<uint32_t> selected_labels(selected.size());
      for (size_t i = 0; i < selected.size(); ++i) {
        selected_labels[i] = batch_labels[selected[i]];
      }

      Tensor teacher_logits;
      const double loss =
          distill_step(ts, inputs, selected_labels,
                       writers.logits_open ? &teacher_logits : nullptr);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + " iteration " +
                           std::to_string(it));
      }
      loss_sum += loss;
      ++iterations_done;

      if (write_artifacts) {
        for (size_t pos : selected) {
          writers.trace << epoch << "," << it << "," << idx[pos] << "\n";
        }
        if (writers.features_open) {
          selected_flags.assign(batch, 0);
          for (size_t pos : selected) selected_flags[pos] = 1;
          writers.write_u32(writers.features, static_cast<uint32_t>(epoch));
          writers.write_u32(writers.features, static_cast<uint32_t>(it));
          const size_t dim = scoring_features.size() / batch;
          for (size_t i = 0; i < batch; ++i) {
            writers.write_u32(writers.features, static_cast<uint32_t>(idx[i]));
            writers.write_u32(writers.features, batch_labels[i]);
            const uint8_t flag = static_cast<uint8_t>(selected_flags[i]);
            writers.features.write(reinterpret_cast<const char*>(&flag), 1);
            for (size_t j = 0; j < dim; ++j) {
              writers.write_f32(writers.features,
                                static_cast<float>(scoring_features[i * dim + j]));
            }
          }
        }
        if (writers.logits_open) {
          writers.write_u32(writers.logits, static_cast<uint32_t>(epoch));
          writers.write_u32(writers.logits, static_cast<uint32_t>(it));
          const size_t classes = data.train.num_classes;
          for (size_t i = 0; i < selected.size(); ++i) {
            writers.write_u32(writers.logits,
                              static_cast<uint32_t>(idx[selected[i]]));
            for (size_t c = 0; c < classes; ++c) {
              writers.write_f32(writers.logits,
                                static_cast<float>(teacher_logits[i * classes + c]));
            }
          }
          // random probe: teacher entropy baseline, uncharged instrumentation
          std::vector<size_t> probe =
              random_subset(batch, selected.size(), probe_rng);
          std::vector<size_t> probe_idx(probe.size());
          for (size_t i = 0; i < probe.size(); ++i) probe_idx[i] = idx[probe[i]];
          Tensor probe_logits =
              model_forward(*teacher, data.train.batch(probe_idx));
          for (size_t i = 0; i < probe.size(); ++i) {
            writers.write_u32(writers.logits, static_cast<uint32_t>(probe_idx[i]));
            for (size_t c = 0; c < classes; ++c) {
              writers.write_f32(writers.logits,
                                static_cast<float>(probe_logits[i * classes + c]));
            }
          }
        }
      }
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(iters_per_epoch);
    stats.test_top1 = evaluate(student, data.test).top1;
    stats.cumulative_relative_cost = relative_cost_percent(
        ts.ledger.energy(cost_model),
        static_cast<double>(iterations_done) * kd_baseline_per_iter);
    report.epochs.push_back(stats);
  }

  const EvalResult final_eval = evaluate(student, data.test);
  report.final_top1 = final_eval.top1;
  report.final_top5 = final_eval.top5;
  report.ledger = ts.ledger.counts();
  report.ledger_energy = ts.ledger.energy(cost_model);
  report.iterations = iterations_done;
  report.relative_cost_percent = relative_cost_percent(
      report.ledger_energy,
      static_cast<double>(iterations_done) * kd_baseline_per_iter);
  if (!scratch) {
    report.teacher_test_top1 = evaluate(*teacher, data.test).top1;
  }

  if (write_artifacts) {
    save_params(student, artifacts_dir + "/student.params");
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

void emit_report(const ExperimentReport& report, const std::string& dir) {
  fs::create_directories(dir);

  json j;
  j["config"] = train_config_to_json(report.config);
  j["plan"] = {
      {"lambda_mode",
       report.config.method == Method::uncertainty_only ? "forced_zero"
                                                        : "beta"},
      {"correction_mode",
       report.config.method == Method::nonadaptive_mixup ||
               report.config.method == Method::mixup_only
           ? "constant_one"
           : "sigmoid"},
  };
  j["cost_model"] = {{"F_t", report.cost_model.teacher_forward},
                     {"F_s", report.cost_model.student_forward},
                     {"B_s", report.cost_model.student_backward}};
  if (report.teacher_test_top1 >= 0.0) {
    j["teacher_test_top1"] = report.teacher_test_top1;
  }
  json epochs = json::array();
  for (size_t e = 0; e < report.epochs.size(); ++e) {
    epochs.push_back(
        {{"epoch", e},
         {"train_loss", report.epochs[e].train_loss},
         {"test_top1", report.epochs[e].test_top1},
         {"cumulative_relative_cost",
          format_percent(report.epochs[e].cumulative_relative_cost)}});
  }
  j["epochs"] = std::move(epochs);
  j["final_top1"] = report.final_top1;
  if (report.final_top5 >= 0.0) j["final_top5"] = report.final_top5;
  j["iterations"] = report.iterations;
  j["ledger"] = {{"teacher_forward_samples", report.ledger.teacher_forward},
                 {"student_forward_samples", report.ledger.student_forward},
                 {"student_backward_samples", report.ledger.student_backward},
                 {"energy", report.ledger_energy}};
  j["relative_cost_percent"] = format_percent(report.relative_cost_percent);
  j["relative_cost_raw"] = report.relative_cost_percent;
  j["seed"] = report.config.seed;

  std::ofstream out(dir + "/report.json");
  if (!out) throw DataError("cannot write " + dir + "/report.json");
  out << j.dump(2) << "\n";

  std::ofstream csv(dir + "/epochs.csv");
  if (!csv) throw DataError("cannot write " + dir + "/epochs.csv");
  csv << "epoch,train_loss,test_acc,cumulative_relative_cost\n";
  for (size_t e = 0; e < report.epochs.size(); ++e) {
    csv << e << "," << format_double(report.epochs[e].train_loss) << ","
        << format_double(report.epochs[e].test_top1) << ","
        << format_percent(report.epochs[e].cumulative_relative_cost) << "\n";
  }

  std::ofstream timing(dir + "/timing.txt");
  timing << format_double(report.wall_clock_seconds) << "\n";
}

}  // namespace unixkd
