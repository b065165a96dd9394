#include "unixkd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace unixkd {

using nlohmann::json;

const char* method_name(Method m) {
  switch (m) {
    case Method::kd: return "kd";
    case Method::random_kd: return "random_kd";
    case Method::unixkd: return "unixkd";
    case Method::uncertainty_only: return "uncertainty_only";
    case Method::mixup_only: return "mixup_only";
    case Method::nonadaptive_mixup: return "nonadaptive_mixup";
    case Method::scratch: return "scratch";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kd, Method::random_kd, Method::unixkd,
                   Method::uncertainty_only, Method::mixup_only,
                   Method::nonadaptive_mixup, Method::scratch}) {
    if (name == method_name(m)) return m;
  }
  throw ConfigError("unknown method: " + name);
}

double lr_at(const LrSchedule& schedule, size_t epoch) {
  size_t decays = 0;
  for (size_t point : schedule.decay_epochs) {
    if (point <= epoch) ++decays;
  }
  return schedule.initial / std::pow(schedule.decay_factor,
                                     static_cast<double>(decays));
}

size_t TrainConfig::effective_k() const {
  if (k > 0) return k;
  return (3 * batch_size + 3) / 4;  // ceil(0.75 N)
}

double TrainConfig::effective_b() const {
  return b < 0.0 ? static_cast<double>(batch_size) / 2.0 : b;
}

uint64_t TrainConfig::effective_teacher_seed() const {
  return teacher_seed_set ? teacher_seed : seed;
}

size_t TrainConfig::effective_teacher_epochs() const {
  return teacher_epochs > 0 ? teacher_epochs : epochs;
}

double TrainConfig::effective_teacher_lr() const {
  return teacher_lr >= 0.0 ? teacher_lr : lr.initial;
}

void TrainConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: dataset path is required");
  if (batch_size < 1) throw ConfigError("config: N must be >= 1");
  if (effective_k() > batch_size) {
    throw ConfigError("config: k = " + std::to_string(effective_k()) +
                      " exceeds N = " + std::to_string(batch_size));
  }
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
  if (!(temperature > 0.0)) throw ConfigError("config: temperature must be positive");
  if (!(score_temperature > 0.0)) throw ConfigError("config: score_temperature must be positive");
  if (weight_ce < 0 || weight_kd < 0 || weight_at < 0 || weight_sp < 0) {
    throw ConfigError("config: loss weights must be non-negative");
  }
  if (method != Method::scratch &&
      weight_ce + weight_kd + weight_at + weight_sp <= 0.0) {
    throw ConfigError("config: at least one loss weight must be positive");
  }
  if (backward_multiplier <= 0.0) {
    throw ConfigError("config: backward_multiplier must be positive");
  }
  if (!(lr.initial > 0.0) || !(lr.decay_factor > 0.0)) {
    throw ConfigError("config: lr and decay factor must be positive");
  }
  for (size_t i = 0; i < lr.decay_epochs.size(); ++i) {
    if (lr.decay_epochs[i] >= epochs) {
      throw ConfigError("config: decay epoch " +
                        std::to_string(lr.decay_epochs[i]) +
                        " is not below epochs = " + std::to_string(epochs));
    }
    if (i > 0 && lr.decay_epochs[i] <= lr.decay_epochs[i - 1]) {
      throw ConfigError("config: decay epochs must be strictly increasing");
    }
  }
  infer_shapes(student_spec);
  // scratch never runs the teacher but still reports cost against the kd
  // baseline, which needs F_t
  infer_shapes(teacher_spec);
}

json model_spec_to_json(const ModelSpec& spec) {
  json j;
  j["input_shape"] = spec.input_shape;
  j["num_classes"] = spec.num_classes;
  j["seed"] = spec.seed;
  json layers = json::array();
  for (const LayerDesc& d : spec.layers) {
    json l;
    l["kind"] = layer_kind_name(d.kind);
    if (d.kind == LayerKind::dense) l["out_features"] = d.width;
    if (d.kind == LayerKind::conv3x3) l["out_channels"] = d.width;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad or missing \"" + std::string(key) +
                      "\": " + e.what());
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad \"" + std::string(key) + "\": " + e.what());
  }
}

}  // namespace

ModelSpec model_spec_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": model spec must be an object");
  reject_unknown_keys(j, {"input_shape", "num_classes", "seed", "layers"}, where);
  ModelSpec spec;
  spec.input_shape = get_field<std::vector<size_t>>(j, "input_shape", where);
  spec.num_classes = get_field<size_t>(j, "num_classes", where);
  spec.seed = get_field<uint64_t>(j, "seed", where);
  const json& layers = j.at("layers");
  if (!layers.is_array()) throw ConfigError(where + ": layers must be an array");
  for (size_t i = 0; i < layers.size(); ++i) {
    const json& l = layers[i];
    const std::string lw = where + ".layers[" + std::to_string(i) + "]";
    reject_unknown_keys(l, {"kind", "out_features", "out_channels"}, lw);
    LayerDesc d;
    try {
      d.kind = parse_layer_kind(get_field<std::string>(l, "kind", lw));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(lw + ": " + e.what());
    }
    if (d.kind == LayerKind::dense) {
      d.width = get_field<size_t>(l, "out_features", lw);
    } else if (d.kind == LayerKind::conv3x3) {
      d.width = get_field<size_t>(l, "out_channels", lw);
    }
    spec.layers.push_back(d);
  }
  return spec;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["teacher_spec"] = model_spec_to_json(cfg.teacher_spec);
  j["student_spec"] = model_spec_to_json(cfg.student_spec);
  if (!cfg.teacher_params.empty()) j["teacher_params"] = cfg.teacher_params;
  j["method"] = method_name(cfg.method);
  j["criterion"] = criterion_name(cfg.criterion);
  j["N"] = cfg.batch_size;
  j["k"] = cfg.effective_k();
  j["alpha"] = cfg.alpha;
  j["w"] = cfg.w;
  j["b"] = cfg.effective_b();
  j["weight_ce"] = cfg.weight_ce;
  j["weight_kd"] = cfg.weight_kd;
  j["weight_at"] = cfg.weight_at;
  j["weight_sp"] = cfg.weight_sp;
  j["temperature"] = cfg.temperature;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr.initial;
  j["decay_epochs"] = cfg.lr.decay_epochs;
  j["decay_factor"] = cfg.lr.decay_factor;
  j["seed"] = cfg.seed;
  j["backward_multiplier"] = cfg.backward_multiplier;
  j["momentum"] = cfg.momentum;
  j["weight_decay"] = cfg.weight_decay;
  if (cfg.teacher_epochs > 0) j["teacher_epochs"] = cfg.teacher_epochs;
  if (cfg.teacher_lr >= 0.0) j["teacher_lr"] = cfg.teacher_lr;
  if (cfg.teacher_seed_set) j["teacher_seed"] = cfg.teacher_seed;
  if (!cfg.teacher_cache.empty()) j["teacher_cache"] = cfg.teacher_cache;
  j["record_analysis"] = cfg.record_analysis;
  j["kd_tau_squared"] = cfg.kd_tau_squared;
  j["score_temperature"] = cfg.score_temperature;
  j["per_sample_lambda"] = cfg.per_sample_lambda;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  const std::string where = "config";
  if (!j.is_object()) throw ConfigError("config: root must be an object");
  reject_unknown_keys(
      j,
      {"dataset", "teacher_spec", "student_spec", "teacher_params", "method",
       "criterion", "N", "k", "alpha", "w", "b", "weight_ce", "weight_kd",
       "weight_at", "weight_sp", "temperature", "epochs", "lr", "decay_epochs",
       "decay_factor", "seed", "backward_multiplier", "momentum",
       "weight_decay", "teacher_epochs", "teacher_lr", "teacher_seed",
       "teacher_cache", "record_analysis", "kd_tau_squared",
       "score_temperature", "per_sample_lambda"},
      where);

  TrainConfig cfg;
  cfg.dataset = get_field<std::string>(j, "dataset", where);
  if (!j.contains("student_spec") || !j.contains("teacher_spec")) {
    throw ConfigError("config: teacher_spec and student_spec are required");
  }
  cfg.student_spec =
      model_spec_from_json(j.at("student_spec"), where + ".student_spec");
  cfg.teacher_spec =
      model_spec_from_json(j.at("teacher_spec"), where + ".teacher_spec");
  maybe(j, "teacher_params", cfg.teacher_params, where);
  if (j.contains("method")) {
    cfg.method = parse_method(get_field<std::string>(j, "method", where));
  }
  if (j.contains("criterion")) {
    try {
      cfg.criterion =
          parse_criterion(get_field<std::string>(j, "criterion", where));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  maybe(j, "N", cfg.batch_size, where);
  maybe(j, "k", cfg.k, where);
  maybe(j, "alpha", cfg.alpha, where);
  maybe(j, "w", cfg.w, where);
  maybe(j, "b", cfg.b, where);
  maybe(j, "weight_ce", cfg.weight_ce, where);
  maybe(j, "weight_kd", cfg.weight_kd, where);
  maybe(j, "weight_at", cfg.weight_at, where);
  maybe(j, "weight_sp", cfg.weight_sp, where);
  maybe(j, "temperature", cfg.temperature, where);
  maybe(j, "epochs", cfg.epochs, where);
  maybe(j, "lr", cfg.lr.initial, where);
  maybe(j, "decay_epochs", cfg.lr.decay_epochs, where);
  maybe(j, "decay_factor", cfg.lr.decay_factor, where);
  maybe(j, "seed", cfg.seed, where);
  maybe(j, "backward_multiplier", cfg.backward_multiplier, where);
  maybe(j, "momentum", cfg.momentum, where);
  maybe(j, "weight_decay", cfg.weight_decay, where);
  maybe(j, "teacher_epochs", cfg.teacher_epochs, where);
  maybe(j, "teacher_lr", cfg.teacher_lr, where);
  if (j.contains("teacher_seed")) {
    cfg.teacher_seed = get_field<uint64_t>(j, "teacher_seed", where);
    cfg.teacher_seed_set = true;
  }
  maybe(j, "teacher_cache", cfg.teacher_cache, where);
  maybe(j, "record_analysis", cfg.record_analysis, where);
  maybe(j, "kd_tau_squared", cfg.kd_tau_squared, where);
  maybe(j, "score_temperature", cfg.score_temperature, where);
  maybe(j, "per_sample_lambda", cfg.per_sample_lambda, where);

  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace unixkd
