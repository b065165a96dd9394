#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "unixkd/mixup.hpp"
#include "unixkd/model.hpp"
#include "unixkd/uncertainty.hpp"

namespace unixkd {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Method {
  kd,
  random_kd,
  unixkd,
  uncertainty_only,
  mixup_only,
  nonadaptive_mixup,
  scratch
};

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct LrSchedule {
  double initial = 0.05;
  std::vector<size_t> decay_epochs;  // strictly increasing
  double decay_factor = 10.0;
};

// initial / factor^(number of decay points <= epoch); a decay point takes
// effect at the start of its epoch.
double lr_at(const LrSchedule& schedule, size_t epoch);

struct TrainConfig {
  std::string dataset;
  ModelSpec teacher_spec;
  ModelSpec student_spec;
  std::string teacher_params;  // optional pretrained-teacher path

  Method method = Method::kd;
  Criterion criterion = Criterion::entropy;
  size_t batch_size = 64;  // N
  size_t k = 0;            // 0 in JSON-absent case -> ceil(0.75 N)
  double alpha = 1.0;
  double w = 10.0;
  double b = -1.0;  // < 0 -> N/2

  double weight_ce = 0.0;
  double weight_kd = 1.0;
  double weight_at = 0.0;
  double weight_sp = 0.0;
  double temperature = 4.0;

  size_t epochs = 1;
  LrSchedule lr;
  uint64_t seed = 0;
  double backward_multiplier = 1.0;

  double momentum = 0.9;
  double weight_decay = 5e-4;

  size_t teacher_epochs = 0;   // 0 -> epochs
  double teacher_lr = -1.0;    // < 0 -> lr.initial
  uint64_t teacher_seed = 0;   // used when teacher_seed_set
  bool teacher_seed_set = false;
  std::string teacher_cache;   // optional cache directory

  bool record_analysis = false;
  bool kd_tau_squared = true;
  double score_temperature = 1.0;
  bool per_sample_lambda = false;

  size_t effective_k() const;
  double effective_b() const;
  uint64_t effective_teacher_seed() const;
  size_t effective_teacher_epochs() const;
  double effective_teacher_lr() const;
  void validate() const;
};

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j,
                               const std::string& where);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::string& path);

}  // namespace unixkd
