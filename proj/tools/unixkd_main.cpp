#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "unixkd/analysis.hpp"
#include "unixkd/config.hpp"
#include "unixkd/cost.hpp"
#include "unixkd/dataset.hpp"
#include "unixkd/gradcheck.hpp"
#include "unixkd/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCheckFailed = 4;

int run_train(const std::string& config_path, const std::string& out_dir,
              bool teacher_only) {
  const unixkd::TrainConfig cfg = unixkd::load_train_config(config_path);
  const unixkd::Dataset data = unixkd::load_dataset(cfg.dataset);

  if (teacher_only) {
    unixkd::TeacherResult teacher = unixkd::train_teacher(cfg, data);
    std::filesystem::create_directories(out_dir);
    unixkd::save_params(teacher.model, out_dir + "/teacher.params");
    std::ofstream meta(out_dir + "/teacher.json");
    nlohmann::json j;
    j["spec"] = unixkd::model_spec_to_json(cfg.teacher_spec);
    j["dataset_digest"] = data.train.digest();
    j["seed"] = cfg.effective_teacher_seed();
    j["test_top1"] = teacher.test_top1;
    meta << j.dump(2) << "\n";
    std::cout << "teacher test top-1: " << teacher.test_top1 << "%\n";
    return kExitOk;
  }

  const unixkd::Model* teacher_ptr = nullptr;
  unixkd::TeacherResult teacher;
  if (cfg.method != unixkd::Method::scratch) {
    teacher = unixkd::obtain_teacher(cfg, data);
    teacher_ptr = &teacher.model;
  }
  unixkd::ExperimentReport report =
      unixkd::run_distillation(cfg, teacher_ptr, data, out_dir);
  unixkd::emit_report(report, out_dir);
  std::cout << "final top-1: " << report.final_top1 << "%  relative cost: "
            << unixkd::format_percent(report.relative_cost_percent) << "%\n";
  return kExitOk;
}

int run_cost(uint64_t n, uint64_t k, double ratio, double backward_mult) {
  if (ratio <= 0.0) {
    std::cerr << "cost: --ratio must be positive\n";
    return kExitConfig;
  }
  const unixkd::CostModel model{ratio, 1.0, backward_mult};
  const double pct = unixkd::relative_cost_percent(
      unixkd::unix_iteration_cost(model, n, k),
      unixkd::kd_iteration_cost(model, n));
  std::cout << unixkd::format_percent(pct) << "\n";
  return kExitOk;
}

int run_gradcheck() {
  const auto cases = unixkd::run_gradcheck_suite(24, 1e-5);
  bool ok = true;
  for (const auto& c : cases) {
    const bool pass = c.max_rel_error <= 1e-4;
    ok = ok && pass;
    std::printf("%-24s max relative error %.3e  %s\n", c.name.c_str(),
                c.max_rel_error, pass ? "ok" : "FAIL");
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int run_gen_data(const std::string& out, const unixkd::GenConfig& gen) {
  const unixkd::Dataset data = unixkd::generate_dataset(gen);
  unixkd::save_dataset(out, data);
  std::cout << "wrote " << data.train.num_samples() << " train / "
            << data.test.num_samples() << " test samples to " << out
            << " (train digest " << data.train.digest() << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-aware mixup distillation lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir;

  CLI::App* train = app.add_subcommand("train", "run a distillation experiment");
  train->add_option("--config", config_path, "config JSON")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* teacher = app.add_subcommand("teacher", "train and save a teacher");
  teacher->add_option("--config", config_path, "config JSON")->required();
  teacher->add_option("--out", out_dir, "output directory")->required();

  uint64_t cost_n = 64, cost_k = 48;
  double cost_ratio = 1.0, cost_mult = 1.0;
  CLI::App* cost = app.add_subcommand("cost", "relative cost of one iteration");
  cost->add_option("--N", cost_n, "batch size")->required();
  cost->add_option("--k", cost_k, "selected samples")->required();
  cost->add_option("--ratio", cost_ratio, "F_t / F_s")->required();
  cost->add_option("--backward-mult", cost_mult, "B_s / F_s (default 1)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");

  CLI::App* analyze = app.add_subcommand("analyze", "post-process a run directory");
  analyze->add_option("--run", run_dir, "run directory")->required();

  unixkd::GenConfig gen;
  std::string gen_out;
  CLI::App* gen_data = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_data->add_option("--out", gen_out, "output directory")->required();
  gen_data->add_option("--seed", gen.seed, "generator seed")->required();
  gen_data->add_option("--classes", gen.classes, "number of classes")->required();
  gen_data->add_option("--per-class", gen.per_class, "train samples per class")->required();
  gen_data->add_option("--test-per-class", gen.test_per_class, "test samples per class");
  gen_data->add_option("--noise", gen.noise, "pixel noise scale");
  gen_data->add_option("--label-noise", gen.label_noise, "train label flip probability");
  gen_data->add_option("--hard-classes", gen.hard_classes, "classes with extra label noise");
  gen_data->add_option("--hard-label-noise", gen.hard_label_noise, "flip probability for hard classes");
  gen_data->add_option("--height", gen.height, "image height");
  gen_data->add_option("--width", gen.width, "image width");
  gen_data->add_option("--channels", gen.channels, "image channels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path, out_dir, false);
    if (teacher->parsed()) return run_train(config_path, out_dir, true);
    if (cost->parsed()) return run_cost(cost_n, cost_k, cost_ratio, cost_mult);
    if (gradcheck->parsed()) return run_gradcheck();
    if (analyze->parsed()) {
      unixkd::analyze_run(run_dir);
      return kExitOk;
    }
    if (gen_data->parsed()) return run_gen_data(gen_out, gen);
  } catch (const unixkd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const unixkd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const unixkd::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
