// Acceptance suite: runs every top-level requirement at its stated tolerance
// and prints one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stats_util.hpp"
#include "unixkd/analysis.hpp"
#include "unixkd/config.hpp"
#include "unixkd/cost.hpp"
#include "unixkd/dataset.hpp"
#include "unixkd/gradcheck.hpp"
#include "unixkd/mixup.hpp"
#include "unixkd/rng.hpp"
#include "unixkd/trainer.hpp"
#include "unixkd/uncertainty.hpp"

using namespace unixkd;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = true;
  std::string detail;

  CriterionResult(int criterion_id, std::string criterion_name)
      : id(criterion_id), name(std::move(criterion_name)) {}
};

std::string g_root;

std::string work_dir(const std::string& name) {
  const std::string dir = g_root + "/" + name;
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing " + path + ">";
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// runs the real CLI and returns its first stdout line
std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(UNIXKD_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return "<popen failed>";
  char buf[256] = {0};
  std::string out;
  if (fgets(buf, sizeof(buf), pipe)) out = buf;
  pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

// ---------------------------------------------------------------- criterion 1

CriterionResult check_cost_tables() {
  CriterionResult c{1, "cost-table reproduction (N=64, B_s=F_s)"};
  const auto t0 = std::chrono::steady_clock::now();

  struct Case {
    uint64_t n, k;
    double ratio;
    double published;
    bool random;
  };
  std::vector<Case> cases;
  const double similar_ratios[] = {3.25, 3.93, 3.06, 6.12, 2.97, 4.14};
  const double similar_pub[] = {94.06, 91.88, 94.76, 87.32, 95.10, 91.29};
  const double cross_ratios[] = {38.17, 174.00, 13.56, 27.16, 23.49, 8.22};
  const double cross_pub_k40[] = {64.99, 63.07, 68.93, 65.93, 66.42, 72.29};
  const double cross_pub_k48[] = {77.49, 75.57, 81.43, 78.43, 78.92, 84.79};
  for (int i = 0; i < 6; ++i) {
    cases.push_back({64, 48, similar_ratios[i], similar_pub[i], false});
    cases.push_back({64, 40, cross_ratios[i], cross_pub_k40[i], false});
    cases.push_back({64, 48, cross_ratios[i], cross_pub_k48[i], false});
  }
  cases.push_back({64, 48, 4.0, 75.00, true});
  cases.push_back({256, 200, 4.0, 78.13, true});

  int failures = 0;
  std::ostringstream detail;
  for (const Case& cs : cases) {
    double got;
    if (cs.random) {
      const CostModel m{cs.ratio, 1.0, 1.0};
      got = round2_half_up(relative_cost_percent(
          random_iteration_cost(m, cs.n, cs.k), kd_iteration_cost(m, cs.n)));
    } else {
      char args[160];
      std::snprintf(args, sizeof(args), "cost --N %llu --k %llu --ratio %.2f",
                    static_cast<unsigned long long>(cs.n),
                    static_cast<unsigned long long>(cs.k), cs.ratio);
      const std::string out = run_cli(args);
      got = std::strtod(out.c_str(), nullptr);
      // cross-check the CLI against the library
      const CostModel m{cs.ratio, 1.0, 1.0};
      const double lib = round2_half_up(relative_cost_percent(
          unix_iteration_cost(m, cs.n, cs.k), kd_iteration_cost(m, cs.n)));
      if (std::fabs(lib - got) > 1e-9) {
        c.pass = false;
        detail << " [cli/library disagree at ratio " << cs.ratio << "]";
      }
    }
    if (std::fabs(got - cs.published) > 0.01 + 1e-12) {
      ++failures;
      c.pass = false;
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    " [N=%llu k=%llu ratio=%.2f: got %.2f, expected %.2f]",
                    static_cast<unsigned long long>(cs.n),
                    static_cast<unsigned long long>(cs.k), cs.ratio, got,
                    cs.published);
      detail << msg;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 1.0) {
    c.pass = false;
    detail << " [took " << secs << "s, budget 1s]";
  }
  std::ostringstream head;
  head << (cases.size() - failures) << "/" << cases.size()
       << " table entries within +/-0.01 after rounding";
  c.detail = head.str() + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 2

ModelSpec toy_teacher_spec(uint64_t seed, size_t classes) {
  return {{1, 4, 4},
          {{LayerKind::conv3x3, 4},
           {LayerKind::relu, 0},
           {LayerKind::conv3x3, 4},
           {LayerKind::relu, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, classes}},
          classes,
          seed};
}

ModelSpec toy_student_spec(uint64_t seed, size_t classes) {
  return {{1, 4, 4},
          {{LayerKind::conv3x3, 2},
           {LayerKind::relu, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, classes}},
          classes,
          seed};
}

CriterionResult check_ledger_audit() {
  CriterionResult c{2, "ledger equals closed-form cost on 3-epoch toy runs"};
  GenConfig gen;
  gen.classes = 3;
  gen.per_class = 40;
  gen.test_per_class = 10;
  gen.height = gen.width = 4;
  gen.seed = 5;
  const Dataset data = generate_dataset(gen);

  TrainConfig cfg;
  cfg.dataset = "in-memory";
  cfg.teacher_spec = toy_teacher_spec(100, 3);
  cfg.student_spec = toy_student_spec(200, 3);
  cfg.batch_size = 16;
  cfg.k = 12;
  cfg.epochs = 3;
  cfg.teacher_epochs = 3;
  cfg.seed = 1;

  const TeacherResult teacher = train_teacher(cfg, data);
  const uint64_t n = cfg.batch_size, k = cfg.k;
  const uint64_t iters = (data.train.num_samples() / n) * cfg.epochs;
  const CostModel cm = cost_model_from(cfg.teacher_spec, cfg.student_spec);

  struct Want {
    Method method;
    LedgerCounts counts;
    double energy;
  };
  const double it_d = static_cast<double>(iters);
  const std::vector<Want> wants = {
      {Method::kd, {n * iters, n * iters, n * iters}, it_d * kd_iteration_cost(cm, n)},
      {Method::random_kd, {k * iters, k * iters, k * iters}, it_d * random_iteration_cost(cm, n, k)},
      {Method::unixkd, {k * iters, (n + k) * iters, k * iters}, it_d * unix_iteration_cost(cm, n, k)},
      {Method::uncertainty_only, {k * iters, (n + k) * iters, k * iters}, it_d * unix_iteration_cost(cm, n, k)},
      {Method::nonadaptive_mixup, {k * iters, (n + k) * iters, k * iters}, it_d * unix_iteration_cost(cm, n, k)},
      {Method::mixup_only, {k * iters, k * iters, k * iters}, it_d * random_iteration_cost(cm, n, k)},
      {Method::scratch, {0, n * iters, n * iters},
       static_cast<double>(iters * n) * (cm.student_forward + cm.student_backward)},
  };

  std::ostringstream detail;
  for (const Want& want : wants) {
    TrainConfig rc = cfg;
    rc.method = want.method;
    const ExperimentReport report = run_distillation(
        rc, want.method == Method::scratch ? nullptr : &teacher.model, data);
    const bool ok =
        report.ledger == want.counts && report.ledger_energy == want.energy;
    if (!ok) {
      c.pass = false;
      detail << " [" << method_name(want.method) << " mismatch]";
    }
  }
  c.detail = "7 methods, exact integer/energy equality" + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 3

CriterionResult check_gradients() {
  CriterionResult c{3, "gradient suite (layers + CE/KD tau 1,4/SP/AT, 24 seeds)"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = run_gradcheck_suite(24, 1e-5);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& gc : cases) {
    if (gc.max_rel_error > worst) {
      worst = gc.max_rel_error;
      worst_name = gc.name;
    }
    if (gc.max_rel_error > 1e-4) c.pass = false;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 60.0) c.pass = false;
  std::ostringstream detail;
  detail << "worst " << worst << " (" << worst_name << "), " << secs << "s";
  c.detail = detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 4

CriterionResult check_uncertainty_values() {
  CriterionResult c{4, "uncertainty unit values"};
  std::ostringstream detail;

  const Tensor uniform4({1, 4}, 0.25);
  const double e_uniform = entropy_uncertainty(uniform4)[0];
  if (std::fabs(e_uniform - std::log(4.0)) > 1e-12) {
    c.pass = false;
    detail << " [entropy(uniform4) off]";
  }

  const Tensor p = Tensor::of({1, 3}, {0.7, 0.2, 0.1});
  if (std::fabs(entropy_uncertainty(p)[0] - 0.801819) > 1e-6) {
    c.pass = false;
    detail << " [entropy(0.7,0.2,0.1) = " << entropy_uncertainty(p)[0] << "]";
  }

  const Tensor m = Tensor::of({1, 3}, {0.6, 0.3, 0.1});
  if (margin_uncertainty(m)[0] != -0.3) {
    c.pass = false;
    detail << " [margin not exact]";
  }

  Tensor onehot({1, 5});
  onehot[3] = 1.0;
  if (confidence_uncertainty(onehot)[0] != -1.0) {
    c.pass = false;
    detail << " [confidence one-hot not exact]";
  }
  c.detail = "entropy/margin/confidence at pinned tolerances" + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 5

CriterionResult check_mixup_properties() {
  CriterionResult c{5, "mixup convexity, sigmoid center, step limit"};
  std::ostringstream detail;

  SplitMix64 rng(20240816);
  size_t convex_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + rng.next_below(15);
    const size_t d = 1 + rng.next_below(8);
    Tensor batch({n, d});
    for (double& v : batch.data) v = rng.next_double() * 4.0 - 2.0;
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.next_double();
    UncertaintyScores us{Criterion::entropy, scores, rank_descending(scores)};
    MixupPlan plan;
    plan.lambda = rng.next_double();
    plan.shuffle = random_permutation(n, rng);
    plan.k = n;
    plan.corrections.resize(n);
    for (size_t i = 0; i < n; ++i) {
      plan.corrections[i] = correction_factor(i, n, 10.0, n / 2.0);
    }
    const Tensor mixed = adaptive_mixup(batch, us, plan);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) {
        const double a = batch[us.ranking[i] * d + j];
        const double b = batch[plan.shuffle[i] * d + j];
        const double v = mixed[i * d + j];
        if (v < std::min(a, b) - 1e-12 || v > std::max(a, b) + 1e-12) {
          ++convex_violations;
        }
      }
    }
  }
  if (convex_violations) {
    c.pass = false;
    detail << " [" << convex_violations << " convexity violations]";
  }

  if (correction_factor(32, 64, 10.0, 32.0) != 0.5) {
    c.pass = false;
    detail << " [c(rank=b) != 0.5]";
  }

  double worst_step = 0.0;
  for (size_t r = 0; r < 64; ++r) {
    const double dist = std::fabs(static_cast<double>(r) - 32.0);
    if (dist < 3.0) continue;  // off-center region
    const double step = r > 32 ? 1.0 : 0.0;
    worst_step = std::max(
        worst_step, std::fabs(correction_factor(r, 64, 1000.0, 32.0) - step));
  }
  if (worst_step >= 1e-20) {
    c.pass = false;
    detail << " [step deviation " << worst_step << "]";
  }

  if (std::fabs(correction_factor(0, 64, 10.0, 32.0) - 0.006693) > 1e-6) {
    c.pass = false;
    detail << " [c(0; w=10, b=32, N=64) off]";
  }
  std::ostringstream head;
  head << "1000 random batches convex; step deviation " << worst_step;
  c.detail = head.str() + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 6

ModelSpec desk_teacher_spec(uint64_t seed) {
  return {{1, 8, 8},
          {{LayerKind::conv3x3, 12},
           {LayerKind::relu, 0},
           {LayerKind::conv3x3, 12},
           {LayerKind::relu, 0},
           {LayerKind::avgpool2x2, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, 10}},
          10,
          seed};
}

ModelSpec desk_student_spec(uint64_t seed) {
  return {{1, 8, 8},
          {{LayerKind::conv3x3, 4},
           {LayerKind::relu, 0},
           {LayerKind::avgpool2x2, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, 10}},
          10,
          seed};
}

CriterionResult check_desk_efficiency() {
  CriterionResult c{6, "desk-scale efficiency (3 seeds, 30 epochs)"};
  const auto t0 = std::chrono::steady_clock::now();

  GenConfig gen;
  gen.classes = 10;
  gen.per_class = 500;
  gen.test_per_class = 100;
  gen.height = gen.width = 8;
  gen.seed = 42;
  gen.noise = 0.35;
  const Dataset data = generate_dataset(gen);

  TrainConfig base;
  base.dataset = "in-memory";
  base.teacher_spec = desk_teacher_spec(1000);
  base.student_spec = desk_student_spec(2000);
  base.batch_size = 64;
  base.k = 48;
  base.alpha = 1.0;
  base.w = 10.0;
  base.weight_ce = 0.0;  // label-free
  base.weight_kd = 1.0;
  base.temperature = 4.0;
  base.epochs = 30;
  base.lr.initial = 0.05;
  base.lr.decay_epochs = {18, 24};
  base.teacher_epochs = 30;
  base.teacher_seed = 12345;
  base.teacher_seed_set = true;

  const CostModel cm = cost_model_from(base.teacher_spec, base.student_spec);
  std::ostringstream detail;
  if (cm.ratio() < 8.0) {
    c.pass = false;
    detail << " [teacher/student ratio " << cm.ratio() << " < 8]";
  }

  const TeacherResult teacher = train_teacher(base, data);

  double kd_sum = 0.0, unix_sum = 0.0;
  double worst_cost = 0.0;
  for (uint64_t seed : {1, 2, 3}) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    cfg.student_spec.seed = 2000 + seed;

    cfg.method = Method::kd;
    kd_sum += run_distillation(cfg, &teacher.model, data).final_top1;

    cfg.method = Method::unixkd;
    const ExperimentReport unix_report =
        run_distillation(cfg, &teacher.model, data);
    unix_sum += unix_report.final_top1;
    worst_cost = std::max(worst_cost, unix_report.relative_cost_percent);
  }
  const double kd_mean = kd_sum / 3.0;
  const double unix_mean = unix_sum / 3.0;
  if (unix_mean < kd_mean - 1.5) c.pass = false;
  if (worst_cost > 80.0) {
    c.pass = false;
    detail << " [relative cost " << worst_cost << "% above 80%]";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > 30.0 * 60.0) {
    c.pass = false;
    detail << " [runtime " << secs << "s over 30min]";
  }
  char head[256];
  std::snprintf(head, sizeof(head),
                "teacher %.1f%%; kd mean %.2f%%, unixkd mean %.2f%% at %s%% "
                "cost (ratio %.1f, %.0fs)",
                teacher.test_top1, kd_mean, unix_mean,
                format_percent(worst_cost).c_str(), cm.ratio(), secs);
  c.detail = head + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 7

CriterionResult check_ablation_grid() {
  CriterionResult c{7, "ablation grid: all seven methods emit well-formed reports"};
  const std::string ds_dir = work_dir("grid_ds");
  GenConfig gen;
  gen.classes = 3;
  gen.per_class = 40;
  gen.test_per_class = 10;
  gen.height = gen.width = 4;
  gen.seed = 5;
  const Dataset data = generate_dataset(gen);
  save_dataset(ds_dir, data);

  TrainConfig cfg;
  cfg.dataset = ds_dir;
  cfg.teacher_spec = toy_teacher_spec(100, 3);
  cfg.student_spec = toy_student_spec(200, 3);
  cfg.batch_size = 16;
  cfg.k = 12;
  cfg.epochs = 2;
  cfg.teacher_epochs = 3;
  cfg.seed = 1;

  const TeacherResult teacher = train_teacher(cfg, data);
  std::ostringstream detail;
  json unixkd_config, unixkd_plan;
  std::vector<std::pair<Method, json>> echoes;

  for (Method method :
       {Method::kd, Method::random_kd, Method::unixkd, Method::uncertainty_only,
        Method::mixup_only, Method::nonadaptive_mixup, Method::scratch}) {
    TrainConfig rc = cfg;
    rc.method = method;
    const std::string out = work_dir(std::string("grid_") + method_name(method));
    try {
      const ExperimentReport report = run_distillation(
          rc, method == Method::scratch ? nullptr : &teacher.model, data, out);
      emit_report(report, out);
      json parsed;
      std::ifstream(out + "/report.json") >> parsed;
      for (const char* key :
           {"config", "plan", "epochs", "final_top1", "ledger",
            "relative_cost_percent", "iterations"}) {
        if (!parsed.contains(key)) {
          c.pass = false;
          detail << " [" << method_name(method) << " missing " << key << "]";
        }
      }
      if (parsed["epochs"].size() != rc.epochs) {
        c.pass = false;
        detail << " [" << method_name(method) << " epoch rows]";
      }
      if (method == Method::unixkd) {
        unixkd_config = parsed["config"];
        unixkd_plan = parsed["plan"];
      }
      echoes.emplace_back(method, parsed);
    } catch (const std::exception& e) {
      c.pass = false;
      detail << " [" << method_name(method) << " threw: " << e.what() << "]";
    }
  }

  // uncertainty_only and nonadaptive_mixup must differ from unixkd only in
  // the method name and the documented plan parameters
  for (const auto& [method, parsed] : echoes) {
    if (method != Method::uncertainty_only && method != Method::nonadaptive_mixup) {
      continue;
    }
    json cfg_echo = parsed["config"];
    cfg_echo["method"] = "unixkd";
    if (cfg_echo != unixkd_config) {
      c.pass = false;
      detail << " [" << method_name(method) << " config deviates beyond method]";
    }
    const json plan = parsed["plan"];
    if (method == Method::uncertainty_only &&
        (plan["lambda_mode"] != "forced_zero" ||
         unixkd_plan["lambda_mode"] != "beta")) {
      c.pass = false;
      detail << " [uncertainty_only lambda mode echo]";
    }
    if (method == Method::nonadaptive_mixup &&
        (plan["correction_mode"] != "constant_one" ||
         unixkd_plan["correction_mode"] != "sigmoid")) {
      c.pass = false;
      detail << " [nonadaptive_mixup correction mode echo]";
    }
  }
  c.detail = "7/7 methods completed" + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 8

CriterionResult check_analysis_statistics() {
  CriterionResult c{8, "planted easy/hard statistics (5 seeds)"};
  const std::string ds_dir = work_dir("planted_ds");
  GenConfig gen;
  gen.classes = 10;
  gen.per_class = 300;
  gen.test_per_class = 50;
  gen.height = gen.width = 8;
  gen.seed = 77;
  gen.noise = 0.25;
  gen.hard_classes = 4;
  gen.hard_label_noise = 0.5;
  const Dataset data = generate_dataset(gen);
  save_dataset(ds_dir, data);

  TrainConfig base;
  base.dataset = ds_dir;
  base.teacher_spec = {{1, 8, 8},
                       {{LayerKind::conv3x3, 8},
                        {LayerKind::relu, 0},
                        {LayerKind::conv3x3, 8},
                        {LayerKind::relu, 0},
                        {LayerKind::avgpool2x2, 0},
                        {LayerKind::flatten, 0},
                        {LayerKind::dense, 10}},
                       10,
                       500};
  base.student_spec = {{1, 8, 8},
                       {{LayerKind::conv3x3, 3},
                        {LayerKind::relu, 0},
                        {LayerKind::avgpool2x2, 0},
                        {LayerKind::flatten, 0},
                        {LayerKind::dense, 10}},
                       10,
                       600};
  base.batch_size = 64;
  base.k = 32;
  base.epochs = 12;
  base.teacher_epochs = 25;
  base.teacher_seed = 999;
  base.teacher_seed_set = true;
  base.record_analysis = true;

  const TeacherResult teacher = train_teacher(base, data);
  std::ostringstream detail;

  int negative = 0;
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    TrainConfig cfg = base;
    cfg.method = Method::unixkd;
    cfg.seed = seed;
    cfg.student_spec.seed = 600 + seed;
    const std::string out = work_dir("planted_unix_" + std::to_string(seed));
    const ExperimentReport report =
        run_distillation(cfg, &teacher.model, data, out);
    emit_report(report, out);
    analyze_run(out);
    const std::string rho_text = slurp(out + "/correlation.txt");
    const double rho = std::strtod(rho_text.c_str(), nullptr);
    detail << " rho=" << rho;
    if (rho < 0.0) ++negative;
  }
  if (negative < 4) {
    c.pass = false;
    detail << " [only " << negative << "/5 negative]";
  }

  // random_kd selection must be unbiased: chi-square of selected category
  // counts against the training-set label shares
  TrainConfig rnd = base;
  rnd.method = Method::random_kd;
  rnd.seed = 11;
  const std::string rnd_out = work_dir("planted_random");
  const ExperimentReport rnd_report =
      run_distillation(rnd, &teacher.model, data, rnd_out);
  emit_report(rnd_report, rnd_out);
  const SamplingTrace trace = load_trace(rnd_out, data.train);
  const CategoryCounts counts = category_sampling_counts(trace);
  std::vector<uint64_t> label_share(data.train.num_classes, 0);
  for (uint32_t l : data.train.labels) ++label_share[l];
  const double total_selected = static_cast<double>(trace.records.size());
  const double total_labels = static_cast<double>(data.train.labels.size());
  double chi2 = 0.0;
  for (size_t cat = 0; cat < counts.totals.size(); ++cat) {
    const double expected =
        total_selected * static_cast<double>(label_share[cat]) / total_labels;
    const double diff = static_cast<double>(counts.totals[cat]) - expected;
    chi2 += diff * diff / expected;
  }
  const double pvalue = teststats::chi_square_pvalue(
      chi2, static_cast<double>(counts.totals.size() - 1));
  if (pvalue < 1e-6) {
    c.pass = false;
    detail << " [chi2=" << chi2 << " rejects uniform selection]";
  }
  std::ostringstream head;
  head << negative << "/5 rho negative; random_kd chi2 p=" << pvalue;
  c.detail = head.str() + detail.str();
  return c;
}

// ---------------------------------------------------------------- criterion 9

CriterionResult check_determinism() {
  CriterionResult c{9, "byte-identical reruns"};
  const std::string ds_dir = work_dir("det_ds");
  GenConfig gen;
  gen.classes = 3;
  gen.per_class = 40;
  gen.test_per_class = 10;
  gen.height = gen.width = 4;
  gen.seed = 5;
  const Dataset data = generate_dataset(gen);
  save_dataset(ds_dir, data);

  TrainConfig cfg;
  cfg.dataset = ds_dir;
  cfg.teacher_spec = toy_teacher_spec(100, 3);
  cfg.student_spec = toy_student_spec(200, 3);
  cfg.batch_size = 16;
  cfg.k = 12;
  cfg.epochs = 2;
  cfg.teacher_epochs = 3;
  cfg.method = Method::unixkd;
  cfg.record_analysis = true;
  cfg.seed = 123;

  const TeacherResult teacher = train_teacher(cfg, data);
  const std::string a = work_dir("det_a");
  const std::string b = work_dir("det_b");
  emit_report(run_distillation(cfg, &teacher.model, data, a), a);
  emit_report(run_distillation(cfg, &teacher.model, data, b), b);

  std::ostringstream detail;
  for (const char* f : {"report.json", "epochs.csv", "trace.csv",
                        "features.bin", "teacher_logits.bin", "student.params"}) {
    if (slurp(a + "/" + f) != slurp(b + "/" + f)) {
      c.pass = false;
      detail << " [" << f << " differs]";
    }
  }
  // the dataset generator is deterministic too
  const Dataset again = generate_dataset(gen);
  if (again.train.digest() != data.train.digest()) {
    c.pass = false;
    detail << " [dataset digest differs]";
  }
  c.detail = "report.json, CSVs, recordings, params" + detail.str();
  return c;
}

}  // namespace

int main() {
  g_root = (fs::temp_directory_path() / "unixkd_acceptance").string();
  fs::remove_all(g_root);
  fs::create_directories(g_root);

  std::vector<CriterionResult> results;
  results.push_back(check_cost_tables());
  results.push_back(check_ledger_audit());
  results.push_back(check_gradients());
  results.push_back(check_uncertainty_values());
  results.push_back(check_mixup_properties());
  results.push_back(check_desk_efficiency());
  results.push_back(check_ablation_grid());
  results.push_back(check_analysis_statistics());
  results.push_back(check_determinism());

  int failures = 0;
  for (const CriterionResult& c : results) {
    failures += c.pass ? 0 : 1;
    std::printf("CRITERION %d [%s] %s — %s\n", c.id, c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.detail.c_str());
  }
  if (failures) {
    std::printf("%d of %zu criteria failed\n", failures, results.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", results.size());
  return 0;
}
