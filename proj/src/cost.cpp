#include "unixkd/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace unixkd {

double kd_iteration_cost(const CostModel& model, uint64_t n) {
  if (n < 1) throw std::invalid_argument("kd_iteration_cost: N must be >= 1");
  return static_cast<double>(n) *
         (model.teacher_forward + model.student_forward +
          model.student_backward);
}

double unix_iteration_cost(const CostModel& model, uint64_t n, uint64_t k) {
  if (n < 1) throw std::invalid_argument("unix_iteration_cost: N must be >= 1");
  if (k > n) {
    throw std::invalid_argument("unix_iteration_cost: k = " +
                                std::to_string(k) + " exceeds N = " +
                                std::to_string(n));
  }
  const double kd = static_cast<double>(k);
  return kd * model.teacher_forward +
         static_cast<double>(n + k) * model.student_forward +
         kd * model.student_backward;
}

double random_iteration_cost(const CostModel& model, uint64_t n, uint64_t k) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("random_iteration_cost: k out of [1, N]");
  }
  return static_cast<double>(k) *
         (model.teacher_forward + model.student_forward +
          model.student_backward);
}

double relative_cost_percent(double method_energy, double baseline_energy) {
  if (!(baseline_energy > 0.0)) {
    throw std::invalid_argument("relative_cost: baseline must be positive");
  }
  return 100.0 * method_energy / baseline_energy;
}

double round2_half_up(double percent) {
  return std::floor(percent * 100.0 + 0.5) / 100.0;
}

std::string format_percent(double percent) {
  const long long cents = static_cast<long long>(std::floor(percent * 100.0 + 0.5));
  std::string frac = std::to_string(std::llabs(cents) % 100);
  if (frac.size() < 2) frac = "0" + frac;
  std::string sign = cents < 0 ? "-" : "";
  return sign + std::to_string(std::llabs(cents) / 100) + "." + frac;
}

PassKind parse_pass_kind(const std::string& name) {
  if (name == "teacher_forward") return PassKind::teacher_forward;
  if (name == "student_forward") return PassKind::student_forward;
  if (name == "student_backward") return PassKind::student_backward;
  throw std::invalid_argument("unknown pass kind: " + name);
}

void CostLedger::charge(PassKind kind, uint64_t samples) {
  switch (kind) {
    case PassKind::teacher_forward:
      teacher_forward_.fetch_add(samples, std::memory_order_relaxed);
      return;
    case PassKind::student_forward:
      student_forward_.fetch_add(samples, std::memory_order_relaxed);
      return;
    case PassKind::student_backward:
      student_backward_.fetch_add(samples, std::memory_order_relaxed);
      return;
  }
  throw std::invalid_argument("unknown pass kind");
}

LedgerCounts CostLedger::counts() const {
  return {teacher_forward_.load(std::memory_order_relaxed),
          student_forward_.load(std::memory_order_relaxed),
          student_backward_.load(std::memory_order_relaxed)};
}

double CostLedger::energy(const CostModel& model) const {
  return ledger_energy(counts(), model);
}

double ledger_energy(const LedgerCounts& counts, const CostModel& model) {
  return static_cast<double>(counts.teacher_forward) * model.teacher_forward +
         static_cast<double>(counts.student_forward) * model.student_forward +
         static_cast<double>(counts.student_backward) * model.student_backward;
}

}  // namespace unixkd
