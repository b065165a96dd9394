#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace unixkd {

// Per-sample FLOPs of the three training passes.
struct CostModel {
  double teacher_forward = 0.0;   // F_t
  double student_forward = 0.0;   // F_s
  double student_backward = 0.0;  // B_s

  double ratio() const { return teacher_forward / student_forward; }
};

// E = N * (F_t + F_s + B_s)
double kd_iteration_cost(const CostModel& model, uint64_t n);

// E = k*F_t + (N+k)*F_s + k*B_s. k == 0 degenerates to the scoring pass
// alone (N*F_s).
double unix_iteration_cost(const CostModel& model, uint64_t n, uint64_t k);

// E = k * (F_t + F_s + B_s)
double random_iteration_cost(const CostModel& model, uint64_t n, uint64_t k);

// 100 * method / baseline, full precision.
double relative_cost_percent(double method_energy, double baseline_energy);

// Reporting convention: two decimals, half-up.
double round2_half_up(double percent);
std::string format_percent(double percent);  // e.g. "94.05"

enum class PassKind { teacher_forward, student_forward, student_backward };
PassKind parse_pass_kind(const std::string& name);

struct LedgerCounts {
  uint64_t teacher_forward = 0;   // N_t
  uint64_t student_forward = 0;   // N_s1
  uint64_t student_backward = 0;  // N_s2

  bool operator==(const LedgerCounts&) const = default;
};

// Monotone counters of samples sent through each pass. Charges commute, so
// concurrent workers may share one ledger.
class CostLedger {
 public:
  CostLedger() = default;
  CostLedger(const CostLedger& o) { *this = o; }
  CostLedger& operator=(const CostLedger& o) {
    teacher_forward_.store(o.teacher_forward_.load());
    student_forward_.store(o.student_forward_.load());
    student_backward_.store(o.student_backward_.load());
    return *this;
  }

  void charge(PassKind kind, uint64_t samples);
  LedgerCounts counts() const;
  double energy(const CostModel& model) const;

 private:
  std::atomic<uint64_t> teacher_forward_{0};
  std::atomic<uint64_t> student_forward_{0};
  std::atomic<uint64_t> student_backward_{0};
};

double ledger_energy(const LedgerCounts& counts, const CostModel& model);

}  // namespace unixkd
