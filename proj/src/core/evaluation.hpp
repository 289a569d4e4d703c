#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/controllers.hpp"
#include "core/plant.hpp"
#include "core/reference.hpp"
#include "core/trajectory.hpp"

namespace rlmpc {

// Trapezoidal average of 5 (x1 - w1)^2 + 5 x2^2 + 0.5 u^2 over [ts, tf].
// Throws WindowOutOfRange unless ts < tf lie within the log span.
double average_cost(const TrajectoryLog& log, double ts, double tf);

// Closed loop from the origin on the nonlinear plant for `duration` seconds,
// one control update per Ts. The last row carries the input the controller
// would apply at the final state.
TrajectoryLog run_controller(const Controller& controller, const PendulumParams& plant,
                             const RefTrajectory& traj, double duration, double Ts);

struct TimingStats {
  double mean_s = 0.0;
  double p50_s = 0.0;
  double p99_s = 0.0;
  int samples = 0;
};

// Per-call wall time of controller.act on a fixed pseudo-random set of states
// around the upright equilibrium, tracking sin(t). Plant stepping is excluded.
TimingStats benchmark_runtime(const Controller& controller, int n_steps, int warmup_steps);

struct EvalReport {
  std::string controller;
  std::string plant;      // perturbation description
  std::string reference;  // RefTrajectory::describe()
  double j_ac = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  int soft_violations = 0;  // logged samples outside the soft zone
  bool has_timing = false;
  TimingStats timing;
};

// Samples with |alpha| >= alpha_soft or |theta| >= theta_soft.
int count_violations(const TrajectoryLog& log, double alpha_soft, double theta_soft);

struct ComparisonRow {
  std::string controller;
  std::string reference;
  double j_ac = 0.0;
  double pct_vs_baseline = 0.0;  // 100 (J - J_base) / J_base
  bool is_baseline = false;
};

// One row per report, compared against the report for `baseline_id` with the
// same reference. Throws InvalidArgument if a baseline is missing.
std::vector<ComparisonRow> compare(const std::vector<EvalReport>& reports, const std::string& baseline_id);

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);

}  // namespace rlmpc
