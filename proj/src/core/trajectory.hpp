#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace rlmpc {

struct TrajectoryRow {
  double t = 0.0;
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  double u = 0.0;  // input applied from t to t + Ts
  double ref = 0.0;
};

// Uniformly sampled closed-loop record.
struct TrajectoryLog {
  double Ts = 0.01;
  std::vector<TrajectoryRow> rows;
};

// CSV: header `t,theta,alpha,theta_dot,alpha_dot,u,ref`.
void save_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path);
TrajectoryLog load_trajectory_csv(const std::filesystem::path& path);

}  // namespace rlmpc
