#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "core/mlp.hpp"
#include "core/mpc.hpp"
#include "core/plant.hpp"
#include "core/reference.hpp"

namespace rlmpc {

// [x (4), crucial points for the arm angle].
Eigen::VectorXd make_observation(const State& x, const CrucialPoints& cp);

// Observation columns with MPC targets (one sample per column).
struct NnmpcDataset {
  Eigen::MatrixXd observations;  // obs_dim x n
  Eigen::VectorXd targets;       // n

  Eigen::Index size() const { return targets.size(); }
};

struct DatasetOptions {
  int n_episodes = 50;
  int episode_len = 700;
  std::uint64_t seed = 1;
  double noise_sigma = 0.3;     // [V], exploration on the applied input
  double noise_fraction = 0.2;  // share of steps receiving noise
  // Share of episodes starting from a random rest state inside
  // |theta| <= start_theta, |alpha| <= start_alpha instead of the origin.
  double random_start_fraction = 0.5;
  double start_theta = 1.0;
  double start_alpha = 0.3;
  int threads = 1;
  SineFamily family;
};

struct DatasetStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  int dropped_episodes = 0;
};

// Closed-loop DRMPC rollouts on `plant` over random references; records the
// noise-free MPC input at every visited state. Deterministic given the seed
// regardless of thread count.
NnmpcDataset generate_dataset(const PendulumParams& plant, const DiscreteModel& model,
                              const MpcConfig& cfg, const DatasetOptions& options,
                              DatasetStats* stats = nullptr);

// CSV: header `x1,x2,x3,x4,c1,...,c6,u`.
void save_dataset_csv(const NnmpcDataset& data, const std::filesystem::path& path);
NnmpcDataset load_dataset_csv(const std::filesystem::path& path);

struct NnmpcController {
  Mlp net;               // obs -> u, tanh output scaled by the input bound
  std::string metadata;  // key = value lines describing how it was trained
};

struct NnmpcTrainOptions {
  int epochs = 200;
  int batch_size = 64;
  double lr = 1e-3;
  int hidden = 128;
  double output_bound = 12.0;
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct NnmpcTrainResult {
  NnmpcController controller;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  TrainingHistory history;
};

// Inputs are standardized during training; the affine standardization is
// folded into the first layer so the stored network consumes raw observations.
NnmpcTrainResult train_nnmpc(const NnmpcDataset& data, const NnmpcTrainOptions& options);

double nnmpc_act(const NnmpcController& ctrl, const State& x, const CrucialPoints& cp);

void save_controller(const NnmpcController& ctrl, const std::filesystem::path& weights_path);
NnmpcController load_controller(const std::filesystem::path& weights_path);

}  // namespace rlmpc
