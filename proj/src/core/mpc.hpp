#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "core/plant.hpp"
#include "core/reference.hpp"

namespace rlmpc {

class KeyValueFile;

struct MpcConfig {
  Eigen::Vector4d Q = Eigen::Vector4d(5.0, 5.0, 0.0, 0.0);  // diagonal state weights
  double R = 0.5;                                          // input weight
  int N = 50;                                              // prediction horizon [steps]
  double Ts = 0.01;                                        // [s]
  double x1_bound = 2.0;                                   // |theta| bound [rad]
  double u_bound = 12.0;                                   // |u| bound [V]
  double crucial_ts = 0.1;                                 // DRMPC crucial-point spacing [s]
  double tol = 1e-8;                                       // Hildreth stopping tolerance
  int max_iter = 500;                                      // Hildreth sweeps
};

void validate(const MpcConfig& cfg);

// Keys q1..q4, r1, horizon, ts, x1_bound, u_bound, cts, tol, max_iter.
MpcConfig load_mpc_config(const KeyValueFile& file, const std::string& prefix);

// Stacked prediction X = Sx x0 + Su U over steps 1..N.
struct Prediction {
  Eigen::MatrixXd Sx;  // 4N x 4, block rows A, A^2, ..., A^N
  Eigen::MatrixXd Su;  // 4N x N, block (i, j) = A^(i-j) B for j <= i
};

Prediction build_prediction(const DiscreteModel& model, int N);

// min 0.5 U'HU + f'U  s.t.  G U <= h.
// Rows of G: [0, N) u <= ub, [N, 2N) -u <= ub, [2N, 3N) theta <= b,
// [3N, 4N) -theta <= b, with theta the predicted arm angle at steps 1..N.
struct CondensedQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

CondensedQp build_qp(const DiscreteModel& model, const MpcConfig& cfg, const State& x0,
                     std::span<const double> window);

struct MpcSolution {
  Eigen::VectorXd U;
  Eigen::VectorXd multipliers;
  int iterations = 0;
  int active_constraints = 0;
  bool converged = true;  // false when max_iter was reached (MaxIterReached)
  bool relaxed = false;   // theta rows widened to restore feasibility
  double kkt_residual = 0.0;
};

// Hildreth's dual coordinate ascent. Returns the unconstrained minimizer when
// it is feasible; otherwise sweeps the dual until the largest multiplier
// update drops below `tol` or `max_iter` sweeps have run. The dual objective
// after each sweep is appended to `dual_trace` when given.
MpcSolution solve_qp(const CondensedQp& qp, double tol, int max_iter,
                     std::vector<double>* dual_trace = nullptr);

// Stationarity, primal feasibility and complementarity, as a max-norm.
double kkt_residual(const CondensedQp& qp, const Eigen::VectorXd& U, const Eigen::VectorXd& lambda);

// Full QP solution with the one-shot theta relaxation applied if needed.
MpcSolution mpc_solve(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                      std::span<const double> window);

// Receding-horizon input: first element of the QP solution.
double mpc_step(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                std::span<const double> window);

// MPC on the window reconstructed from the crucial points.
double drmpc_step(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                  const CrucialPoints& cp);

}  // namespace rlmpc
