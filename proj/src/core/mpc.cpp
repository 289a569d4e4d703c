#include "core/mpc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include <Eigen/Cholesky>

#include "core/config.hpp"
#include "core/error.hpp"

namespace rlmpc {

void validate(const MpcConfig& cfg) {
  if ((cfg.Q.array() < 0.0).any() || !cfg.Q.allFinite()) {
    fail(ErrorCode::InvalidArgument, "MPC state weights must be >= 0");
  }
  if (!(cfg.R > 0.0)) fail(ErrorCode::InvalidArgument, "MPC input weight must be > 0");
  if (cfg.N < 1) fail(ErrorCode::InvalidArgument, "MPC horizon must be >= 1");
  if (!(cfg.Ts > 0.0)) fail(ErrorCode::InvalidArgument, "MPC sample time must be > 0");
  if (!(cfg.x1_bound > 0.0) || !(cfg.u_bound > 0.0)) {
    fail(ErrorCode::InvalidArgument, "MPC bounds must be > 0");
  }
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) {
    fail(ErrorCode::InvalidArgument, "MPC solver tolerance/iterations invalid");
  }
}

MpcConfig load_mpc_config(const KeyValueFile& file, const std::string& prefix) {
  MpcConfig cfg;
  cfg.Q[0] = file.get_double(prefix + "q1", cfg.Q[0]);
  cfg.Q[1] = file.get_double(prefix + "q2", cfg.Q[1]);
  cfg.Q[2] = file.get_double(prefix + "q3", cfg.Q[2]);
  cfg.Q[3] = file.get_double(prefix + "q4", cfg.Q[3]);
  cfg.R = file.get_double(prefix + "r1", cfg.R);
  cfg.N = static_cast<int>(file.get_int(prefix + "horizon", cfg.N));
  cfg.Ts = file.get_double(prefix + "ts", cfg.Ts);
  cfg.x1_bound = file.get_double(prefix + "x1_bound", cfg.x1_bound);
  cfg.u_bound = file.get_double(prefix + "u_bound", cfg.u_bound);
  cfg.crucial_ts = file.get_double(prefix + "cts", cfg.crucial_ts);
  cfg.tol = file.get_double(prefix + "tol", cfg.tol);
  cfg.max_iter = static_cast<int>(file.get_int(prefix + "max_iter", cfg.max_iter));
  try {
    validate(cfg);
    crucial_stride(cfg.Ts, cfg.crucial_ts, cfg.N);
  } catch (const Error& e) {
    fail(ErrorCode::Config, file.origin() + ": " + e.what());
  }
  return cfg;
}

Prediction build_prediction(const DiscreteModel& model, int N) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "build_prediction: N must be >= 1");
  Prediction p;
  p.Sx.resize(4 * N, 4);
  p.Su = Eigen::MatrixXd::Zero(4 * N, N);

  // powers[i] = A^i B, i = 0..N-1
  std::vector<Eigen::Vector4d> powers(static_cast<std::size_t>(N));
  powers[0] = model.B;
  for (int i = 1; i < N; ++i) powers[i] = model.A * powers[i - 1];

  Eigen::Matrix4d a_pow = model.A;
  for (int i = 0; i < N; ++i) {
    p.Sx.block<4, 4>(4 * i, 0) = a_pow;
    a_pow = model.A * a_pow;
    for (int j = 0; j <= i; ++j) p.Su.block<4, 1>(4 * i, j) = powers[i - j];
  }
  return p;
}

CondensedQp build_qp(const DiscreteModel& model, const MpcConfig& cfg, const State& x0,
                     std::span<const double> window) {
  validate(cfg);
  const int N = cfg.N;
  if (window.size() != static_cast<std::size_t>(N)) {
    fail(ErrorCode::DimensionMismatch, "reference window length " + std::to_string(window.size()) +
                                           " != horizon " + std::to_string(N));
  }
  const Prediction pred = build_prediction(model, N);

  Eigen::VectorXd q_bar(4 * N);
  Eigen::VectorXd ref_stack = Eigen::VectorXd::Zero(4 * N);
  for (int i = 0; i < N; ++i) {
    q_bar.segment<4>(4 * i) = cfg.Q;
    ref_stack[4 * i] = window[i];
  }

  const Eigen::VectorXd free_response = pred.Sx * x0.vec();
  const Eigen::MatrixXd weighted_su = q_bar.asDiagonal() * pred.Su;

  CondensedQp qp;
  qp.H = pred.Su.transpose() * weighted_su;
  qp.H.diagonal().array() += cfg.R;
  // J = (X - ref)' Qbar (X - ref) + R U'U = U'HU + 2 f'U + const
  qp.f = weighted_su.transpose() * (free_response - ref_stack);

  qp.G = Eigen::MatrixXd::Zero(4 * N, N);
  qp.h.resize(4 * N);
  for (int i = 0; i < N; ++i) {
    qp.G(i, i) = 1.0;
    qp.G(N + i, i) = -1.0;
    qp.h[i] = cfg.u_bound;
    qp.h[N + i] = cfg.u_bound;

    const auto theta_row = pred.Su.row(4 * i);
    qp.G.row(2 * N + i) = theta_row;
    qp.G.row(3 * N + i) = -theta_row;
    qp.h[2 * N + i] = cfg.x1_bound - free_response[4 * i];
    qp.h[3 * N + i] = cfg.x1_bound + free_response[4 * i];
  }
  return qp;
}

double kkt_residual(const CondensedQp& qp, const Eigen::VectorXd& U, const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd slack = qp.G * U - qp.h;
  const Eigen::VectorXd stationarity = qp.H * U + qp.f + qp.G.transpose() * lambda;
  double residual = stationarity.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    residual = std::max(residual, std::max(0.0, slack[i]));
    residual = std::max(residual, std::abs(lambda[i] * slack[i]));
    residual = std::max(residual, std::max(0.0, -lambda[i]));
  }
  return residual;
}

MpcSolution solve_qp(const CondensedQp& qp, double tol, int max_iter, std::vector<double>* dual_trace) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index m = qp.G.rows();
  if (qp.H.cols() != n || qp.f.size() != n || (m > 0 && qp.G.cols() != n) || qp.h.size() != m) {
    fail(ErrorCode::DimensionMismatch, "solve_qp: inconsistent QP dimensions");
  }
  if (!(tol > 0.0) || max_iter < 1) fail(ErrorCode::InvalidArgument, "solve_qp: bad tol/max_iter");

  const Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success || !qp.H.isApprox(qp.H.transpose(), 1e-10)) {
    fail(ErrorCode::NotPositiveDefinite, "solve_qp: H is not symmetric positive definite");
  }

  MpcSolution sol;
  const Eigen::VectorXd unconstrained = -llt.solve(qp.f);
  sol.multipliers = Eigen::VectorXd::Zero(m);

  const Eigen::VectorXd slack0 = qp.G * unconstrained - qp.h;
  if (m == 0 || slack0.maxCoeff() <= 0.0) {
    sol.U = unconstrained;
    sol.kkt_residual = kkt_residual(qp, sol.U, sol.multipliers);
    return sol;
  }

  // Dual: max_{λ>=0} -0.5 λ'Pλ - d'λ with P = G H^-1 G', d = h + G H^-1 f.
  const Eigen::MatrixXd hinv_gt = llt.solve(qp.G.transpose());
  const Eigen::MatrixXd P = qp.G * hinv_gt;
  const Eigen::VectorXd d = -slack0;

  Eigen::VectorXd& lambda = sol.multipliers;
  // Running P λ keeps a sweep O(m^2).
  Eigen::VectorXd p_lambda = Eigen::VectorXd::Zero(m);
#ifndef NDEBUG
  double dual_prev = 0.0;
#endif
  sol.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double pii = P(i, i);
      if (!(pii > 0.0)) continue;
      const double w = -(d[i] + p_lambda[i] - pii * lambda[i]) / pii;
      const double next = std::max(0.0, w);
      const double delta = next - lambda[i];
      if (delta != 0.0) {
        lambda[i] = next;
        p_lambda.noalias() += delta * P.col(i);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    sol.iterations = iter + 1;
    if (dual_trace != nullptr) dual_trace->push_back(-0.5 * lambda.dot(p_lambda) - d.dot(lambda));
#ifndef NDEBUG
    const double dual = -0.5 * lambda.dot(p_lambda) - d.dot(lambda);
    assert(dual >= dual_prev - 1e-9 * (1.0 + std::abs(dual_prev)));
    dual_prev = dual;
#endif
    if (max_change < tol) {
      sol.converged = true;
      break;
    }
  }

  sol.U = unconstrained - hinv_gt * lambda;
  sol.active_constraints = static_cast<int>((lambda.array() > 0.0).count());
  sol.kkt_residual = kkt_residual(qp, sol.U, lambda);
  return sol;
}

namespace {

double max_violation(const CondensedQp& qp, const Eigen::VectorXd& U) {
  return std::max(0.0, (qp.G * U - qp.h).maxCoeff());
}

}  // namespace

MpcSolution mpc_solve(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                      std::span<const double> window) {
  CondensedQp qp = build_qp(model, cfg, x, window);
  MpcSolution sol = solve_qp(qp, cfg.tol, cfg.max_iter);
  const double feasibility_tol = 10.0 * cfg.tol;
  if (max_violation(qp, sol.U) <= feasibility_tol) return sol;

  // Theta rows infeasible (input rows alone are always feasible). Solve the
  // input-bounded problem, then widen the theta bound just enough for that
  // solution to satisfy it and re-solve.
  const int N = cfg.N;
  CondensedQp box;
  box.H = qp.H;
  box.f = qp.f;
  box.G = qp.G.topRows(2 * N);
  box.h = qp.h.head(2 * N);
  const MpcSolution box_sol = solve_qp(box, cfg.tol, cfg.max_iter);

  const Eigen::VectorXd theta = qp.G.middleRows(2 * N, N) * box_sol.U;
  // qp.h[2N + i] = b - free_i; predicted theta_i = free_i + theta[i]
  double widen = 0.0;
  for (int i = 0; i < N; ++i) {
    widen = std::max(widen, theta[i] - qp.h[2 * N + i]);
    widen = std::max(widen, -theta[i] - qp.h[3 * N + i]);
  }
  widen += 1e-6;
  qp.h.segment(2 * N, 2 * N).array() += widen;
  sol = solve_qp(qp, cfg.tol, cfg.max_iter);
  sol.relaxed = true;
  if (max_violation(qp, sol.U) > feasibility_tol) {
    // Fall back to the input-bounded solution, which is feasible for the
    // widened problem by construction.
    const bool converged = box_sol.converged;
    sol = box_sol;
    sol.relaxed = true;
    sol.converged = converged;
  }
  return sol;
}

double mpc_step(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                std::span<const double> window) {
  const MpcSolution sol = mpc_solve(model, cfg, x, window);
  return std::clamp(sol.U[0], -cfg.u_bound, cfg.u_bound);
}

double drmpc_step(const DiscreteModel& model, const MpcConfig& cfg, const State& x,
                  const CrucialPoints& cp) {
  if (cp.N != cfg.N) fail(ErrorCode::DimensionMismatch, "crucial points horizon != MPC horizon");
  const std::vector<double> window = regenerate_window(cp);
  return mpc_step(model, cfg, x, window);
}

}  // namespace rlmpc
