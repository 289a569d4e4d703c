#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/mpc.hpp"
#include "support/oracles.hpp"
#include "support/qp_gen.hpp"

using namespace rlmpc;

namespace {

DiscreteModel model(double Ts = 0.01) { return discretize(linearize(PendulumParams::qube_servo2()), Ts); }

MpcConfig short_horizon(int N) {
  MpcConfig c;
  c.N = N;
  c.crucial_ts = c.Ts * N;
  return c;
}

std::vector<double> sine_window(long long k, int N) { return full_window(RefTrajectory::sine(1.0, 1.0), k, 0.01, N); }

}  // namespace

TEST(Mpc, PredictionMatchesRecursion) {
  const DiscreteModel m = model();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int N : {1, 5, 20}) {
    const Prediction p = build_prediction(m, N);
    ASSERT_EQ(p.Sx.rows(), 4 * N);
    ASSERT_EQ(p.Su.cols(), N);
    Eigen::VectorXd U(N);
    for (int i = 0; i < N; ++i) U[i] = n(rng);
    const Eigen::Vector4d x0(n(rng), n(rng), n(rng), n(rng));
    const Eigen::VectorXd X = oracle::rollout_linear(m.A, m.B, x0, U);
    EXPECT_LT((p.Sx * x0 + p.Su * U - X).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + X.cwiseAbs().maxCoeff()));
  }
}

TEST(Mpc, QpObjectiveMatchesStageCost) {
  const DiscreteModel m = model();
  const MpcConfig cfg = short_horizon(10);
  const State x0(0.3, -0.05, 0.2, 0.1);
  const auto w = sine_window(40, cfg.N);
  const CondensedQp qp = build_qp(m, cfg, x0, w);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 2.0);
  auto quad = [&](const Eigen::VectorXd& U) { return 0.5 * U.dot(qp.H * U) + qp.f.dot(U); };
  Eigen::VectorXd U1(cfg.N), U2(cfg.N);
  for (int i = 0; i < cfg.N; ++i) {
    U1[i] = n(rng);
    U2[i] = n(rng);
  }
  const double J1 = oracle::horizon_cost(m.A, m.B, x0.vec(), U1, cfg.Q, cfg.R, w);
  const double J2 = oracle::horizon_cost(m.A, m.B, x0.vec(), U2, cfg.Q, cfg.R, w);
  EXPECT_NEAR(quad(U1) - quad(U2), 0.5 * (J1 - J2), 1e-9 * (1.0 + std::abs(J1)));
}

TEST(Mpc, ConstraintRowsEncodeBounds) {
  const DiscreteModel m = model();
  const MpcConfig cfg = short_horizon(8);
  const State x0(1.5, 0.0, 3.0, 0.0);
  const CondensedQp qp = build_qp(m, cfg, x0, sine_window(0, cfg.N));
  ASSERT_EQ(qp.G.rows(), 4 * cfg.N);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd U(cfg.N);
    for (int i = 0; i < cfg.N; ++i) U[i] = u(rng);
    const Eigen::VectorXd X = oracle::rollout_linear(m.A, m.B, x0.vec(), U);
    const Eigen::VectorXd slack = qp.G * U - qp.h;
    for (int i = 0; i < cfg.N; ++i) {
      EXPECT_NEAR(slack[i], U[i] - cfg.u_bound, 1e-9);
      EXPECT_NEAR(slack[cfg.N + i], -U[i] - cfg.u_bound, 1e-9);
      EXPECT_NEAR(slack[2 * cfg.N + i], X[4 * i] - cfg.x1_bound, 1e-9);
      EXPECT_NEAR(slack[3 * cfg.N + i], -X[4 * i] - cfg.x1_bound, 1e-9);
    }
  }
  EXPECT_THROW(build_qp(m, cfg, x0, sine_window(0, cfg.N - 1)), Error);
}

TEST(Mpc, HildrethMatchesEnumerationOnMpcProblems) {
  std::mt19937_64 rng(4);
  const MpcConfig defaults;
  int constrained = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const CondensedQp qp = testgen::random_condensed_qp(rng, 10);
    const oracle::QpResult ref = oracle::brute_force_qp(qp.H, qp.f, qp.G, qp.h);
    ASSERT_TRUE(ref.found) << "trial " << trial;
    if (ref.multipliers.maxCoeff() > 0.0) ++constrained;
    const MpcSolution sol = solve_qp(qp, defaults.tol, defaults.max_iter);
    EXPECT_LT((sol.U - ref.x).norm(), 1e-6) << "trial " << trial;
  }
  EXPECT_GE(constrained, 10);
}

TEST(Mpc, DualObjectiveNeverDecreases) {
  const DiscreteModel m = model();
  MpcConfig cfg;
  const State x0(1.8, 0.2, 5.0, -3.0);
  const CondensedQp qp = build_qp(m, cfg, x0, sine_window(0, cfg.N));
  std::vector<double> trace;
  const MpcSolution sol = solve_qp(qp, cfg.tol, cfg.max_iter, &trace);
  ASSERT_GT(sol.active_constraints, 0);
  ASSERT_FALSE(trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_GE(trace[i], trace[i - 1] - 1e-9 * (1.0 + std::abs(trace[i - 1])));
  }
}

TEST(Mpc, UnconstrainedStepIsFirstElementOfNewtonStep) {
  const DiscreteModel m = model();
  const MpcConfig cfg;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(-0.05, 0.05), al(-0.01, 0.01);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const State x0(th(rng), al(rng), 0.0, 0.0);
    std::vector<double> w(static_cast<std::size_t>(cfg.N), 0.0);
    const CondensedQp qp = build_qp(m, cfg, x0, w);
    const Eigen::VectorXd U = -qp.H.llt().solve(qp.f);
    if (((qp.G * U - qp.h).array() > 0.0).any()) continue;
    EXPECT_NEAR(mpc_step(m, cfg, x0, w), U[0], 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Mpc, ReturnedInputAndPredictionRespectBounds) {
  const DiscreteModel m = model();
  const MpcConfig cfg;
  const Prediction pred = build_prediction(m, cfg.N);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> th(-1.9, 1.9), al(-0.4, 0.4), rate(-8.0, 8.0);
  for (int trial = 0; trial < 40; ++trial) {
    const State x0(th(rng), al(rng), rate(rng), rate(rng));
    const auto w = sine_window(trial * 31, cfg.N);
    const MpcSolution sol = mpc_solve(m, cfg, x0, w);
    EXPECT_LE(std::abs(mpc_step(m, cfg, x0, w)), cfg.u_bound);
    if (sol.relaxed) continue;
    const Eigen::VectorXd X = pred.Sx * x0.vec() + pred.Su * sol.U;
    for (int i = 0; i < cfg.N; ++i) EXPECT_LE(std::abs(X[4 * i]), cfg.x1_bound + 10.0 * cfg.tol);
  }
}

TEST(Mpc, InfeasibleThetaBoundIsRelaxed) {
  const DiscreteModel m = model();
  const MpcConfig cfg;
  const State x0(1.99, 0.0, 40.0, 0.0);
  const auto w = sine_window(0, cfg.N);
  const MpcSolution sol = mpc_solve(m, cfg, x0, w);
  EXPECT_TRUE(sol.relaxed);
  EXPECT_TRUE(sol.U.allFinite());
  EXPECT_LE(std::abs(mpc_step(m, cfg, x0, w)), cfg.u_bound);

  MpcConfig converged = cfg;
  converged.max_iter = 20000;
  const MpcSolution full = mpc_solve(m, converged, x0, w);
  EXPECT_TRUE(full.relaxed);
  EXPECT_LE(full.U.cwiseAbs().maxCoeff(), cfg.u_bound + 1e-6);
}

TEST(Mpc, PrincipleOfOptimalityShift) {
  // The tail of an optimal unconstrained sequence is optimal for the
  // one-step-shorter problem started at the predicted next state.
  const DiscreteModel m = model();
  const MpcConfig cfg;
  const State x0(0.1, 0.02, 0.0, 0.0);
  const std::vector<double> w(static_cast<std::size_t>(cfg.N), 0.0);
  const MpcSolution sol = mpc_solve(m, cfg, x0, w);
  ASSERT_EQ(sol.active_constraints, 0);
  const State x1(Eigen::Vector4d(m.A * x0.vec() + m.B * sol.U[0]));

  MpcConfig shorter = cfg;
  shorter.N = cfg.N - 1;
  shorter.crucial_ts = shorter.N * cfg.Ts;
  const MpcSolution tail = mpc_solve(m, shorter, x1, std::vector<double>(w.begin() + 1, w.end()));
  EXPECT_LT((tail.U - sol.U.tail(cfg.N - 1)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Mpc, SameHorizonShiftMismatchShrinksWithHorizon) {
  const DiscreteModel m = model();
  const State x0(0.1, 0.02, 0.0, 0.0);
  std::vector<double> gaps;
  for (int N : {10, 50, 100}) {
    MpcConfig cfg = short_horizon(N);
    const std::vector<double> w(static_cast<std::size_t>(N), 0.0);
    const MpcSolution a = mpc_solve(m, cfg, x0, w);
    const State x1(Eigen::Vector4d(m.A * x0.vec() + m.B * a.U[0]));
    const MpcSolution b = mpc_solve(m, cfg, x1, w);
    gaps.push_back((b.U.head(N - 1) - a.U.tail(N - 1)).cwiseAbs().maxCoeff());
  }
  EXPECT_GT(gaps[0], gaps[1]);
  EXPECT_GT(gaps[1], gaps[2]);
}

TEST(Mpc, DrmpcExactForPiecewiseLinearReference) {
  const DiscreteModel m = model();
  const MpcConfig cfg;
  const State x0(0.2, 0.01, 0.0, 0.0);
  const CrucialPoints cp = downsample(RefTrajectory::constant(0.5), 0, cfg.Ts, cfg.crucial_ts, cfg.N);
  const auto w = full_window(RefTrajectory::constant(0.5), 0, cfg.Ts, cfg.N);
  EXPECT_DOUBLE_EQ(drmpc_step(m, cfg, x0, cp), mpc_step(m, cfg, x0, w));
}

TEST(Mpc, ConfigLoadValidates) {
  const MpcConfig c = load_mpc_config(KeyValueFile::parse("mpc.horizon = 40\nmpc.cts = 0.05\n"), "mpc.");
  EXPECT_EQ(c.N, 40);
  try {
    load_mpc_config(KeyValueFile::parse("mpc.cts = 0.07\n"), "mpc.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
  EXPECT_THROW(load_mpc_config(KeyValueFile::parse("mpc.r1 = -1\n"), "mpc."), Error);
}

TEST(Mpc, SolverRejectsIndefiniteHessian) {
  CondensedQp qp;
  qp.H = Eigen::MatrixXd::Identity(2, 2);
  qp.H(1, 1) = -1.0;
  qp.f = Eigen::VectorXd::Zero(2);
  qp.G = Eigen::MatrixXd::Zero(0, 2);
  qp.h = Eigen::VectorXd::Zero(0);
  try {
    solve_qp(qp, 1e-8, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}
