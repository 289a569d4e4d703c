#pragma once

#include <Eigen/Dense>

#include "core/nnmpc.hpp"
#include "core/plant.hpp"

namespace testpolicy {

// Discrete LQR gain by Riccati iteration.
inline Eigen::RowVector4d dlqr(const rlmpc::DiscreteModel& m, const Eigen::Vector4d& q, double r) {
  Eigen::Matrix4d P = q.asDiagonal();
  Eigen::RowVector4d K = Eigen::RowVector4d::Zero();
  for (int i = 0; i < 20000; ++i) {
    const double s = r + m.B.dot(P * m.B);
    K = (m.B.transpose() * P * m.A) / s;
    const Eigen::Matrix4d next = Eigen::Matrix4d(q.asDiagonal()) + m.A.transpose() * P * (m.A - m.B * K);
    if ((next - P).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + P.cwiseAbs().maxCoeff())) break;
    P = next;
  }
  return K;
}

// Stand-in for a trained NNMPC: u = 12 tanh(-K (x - [c1 0 0 0]) / 12), written
// as a 10 -> 2 ReLU -> 1 tanh network so it runs through the same code path.
inline rlmpc::NnmpcController lqr_nnmpc(const rlmpc::PendulumParams& p = rlmpc::PendulumParams::qube_servo2()) {
  using namespace rlmpc;
  const DiscreteModel m = discretize(linearize(p), 0.01);
  const Eigen::RowVector4d K = dlqr(m, Eigen::Vector4d(5.0, 5.0, 0.05, 0.05), 0.5);
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(10);
  v.head<4>() = -K;
  v[4] = K[0];
  DenseLayer hidden{Eigen::MatrixXd(2, 10), Eigen::VectorXd::Zero(2), Activation::Relu};
  hidden.W.row(0) = v;
  hidden.W.row(1) = -v;
  DenseLayer out{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1), Activation::Tanh};
  out.W << 1.0 / 12.0, -1.0 / 12.0;
  NnmpcController c;
  c.net = Mlp({hidden, out}, 12.0);
  c.metadata = "kind = lqr stand-in\n";
  return c;
}

}  // namespace testpolicy
