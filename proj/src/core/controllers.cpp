#include "core/controllers.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace rlmpc {

namespace {

CrucialPoints crucial(const RefTrajectory& traj, long long k, const MpcConfig& cfg) {
  return downsample(traj, k, cfg.Ts, cfg.crucial_ts, cfg.N);
}

void check_obs(const Mlp& net, const MpcConfig& cfg) {
  const int expected = 4 + cfg.N / crucial_stride(cfg.Ts, cfg.crucial_ts, cfg.N) + 1;
  if (net.input_dim() != expected || net.output_dim() != 1) {
    fail(ErrorCode::DimensionMismatch, "network expects " + std::to_string(net.input_dim()) +
                                           " inputs, configuration gives " + std::to_string(expected));
  }
}

}  // namespace

MpcController::MpcController(DiscreteModel model, MpcConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  validate(cfg_);
}

double MpcController::act(const State& x, const RefTrajectory& traj, long long k) const {
  const std::vector<double> w = full_window(traj, k, cfg_.Ts, cfg_.N);
  return mpc_step(model_, cfg_, x, w);
}

DrmpcController::DrmpcController(DiscreteModel model, MpcConfig cfg) : model_(std::move(model)), cfg_(cfg) {
  validate(cfg_);
}

double DrmpcController::act(const State& x, const RefTrajectory& traj, long long k) const {
  return drmpc_step(model_, cfg_, x, crucial(traj, k, cfg_));
}

NnmpcPolicy::NnmpcPolicy(NnmpcController net, MpcConfig cfg) : net_(std::move(net)), cfg_(cfg) {
  validate(cfg_);
  check_obs(net_.net, cfg_);
}

double NnmpcPolicy::act(const State& x, const RefTrajectory& traj, long long k) const {
  return nnmpc_act(net_, x, crucial(traj, k, cfg_));
}

WarmStartPolicy::WarmStartPolicy(Mlp actor, MpcConfig cfg, double bound)
    : actor_(std::move(actor)), cfg_(cfg), bound_(bound) {
  validate(cfg_);
  check_obs(actor_, cfg_);
}

double WarmStartPolicy::act(const State& x, const RefTrajectory& traj, long long k) const {
  const double a = actor_.predict_scalar(make_observation(x, crucial(traj, k, cfg_)));
  return std::clamp(a, -bound_, bound_);
}

RlPlusMpcPolicy::RlPlusMpcPolicy(NnmpcController base, Mlp actor, MpcConfig cfg, double base_bound,
                                 double actor_bound)
    : base_(std::move(base)), actor_(std::move(actor)), cfg_(cfg), base_bound_(base_bound),
      actor_bound_(actor_bound) {
  validate(cfg_);
  check_obs(base_.net, cfg_);
  check_obs(actor_, cfg_);
}

double RlPlusMpcPolicy::act(const State& x, const RefTrajectory& traj, long long k) const {
  const CrucialPoints cp = crucial(traj, k, cfg_);
  const Eigen::VectorXd s = make_observation(x, cp);
  const double base = std::clamp(base_.net.predict_scalar(s), -base_bound_, base_bound_);
  const double a = std::clamp(actor_.predict_scalar(s), -actor_bound_, actor_bound_);
  return base + a;
}

}  // namespace rlmpc
