#pragma once

#include <memory>
#include <string>

#include "core/mlp.hpp"
#include "core/mpc.hpp"
#include "core/nnmpc.hpp"
#include "core/plant.hpp"
#include "core/reference.hpp"

namespace rlmpc {

// Closed-loop policy evaluated at step k (time k Ts) of a reference. act() is
// const and keeps no state between calls, so one instance may serve
// concurrent rollouts.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string id() const = 0;
  virtual double act(const State& x, const RefTrajectory& traj, long long k) const = 0;
  virtual const MpcConfig& timing() const = 0;
};

class MpcController final : public Controller {
 public:
  MpcController(DiscreteModel model, MpcConfig cfg);
  std::string id() const override { return "mpc"; }
  double act(const State& x, const RefTrajectory& traj, long long k) const override;
  const MpcConfig& timing() const override { return cfg_; }

 private:
  DiscreteModel model_;
  MpcConfig cfg_;
};

class DrmpcController final : public Controller {
 public:
  DrmpcController(DiscreteModel model, MpcConfig cfg);
  std::string id() const override { return "drmpc"; }
  double act(const State& x, const RefTrajectory& traj, long long k) const override;
  const MpcConfig& timing() const override { return cfg_; }

 private:
  DiscreteModel model_;
  MpcConfig cfg_;
};

class NnmpcPolicy final : public Controller {
 public:
  NnmpcPolicy(NnmpcController net, MpcConfig cfg);
  std::string id() const override { return "nnmpc"; }
  double act(const State& x, const RefTrajectory& traj, long long k) const override;
  const MpcConfig& timing() const override { return cfg_; }

 private:
  NnmpcController net_;
  MpcConfig cfg_;
};

// Actor alone, clipped to `bound`.
class WarmStartPolicy final : public Controller {
 public:
  WarmStartPolicy(Mlp actor, MpcConfig cfg, double bound = 12.0);
  std::string id() const override { return "warmstart"; }
  double act(const State& x, const RefTrajectory& traj, long long k) const override;
  const MpcConfig& timing() const override { return cfg_; }

 private:
  Mlp actor_;
  MpcConfig cfg_;
  double bound_;
};

// NNMPC (clipped to base_bound) plus the actor correction (clipped to
// actor_bound).
class RlPlusMpcPolicy final : public Controller {
 public:
  RlPlusMpcPolicy(NnmpcController base, Mlp actor, MpcConfig cfg, double base_bound = 12.0,
                  double actor_bound = 3.0);
  std::string id() const override { return "rlmpc"; }
  double act(const State& x, const RefTrajectory& traj, long long k) const override;
  const MpcConfig& timing() const override { return cfg_; }

 private:
  NnmpcController base_;
  Mlp actor_;
  MpcConfig cfg_;
  double base_bound_;
  double actor_bound_;
};

}  // namespace rlmpc
