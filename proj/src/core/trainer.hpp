#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "core/ddpg.hpp"
#include "core/mpc.hpp"
#include "core/nnmpc.hpp"
#include "core/plant.hpp"
#include "core/reference.hpp"
#include "core/trajectory.hpp"

namespace rlmpc {

class KeyValueFile;

enum class RlmpcVariant { WarmStartRl, RlPlusMpc };

const char* to_string(RlmpcVariant v);
RlmpcVariant parse_rlmpc_variant(const std::string& name);

struct RlmpcMode {
  RlmpcVariant variant = RlmpcVariant::RlPlusMpc;
  double actor_bound = 3.0;            // [V]
  double base_controller_bound = 12.0;  // [V], 0 when the actor acts alone

  // The transplanted NNMPC keeps its 12 V output scale.
  static RlmpcMode warm_start() { return {RlmpcVariant::WarmStartRl, 12.0, 0.0}; }
  static RlmpcMode rl_plus_mpc() { return {RlmpcVariant::RlPlusMpc, 3.0, 12.0}; }
};

void validate(const RlmpcMode& mode);

struct ConstraintZones {
  double alpha1 = 0.1, alpha2 = 0.4, alpha3 = 0.5;  // pendulum reset / soft / hard [rad]
  double beta1 = 0.2, beta2 = 1.5, beta3 = 2.0;     // arm reset / soft / hard [rad]
  double penalty = 1000.0;
};

// Ordering of the bounds, and penalty > 5 (alpha2 + A)^2 + 5 beta2^2 for the
// largest reference amplitude A.
void validate(const ConstraintZones& zones, double max_ref_amplitude);
ConstraintZones load_constraint_zones(const KeyValueFile& file, const std::string& prefix);

enum class ZoneClass { InResetRange, Nominal, SoftViolated, HardViolated };

ZoneClass classify_state(const ConstraintZones& zones, const State& x);

// -5 (x1 - c1)^2 - 5 x2^2 - 0.5 u^2
double reward(const State& x, double c1, double u);

struct ComposedAction {
  double u_total = 0.0;  // applied input [V]
  double a_rl = 0.0;     // actor contribution, stored in the replay buffer
};

ComposedAction compose_action(const RlmpcMode& mode, const NnmpcController& nnmpc, DdpgAgent& agent,
                              const State& x, const CrucialPoints& cp, bool exploring);

enum class Termination { Horizon, SoftViolation, HardViolation };

const char* to_string(Termination t);

struct EpisodeOptions {
  int T = 700;
  bool explore = true;
  bool update_critic = true;
  bool update_actor = true;
  bool record = false;  // keep the trajectory
};

struct EpisodeResult {
  double cumulative_reward = 0.0;
  int steps = 0;
  Termination terminated_by = Termination::Horizon;
  State final_state;
  double max_abs_u = 0.0;
  double last_reward = 0.0;  // reward of the final stored transition
  bool last_done = false;
  TrajectoryLog trajectory;  // filled when EpisodeOptions::record is set
};

// Timing (Ts, crucial sample time, horizon) comes from `timing`. The reference
// clock starts at zero with the episode.
EpisodeResult run_episode(const PendulumParams& plant, const RlmpcMode& mode,
                          const NnmpcController& nnmpc, DdpgAgent& agent, const ConstraintZones& zones,
                          const RefTrajectory& traj, const MpcConfig& timing, const State& x0,
                          const EpisodeOptions& options);

// NNMPC with a zero reference until the state stays in the reset range for
// 0.5 s. Throws ResetTimeout, or HardViolation if the hard zone is reached.
State reset_to_range(const PendulumParams& plant, const NnmpcController& nnmpc,
                     const ConstraintZones& zones, const State& x, double timeout,
                     const MpcConfig& timing);

struct PretrainOptions {
  int episodes = 20;
  int T = 700;
  SineFamily family;
  std::uint64_t seed = 1;
  double reset_timeout = 5.0;
};

// Critic-only episodes on the nominal plant. The actor and its target are left
// untouched; the replay buffer is emptied afterwards.
void pretrain_critic(const RlmpcMode& mode, const NnmpcController& nnmpc, DdpgAgent& agent,
                     const PendulumParams& nominal, const ConstraintZones& zones, const MpcConfig& timing,
                     const PretrainOptions& options);

enum class ResetOutcome { None, Settled, Rehomed };

const char* to_string(ResetOutcome r);

struct EpisodeLogEntry {
  int episode = 0;  // 1-based
  int steps = 0;
  double cumulative_reward = 0.0;
  Termination terminated_by = Termination::Horizon;
  double sigma = 0.0;
  double max_abs_u = 0.0;
  double last_reward = 0.0;
  bool last_done = false;
  ResetOutcome reset = ResetOutcome::None;  // how the state was brought back afterwards
  ZoneClass start_zone = ZoneClass::InResetRange;
};

struct TrainOptions {
  int episodes = 300;
  int T = 700;
  SineFamily family;
  std::uint64_t seed = 1;
  double reset_timeout = 5.0;
  int checkpoint_every = 25;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::function<void(const EpisodeLogEntry&)> on_episode;
};

struct TrainLog {
  std::vector<EpisodeLogEntry> episodes;
  long long total_steps = 0;
  double max_abs_u = 0.0;
};

// Episodes agent.episode + 1 .. options.episodes on `plant`. Each episode draws
// its reference from the family with a seed derived from (seed, episode), so a
// resumed run sees the same references. Between episodes the state is brought
// back into the reset range by the NNMPC with learning paused; if that fails
// (or after a hard violation) the simulated plant is re-homed to the origin.
TrainLog train(const PendulumParams& plant, const RlmpcMode& mode, const NnmpcController& nnmpc,
               DdpgAgent& agent, const ConstraintZones& zones, const MpcConfig& timing,
               const TrainOptions& options);

// CSV: episode,steps,cumulative_reward,terminated_by,sigma
void save_reward_log_csv(const TrainLog& log, const std::filesystem::path& path);

// 20-episode trailing mean (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& values, int window);

}  // namespace rlmpc
