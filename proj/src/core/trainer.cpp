#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/log.hpp"
#include "core/rng.hpp"

namespace rlmpc {

const char* to_string(RlmpcVariant v) {
  return v == RlmpcVariant::WarmStartRl ? "warmstart" : "rlmpc";
}

RlmpcVariant parse_rlmpc_variant(const std::string& name) {
  if (name == "warmstart") return RlmpcVariant::WarmStartRl;
  if (name == "rlmpc" || name == "rl+mpc") return RlmpcVariant::RlPlusMpc;
  fail(ErrorCode::Config, "unknown RLMPC mode '" + name + "'");
}

void validate(const RlmpcMode& m) {
  if (!(m.actor_bound > 0.0) || !(m.base_controller_bound >= 0.0)) {
    fail(ErrorCode::Config, "RLMPC bounds must be non-negative with a positive actor bound");
  }
  if (m.actor_bound + m.base_controller_bound > kPlantVoltageLimit + 1e-12) {
    fail(ErrorCode::Config, "actor and base bounds exceed the 15 V plant limit");
  }
  if (m.variant == RlmpcVariant::WarmStartRl && m.base_controller_bound != 0.0) {
    fail(ErrorCode::Config, "warm-start mode has no base controller");
  }
}

void validate(const ConstraintZones& z, double max_ref_amplitude) {
  if (!(0.0 < z.alpha1 && z.alpha1 < z.alpha2 && z.alpha2 < z.alpha3)) {
    fail(ErrorCode::Config, "pendulum zones must satisfy 0 < alpha1 < alpha2 < alpha3");
  }
  if (!(0.0 < z.beta1 && z.beta1 < z.beta2 && z.beta2 < z.beta3)) {
    fail(ErrorCode::Config, "arm zones must satisfy 0 < beta1 < beta2 < beta3");
  }
  const double a = std::abs(max_ref_amplitude);
  const double worst = 5.0 * (z.alpha2 + a) * (z.alpha2 + a) + 5.0 * z.beta2 * z.beta2;
  if (!(z.penalty > worst)) {
    fail(ErrorCode::Config, "penalty " + std::to_string(z.penalty) +
                                " does not dominate the soft-boundary reward " + std::to_string(worst));
  }
}

ConstraintZones load_constraint_zones(const KeyValueFile& f, const std::string& prefix) {
  ConstraintZones z;
  z.alpha1 = f.get_double(prefix + "alpha1", z.alpha1);
  z.alpha2 = f.get_double(prefix + "alpha2", z.alpha2);
  z.alpha3 = f.get_double(prefix + "alpha3", z.alpha3);
  z.beta1 = f.get_double(prefix + "beta1", z.beta1);
  z.beta2 = f.get_double(prefix + "beta2", z.beta2);
  z.beta3 = f.get_double(prefix + "beta3", z.beta3);
  z.penalty = f.get_double(prefix + "penalty", z.penalty);
  return z;
}

ZoneClass classify_state(const ConstraintZones& z, const State& x) {
  const double th = std::abs(x.theta());
  const double al = std::abs(x.alpha());
  if (al >= z.alpha3 || th >= z.beta3) return ZoneClass::HardViolated;
  if (al >= z.alpha2 || th >= z.beta2) return ZoneClass::SoftViolated;
  if (al < z.alpha1 && th < z.beta1) return ZoneClass::InResetRange;
  return ZoneClass::Nominal;
}

double reward(const State& x, double c1, double u) {
  const double e = x.theta() - c1;
  return -5.0 * e * e - 5.0 * x.alpha() * x.alpha() - 0.5 * u * u;
}

ComposedAction compose_action(const RlmpcMode& mode, const NnmpcController& nnmpc, DdpgAgent& agent,
                              const State& x, const CrucialPoints& cp, bool exploring) {
  const Eigen::VectorXd s = make_observation(x, cp);
  double a = exploring ? agent.actor.predict_scalar(s) + agent.noise.sample() : agent.actor.predict_scalar(s);
  a = std::clamp(a, -mode.actor_bound, mode.actor_bound);
  ComposedAction out;
  out.a_rl = a;
  if (mode.variant == RlmpcVariant::WarmStartRl) {
    out.u_total = a;
  } else {
    const double base = std::clamp(nnmpc_act(nnmpc, x, cp), -mode.base_controller_bound,
                                   mode.base_controller_bound);
    out.u_total = base + a;
  }
  return out;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::SoftViolation: return "soft_violation";
    case Termination::HardViolation: return "hard_violation";
  }
  return "?";
}

const char* to_string(ResetOutcome r) {
  switch (r) {
    case ResetOutcome::None: return "none";
    case ResetOutcome::Settled: return "settled";
    case ResetOutcome::Rehomed: return "rehomed";
  }
  return "?";
}

namespace {

void learn_step(DdpgAgent& agent, bool update_critic, bool update_actor) {
  if (!update_critic && !update_actor) return;
  if (agent.buffer.size() < static_cast<std::size_t>(std::max(agent.warmup, agent.batch_size))) return;
  const Batch batch = sample_batch(agent.buffer, agent.batch_size, agent.sample_rng);
  if (update_critic) critic_update(agent, batch);
  if (update_actor) {
    actor_update(agent, batch);
    agent.target_actor.blend_toward(agent.actor, agent.tau);
  }
  if (update_critic) agent.target_critic.blend_toward(agent.critic, agent.tau);
}

}  // namespace

EpisodeResult run_episode(const PendulumParams& plant, const RlmpcMode& mode,
                          const NnmpcController& nnmpc, DdpgAgent& agent, const ConstraintZones& zones,
                          const RefTrajectory& traj, const MpcConfig& timing, const State& x0,
                          const EpisodeOptions& options) {
  if (options.T < 0) fail(ErrorCode::InvalidArgument, "episode horizon must be non-negative");
  const double Ts = timing.Ts;
  const double limit = mode.actor_bound + mode.base_controller_bound;

  EpisodeResult res;
  res.final_state = x0;
  res.trajectory.Ts = Ts;
  State x = x0;
  CrucialPoints cp = downsample(traj, 0, Ts, timing.crucial_ts, timing.N);
  for (int k = 0; k < options.T; ++k) {
    const ComposedAction act = compose_action(mode, nnmpc, agent, x, cp, options.explore);
    if (!(std::abs(act.u_total) <= limit)) {
      fail(ErrorCode::InvalidArgument, "composed input " + std::to_string(act.u_total) +
                                           " V exceeds the mode bound");
    }
    res.max_abs_u = std::max(res.max_abs_u, std::abs(act.u_total));
    if (options.record) res.trajectory.rows.push_back({k * Ts, x.vec(), act.u_total, cp.c[0]});

    const State next = simulate_interval(plant, x, act.u_total, Ts);
    const CrucialPoints cp_next = downsample(traj, k + 1, Ts, timing.crucial_ts, timing.N);
    double r = reward(next, cp_next.c[0], act.u_total);
    bool done = k + 1 == options.T;
    const ZoneClass zone = classify_state(zones, next);
    if (zone == ZoneClass::SoftViolated || zone == ZoneClass::HardViolated) {
      r = -zones.penalty;
      done = true;
      res.terminated_by =
          zone == ZoneClass::HardViolated ? Termination::HardViolation : Termination::SoftViolation;
    }

    Transition t;
    t.s = make_observation(x, cp);
    t.a = act.a_rl;
    t.r = r;
    t.s_next = make_observation(next, cp_next);
    t.done = done;
    agent.buffer.push(std::move(t));
    learn_step(agent, options.update_critic, options.update_actor);

    res.cumulative_reward += r;
    res.last_reward = r;
    res.last_done = done;
    res.steps = k + 1;
    x = next;
    cp = cp_next;
    if (res.terminated_by != Termination::Horizon) break;
  }
  res.final_state = x;
  if (options.record) res.trajectory.rows.push_back({res.steps * Ts, x.vec(), 0.0, cp.c[0]});
  return res;
}

State reset_to_range(const PendulumParams& plant, const NnmpcController& nnmpc,
                     const ConstraintZones& zones, const State& x, double timeout,
                     const MpcConfig& timing) {
  const double Ts = timing.Ts;
  const int dwell = static_cast<int>(std::lround(0.5 / Ts));
  const long long max_steps = static_cast<long long>(std::ceil(timeout / Ts));
  CrucialPoints zero;
  zero.Ts = Ts;
  zero.CTs = timing.crucial_ts;
  zero.N = timing.N;
  zero.c.assign(static_cast<std::size_t>(timing.N / crucial_stride(Ts, timing.crucial_ts, timing.N) + 1), 0.0);

  State s = x;
  int inside = 0;
  for (long long k = 0; k <= max_steps; ++k) {
    const ZoneClass zone = classify_state(zones, s);
    if (zone == ZoneClass::HardViolated) {
      fail(ErrorCode::HardViolation, "hard constraint reached during reset");
    }
    inside = zone == ZoneClass::InResetRange ? inside + 1 : 0;
    // The dwell counts the samples spent inside, including the current one.
    if (inside > dwell) return s;
    if (k == max_steps) break;
    const double u = std::clamp(nnmpc_act(nnmpc, s, zero), -kPlantVoltageLimit, kPlantVoltageLimit);
    s = simulate_interval(plant, s, u, Ts);
  }
  fail(ErrorCode::ResetTimeout, "state did not settle in the reset range within " +
                                    std::to_string(timeout) + " s");
}

void pretrain_critic(const RlmpcMode& mode, const NnmpcController& nnmpc, DdpgAgent& agent,
                     const PendulumParams& nominal, const ConstraintZones& zones, const MpcConfig& timing,
                     const PretrainOptions& options) {
  EpisodeOptions eo;
  eo.T = options.T;
  eo.explore = true;
  eo.update_actor = false;
  State x;
  for (int e = 0; e < options.episodes; ++e) {
    std::mt19937_64 rng(mix_seed(options.seed, 0x10000u + static_cast<std::uint64_t>(e)));
    const RefTrajectory traj = options.family.draw(rng);
    const EpisodeResult res = run_episode(nominal, mode, nnmpc, agent, zones, traj, timing, x, eo);
    try {
      if (res.terminated_by == Termination::HardViolation) fail(ErrorCode::HardViolation, "hard");
      x = reset_to_range(nominal, nnmpc, zones, res.final_state, options.reset_timeout, timing);
    } catch (const Error&) {
      x = State();
    }
    log_debug("pretrain episode ", e + 1, " steps ", res.steps, " reward ", res.cumulative_reward);
  }
  agent.buffer.clear();
}

TrainLog train(const PendulumParams& plant, const RlmpcMode& mode, const NnmpcController& nnmpc,
               DdpgAgent& agent, const ConstraintZones& zones, const MpcConfig& timing,
               const TrainOptions& options) {
  validate(mode);
  validate(zones, options.family.amplitude_max);
  TrainLog log;
  EpisodeOptions eo;
  eo.T = options.T;
  State x;
  while (agent.episode < options.episodes) {
    const int e = agent.episode;
    std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(e)));
    const RefTrajectory traj = options.family.draw(rng);

    EpisodeLogEntry entry;
    entry.episode = e + 1;
    entry.sigma = agent.noise.sigma();
    entry.start_zone = classify_state(zones, x);
    const EpisodeResult res = run_episode(plant, mode, nnmpc, agent, zones, traj, timing, x, eo);
    entry.steps = res.steps;
    entry.cumulative_reward = res.cumulative_reward;
    entry.terminated_by = res.terminated_by;
    entry.max_abs_u = res.max_abs_u;
    entry.last_reward = res.last_reward;
    entry.last_done = res.last_done;

    // Learning is paused while the state is brought back.
    if (res.terminated_by == Termination::HardViolation) {
      x = State();
      entry.reset = ResetOutcome::Rehomed;
    } else {
      try {
        x = reset_to_range(plant, nnmpc, zones, res.final_state, options.reset_timeout, timing);
        entry.reset = ResetOutcome::Settled;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::ResetTimeout && err.code() != ErrorCode::HardViolation) throw;
        x = State();
        entry.reset = ResetOutcome::Rehomed;
      }
    }

    agent.noise.next_episode();
    ++agent.episode;
    log.total_steps += res.steps;
    log.max_abs_u = std::max(log.max_abs_u, res.max_abs_u);
    log.episodes.push_back(entry);
    log_debug("episode ", entry.episode, " steps ", entry.steps, " reward ", entry.cumulative_reward, " ",
              to_string(entry.terminated_by), " reset ", to_string(entry.reset));
    if (options.on_episode) options.on_episode(entry);
    if (!options.checkpoint_dir.empty() && options.checkpoint_every > 0 &&
        agent.episode % options.checkpoint_every == 0) {
      save_agent(agent, options.checkpoint_dir / ("episode_" + std::to_string(agent.episode)));
      save_agent(agent, options.checkpoint_dir / "latest");
    }
  }
  return log;
}

void save_reward_log_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.precision(10);
  out << "episode,steps,cumulative_reward,terminated_by,sigma\n";
  for (const EpisodeLogEntry& e : log.episodes) {
    out << e.episode << ',' << e.steps << ',' << e.cumulative_reward << ',' << to_string(e.terminated_by)
        << ',' << e.sigma << '\n';
  }
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
  if (window <= 0) fail(ErrorCode::InvalidArgument, "moving-average window must be positive");
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= static_cast<std::size_t>(window)) sum -= v[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace rlmpc
