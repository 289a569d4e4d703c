#include "core/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/log.hpp"
#include "core/rng.hpp"

namespace rlmpc {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "plant.file", "plant.Rm", "plant.kt", "plant.km", "plant.mr", "plant.r", "plant.br", "plant.mp",
      "plant.pendulum_length", "plant.bp",
      "mpc.q1", "mpc.q2", "mpc.q3", "mpc.q4", "mpc.r1", "mpc.horizon", "mpc.ts", "mpc.x1_bound",
      "mpc.u_bound", "mpc.cts", "mpc.tol", "mpc.max_iter",
      "ref.kind", "ref.amplitude", "ref.frequency", "ref.offset", "ref.phase",
      "ddpg.gamma", "ddpg.tau", "ddpg.batch", "ddpg.buffer", "ddpg.actor_lr", "ddpg.critic_lr",
      "ddpg.sigma0", "ddpg.sigma_decay", "ddpg.sigma_min", "ddpg.warmup", "ddpg.hidden",
      "zones.alpha1", "zones.alpha2", "zones.alpha3", "zones.beta1", "zones.beta2", "zones.beta3",
      "zones.penalty",
      "nnmpc.episodes", "nnmpc.episode_len", "nnmpc.noise_sigma", "nnmpc.noise_fraction",
      "nnmpc.random_start_fraction", "nnmpc.start_theta", "nnmpc.start_alpha", "nnmpc.epochs",
      "nnmpc.batch", "nnmpc.lr", "nnmpc.hidden", "nnmpc.validation_fraction",
      "train.episodes", "train.episode_seconds", "train.checkpoint_every", "train.reset_timeout",
      "train.pretrain_episodes", "train.amplitude_min", "train.amplitude_max", "train.frequency_min",
      "train.frequency_max",
      "eval.sim_duration", "eval.sim_plant", "eval.nominal_ts", "eval.nominal_tf", "eval.perturbed_ts",
      "eval.perturbed_tf", "eval.nominal_refs", "eval.perturbed_refs", "eval.controllers",
      "eval.bench_steps", "eval.bench_warmup",
      "run.name", "run.out", "run.seed"};
  return keys;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

int env_threads() {
  const char* v = std::getenv("RLMPC_LAB_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  const int n = std::atoi(v);
  return n > 0 ? n : 1;
}

DiscreteModel nominal_model(const RunConfig& cfg) { return discretize(linearize(cfg.plant), cfg.mpc.Ts); }

int obs_dim(const MpcConfig& m) { return 4 + m.N / crucial_stride(m.Ts, m.crucial_ts, m.N) + 1; }

void require(const std::filesystem::path& p, const std::string& hint) {
  if (!std::filesystem::exists(p)) fail(ErrorCode::MissingArtifact, "missing " + p.string() + " (" + hint + ")");
}

NnmpcController load_nnmpc(const RunLayout& layout) {
  require(layout.nnmpc_weights(), "run train-nnmpc first");
  return load_controller(layout.nnmpc_weights());
}

}  // namespace

std::vector<RefTrajectory> parse_reference_list(const std::string& text) {
  std::vector<RefTrajectory> out;
  for (const std::string& item : split(text, ',')) {
    std::vector<std::string> parts = split(item, ':');
    WaveKind kind = WaveKind::Sine;
    if (parts.size() == 3) {
      kind = parse_wave_kind(parts[0]);
      parts.erase(parts.begin());
    }
    if (parts.size() != 2) fail(ErrorCode::Config, "reference entry '" + item + "' is not kind:A:w");
    RefTrajectory t;
    t.kind = kind;
    try {
      t.amplitude = std::stod(parts[0]);
      t.angular_frequency = std::stod(parts[1]);
    } catch (const std::exception&) {
      fail(ErrorCode::Config, "reference entry '" + item + "' has a non-numeric field");
    }
    validate(t);
    out.push_back(t);
  }
  if (out.empty()) fail(ErrorCode::Config, "empty reference list");
  return out;
}

RunConfig make_run_config(const KeyValueFile& f, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : f.entries()) {
    if (key.rfind("perturb.", 0) == 0) continue;
    if (!known_keys().count(key)) fail(ErrorCode::Config, f.origin() + ": unknown key '" + key + "'");
  }
  RunConfig c;
  c.source = f.origin();
  try {
    if (f.has("plant.file")) {
      c.plant_file = base_dir / f.get_string("plant.file");
      if (!std::filesystem::exists(c.plant_file)) {
        fail(ErrorCode::Config, "plant parameter file not found: " + c.plant_file.string());
      }
      c.plant = load_pendulum_params(c.plant_file);
    } else if (!f.keys_with_prefix("plant.").empty()) {
      c.plant = load_pendulum_params(f, "plant.");
    } else {
      c.plant = PendulumParams::qube_servo2();
    }
    c.perturbation = f.keys_with_prefix("perturb.").empty() ? PerturbationSpec::default_mismatch()
                                                            : load_perturbation(f, "perturb.");
    perturb(c.plant, c.perturbation);

    c.mpc = load_mpc_config(f, "mpc.");
    c.reference = load_reference(f, "ref.", RefTrajectory::sine(1.0, 1.0));

    c.family.amplitude_min = f.get_double("train.amplitude_min", c.family.amplitude_min);
    c.family.amplitude_max = f.get_double("train.amplitude_max", c.family.amplitude_max);
    c.family.frequency_min = f.get_double("train.frequency_min", c.family.frequency_min);
    c.family.frequency_max = f.get_double("train.frequency_max", c.family.frequency_max);
    if (!(0.0 <= c.family.amplitude_min && c.family.amplitude_min <= c.family.amplitude_max) ||
        !(0.0 < c.family.frequency_min && c.family.frequency_min <= c.family.frequency_max)) {
      fail(ErrorCode::Config, "training reference ranges are inconsistent");
    }

    c.ddpg = load_ddpg_config(f, "ddpg.");
    c.zones = load_constraint_zones(f, "zones.");
    validate(c.zones, c.family.amplitude_max);
    validate(RlmpcMode::rl_plus_mpc());
    validate(RlmpcMode::warm_start());

    c.seed = static_cast<std::uint64_t>(f.get_int("run.seed", 1));
    c.threads = env_threads();

    DatasetOptions& d = c.dataset;
    d.n_episodes = static_cast<int>(f.get_int("nnmpc.episodes", d.n_episodes));
    d.episode_len = static_cast<int>(f.get_int("nnmpc.episode_len", d.episode_len));
    d.noise_sigma = f.get_double("nnmpc.noise_sigma", d.noise_sigma);
    d.noise_fraction = f.get_double("nnmpc.noise_fraction", d.noise_fraction);
    d.random_start_fraction = f.get_double("nnmpc.random_start_fraction", d.random_start_fraction);
    d.start_theta = f.get_double("nnmpc.start_theta", d.start_theta);
    d.start_alpha = f.get_double("nnmpc.start_alpha", d.start_alpha);
    d.family = c.family;
    d.threads = c.threads;
    d.seed = mix_seed(c.seed, 1);

    NnmpcTrainOptions& n = c.nnmpc;
    n.epochs = static_cast<int>(f.get_int("nnmpc.epochs", n.epochs));
    n.batch_size = static_cast<int>(f.get_int("nnmpc.batch", n.batch_size));
    n.lr = f.get_double("nnmpc.lr", n.lr);
    n.hidden = static_cast<int>(f.get_int("nnmpc.hidden", n.hidden));
    n.validation_fraction = f.get_double("nnmpc.validation_fraction", n.validation_fraction);
    n.output_bound = c.mpc.u_bound;
    n.seed = mix_seed(c.seed, 2);
    if (d.n_episodes <= 0 || d.episode_len <= 0 || n.epochs < 0 || n.batch_size <= 0 || !(n.lr > 0.0) ||
        n.hidden <= 0 || !(n.validation_fraction >= 0.0 && n.validation_fraction < 1.0)) {
      fail(ErrorCode::Config, "invalid nnmpc settings");
    }

    c.episode_seconds = f.get_double("train.episode_seconds", c.episode_seconds);
    const int T = static_cast<int>(std::lround(c.episode_seconds / c.mpc.Ts));
    c.train.episodes = static_cast<int>(f.get_int("train.episodes", c.train.episodes));
    c.train.T = T;
    c.train.family = c.family;
    c.train.seed = mix_seed(c.seed, 5);
    c.train.reset_timeout = f.get_double("train.reset_timeout", c.train.reset_timeout);
    c.train.checkpoint_every = static_cast<int>(f.get_int("train.checkpoint_every", c.train.checkpoint_every));
    c.pretrain.episodes = static_cast<int>(f.get_int("train.pretrain_episodes", c.pretrain.episodes));
    c.pretrain.T = T;
    c.pretrain.family = c.family;
    c.pretrain.seed = mix_seed(c.seed, 4);
    c.pretrain.reset_timeout = c.train.reset_timeout;
    if (T < 0 || c.train.episodes < 0 || c.pretrain.episodes < 0 || !(c.train.reset_timeout > 0.0)) {
      fail(ErrorCode::Config, "invalid training settings");
    }

    c.sim_duration = f.get_double("eval.sim_duration", c.sim_duration);
    const std::string sim_plant = f.get_string("eval.sim_plant", "nominal");
    if (sim_plant != "nominal" && sim_plant != "perturbed") {
      fail(ErrorCode::Config, "eval.sim_plant must be nominal or perturbed");
    }
    c.sim_perturbed = sim_plant == "perturbed";
    c.nominal_ts = f.get_double("eval.nominal_ts", c.nominal_ts);
    c.nominal_tf = f.get_double("eval.nominal_tf", c.nominal_tf);
    c.perturbed_ts = f.get_double("eval.perturbed_ts", c.perturbed_ts);
    c.perturbed_tf = f.get_double("eval.perturbed_tf", c.perturbed_tf);
    if (!(0.0 <= c.nominal_ts && c.nominal_ts < c.nominal_tf) ||
        !(0.0 <= c.perturbed_ts && c.perturbed_ts < c.perturbed_tf) || !(c.sim_duration >= 0.0)) {
      fail(ErrorCode::Config, "invalid evaluation windows");
    }
    c.nominal_refs = parse_reference_list(f.get_string("eval.nominal_refs", "sine:1:1, sine:0.8:1, sine:1:2"));
    c.perturbed_refs =
        parse_reference_list(f.get_string("eval.perturbed_refs", "sine:1:1, sine:0.8:1, sine:1.2:1"));
    c.eval_controllers = split(f.get_string("eval.controllers", "mpc,drmpc,nnmpc,warmstart,rlmpc"), ',');
    for (const std::string& id : c.eval_controllers) {
      if (id != "mpc" && id != "drmpc" && id != "nnmpc" && id != "warmstart" && id != "rlmpc") {
        fail(ErrorCode::Config, "unknown controller '" + id + "' in eval.controllers");
      }
    }
    c.bench_steps = static_cast<int>(f.get_int("eval.bench_steps", c.bench_steps));
    c.bench_warmup = static_cast<int>(f.get_int("eval.bench_warmup", c.bench_warmup));
    if (c.bench_steps < 100 || c.bench_warmup < 0) fail(ErrorCode::Config, "eval.bench_steps must be >= 100");

    if (f.has("run.out")) {
      c.out_dir = f.get_string("run.out");
    } else {
      c.out_dir = std::filesystem::path("runs") / f.get_string("run.name", "default");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(ErrorCode::Config, f.origin() + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::Config, "config file not found: " + path.string());
  return make_run_config(KeyValueFile::load(path), path.parent_path());
}

std::filesystem::path RunLayout::critic_checkpoint(RlmpcVariant v) const {
  return checkpoints() / (std::string(to_string(v)) + "_critic");
}

std::filesystem::path RunLayout::agent_weights(RlmpcVariant v) const { return weights() / to_string(v); }

std::filesystem::path RunLayout::training_checkpoints(RlmpcVariant v) const {
  return checkpoints() / to_string(v);
}

std::filesystem::path RunLayout::reward_log(RlmpcVariant v) const {
  return logs() / (std::string(to_string(v)) + "_rewards.csv");
}

void RunLayout::create() const {
  for (const auto& d : {logs(), weights(), reports(), checkpoints()}) std::filesystem::create_directories(d);
}

RlmpcMode mode_for(RlmpcVariant v) {
  return v == RlmpcVariant::WarmStartRl ? RlmpcMode::warm_start() : RlmpcMode::rl_plus_mpc();
}

std::unique_ptr<Controller> make_controller(const RunConfig& cfg, const RunLayout& layout,
                                            const std::string& id) {
  if (id == "mpc") return std::make_unique<MpcController>(nominal_model(cfg), cfg.mpc);
  if (id == "drmpc") return std::make_unique<DrmpcController>(nominal_model(cfg), cfg.mpc);
  if (id == "nnmpc") return std::make_unique<NnmpcPolicy>(load_nnmpc(layout), cfg.mpc);
  if (id == "warmstart") {
    const auto actor = layout.agent_weights(RlmpcVariant::WarmStartRl) / "actor.txt";
    require(actor, "run train-rlmpc --controller warmstart first");
    return std::make_unique<WarmStartPolicy>(load_mlp(actor), cfg.mpc, RlmpcMode::warm_start().actor_bound);
  }
  if (id == "rlmpc") {
    const auto actor = layout.agent_weights(RlmpcVariant::RlPlusMpc) / "actor.txt";
    NnmpcController base = load_nnmpc(layout);
    require(actor, "run train-rlmpc first");
    const RlmpcMode m = RlmpcMode::rl_plus_mpc();
    return std::make_unique<RlPlusMpcPolicy>(std::move(base), load_mlp(actor), cfg.mpc,
                                             m.base_controller_bound, m.actor_bound);
  }
  fail(ErrorCode::Config, "unknown controller '" + id + "'");
}

void cmd_simulate(const RunConfig& cfg, const std::string& id) {
  const RunLayout layout{cfg.out_dir};
  const std::unique_ptr<Controller> ctrl = make_controller(cfg, layout, id);
  layout.create();
  const PendulumParams plant = cfg.sim_perturbed ? cfg.perturbed_plant() : cfg.plant;
  const TrajectoryLog log = run_controller(*ctrl, plant, cfg.reference, cfg.sim_duration, cfg.mpc.Ts);
  save_trajectory_csv(log, layout.logs() / ("sim_" + id + ".csv"));

  EvalReport rep;
  rep.controller = id;
  rep.plant = cfg.sim_perturbed ? "perturbed" : "nominal";
  rep.reference = cfg.reference.describe();
  rep.window_start = 0.0;
  rep.window_end = cfg.sim_duration;
  if (cfg.sim_duration > 0.0) rep.j_ac = average_cost(log, 0.0, cfg.sim_duration);
  rep.soft_violations = count_violations(log, cfg.zones.alpha2, cfg.zones.beta2);
  write_reports_csv({rep}, layout.reports() / ("sim_" + id + ".csv"));
  std::cout << id << " on " << rep.plant << " plant, " << rep.reference << ", " << cfg.sim_duration
            << " s: J_ac = " << rep.j_ac << ", soft-zone samples = " << rep.soft_violations << '\n';
}

void cmd_dataset(const RunConfig& cfg) {
  const RunLayout layout{cfg.out_dir};
  layout.create();
  DatasetStats stats;
  const NnmpcDataset data = generate_dataset(cfg.plant, nominal_model(cfg), cfg.mpc, cfg.dataset, &stats);
  save_dataset_csv(data, layout.dataset_csv());
  std::cout << "dataset: " << data.size() << " samples, " << stats.dropped_episodes
            << " episodes truncated, written to " << layout.dataset_csv().string() << '\n';
}

void cmd_train_nnmpc(const RunConfig& cfg) {
  const RunLayout layout{cfg.out_dir};
  layout.create();
  NnmpcDataset data;
  if (std::filesystem::exists(layout.dataset_csv())) {
    data = load_dataset_csv(layout.dataset_csv());
    log_info("using existing dataset ", layout.dataset_csv().string());
  } else {
    data = generate_dataset(cfg.plant, nominal_model(cfg), cfg.mpc, cfg.dataset);
    save_dataset_csv(data, layout.dataset_csv());
  }
  if (data.observations.rows() != obs_dim(cfg.mpc)) {
    fail(ErrorCode::DimensionMismatch, "dataset observation size does not match the MPC configuration");
  }
  const NnmpcTrainResult res = train_nnmpc(data, cfg.nnmpc);
  save_controller(res.controller, layout.nnmpc_weights());
  std::ofstream loss(layout.logs() / "nnmpc_loss.csv");
  loss.precision(10);
  loss << "epoch,train_mse\n0," << res.history.initial_loss << '\n';
  for (std::size_t i = 0; i < res.history.epoch_loss.size(); ++i) {
    loss << i + 1 << ',' << res.history.epoch_loss[i] << '\n';
  }
  std::cout << "nnmpc: train mse " << res.train_mse << ", validation mse " << res.validation_mse
            << ", weights " << layout.nnmpc_weights().string() << '\n';
}

void cmd_pretrain_critic(const RunConfig& cfg, RlmpcVariant variant) {
  const RunLayout layout{cfg.out_dir};
  const NnmpcController nnmpc = load_nnmpc(layout);
  layout.create();
  const RlmpcMode mode = mode_for(variant);
  DdpgAgent agent = make_agent(obs_dim(cfg.mpc), mode.actor_bound, cfg.ddpg, mix_seed(cfg.seed, 3));
  if (variant == RlmpcVariant::WarmStartRl) set_actor(agent, nnmpc.net, cfg.ddpg.actor_lr);
  pretrain_critic(mode, nnmpc, agent, cfg.plant, cfg.zones, cfg.mpc, cfg.pretrain);
  save_agent(agent, layout.critic_checkpoint(variant));
  std::cout << "critic pre-trained over " << cfg.pretrain.episodes << " nominal episodes, saved to "
            << layout.critic_checkpoint(variant).string() << '\n';
}

void cmd_train_rlmpc(const RunConfig& cfg, RlmpcVariant variant, bool resume) {
  const RunLayout layout{cfg.out_dir};
  const NnmpcController nnmpc = load_nnmpc(layout);
  const RlmpcMode mode = mode_for(variant);
  const auto latest = layout.training_checkpoints(variant) / "latest";

  DdpgAgent agent;
  std::vector<std::string> kept_rows;
  if (resume && std::filesystem::exists(latest / "agent.meta")) {
    agent = load_agent(latest, cfg.ddpg);
    std::ifstream prev(layout.reward_log(variant));
    std::string line;
    std::getline(prev, line);
    while (std::getline(prev, line)) {
      if (!line.empty() && std::stoi(line) <= agent.episode) kept_rows.push_back(line);
    }
    log_info("resuming from episode ", agent.episode);
  } else {
    require(layout.critic_checkpoint(variant) / "agent.meta", "run pretrain-critic first");
    agent = load_agent(layout.critic_checkpoint(variant), cfg.ddpg);
    agent.episode = 0;
    agent.noise.set_sigma(cfg.ddpg.sigma0);
  }
  if (agent.obs_dim() != obs_dim(cfg.mpc)) {
    fail(ErrorCode::DimensionMismatch, "checkpoint observation size does not match the MPC configuration");
  }
  layout.create();

  TrainOptions opt = cfg.train;
  opt.checkpoint_dir = layout.training_checkpoints(variant);
  opt.on_episode = [](const EpisodeLogEntry& e) {
    if (e.episode % 25 == 0) {
      log_info("episode ", e.episode, ": steps ", e.steps, ", reward ", e.cumulative_reward, ", sigma ", e.sigma);
    }
  };
  const TrainLog log = train(cfg.perturbed_plant(), mode, nnmpc, agent, cfg.zones, cfg.mpc, opt);
  save_agent(agent, layout.agent_weights(variant));

  std::ofstream out(layout.reward_log(variant));
  if (!out) fail(ErrorCode::Io, "cannot write " + layout.reward_log(variant).string());
  out.precision(10);
  out << "episode,steps,cumulative_reward,terminated_by,sigma\n";
  for (const std::string& row : kept_rows) out << row << '\n';
  for (const EpisodeLogEntry& e : log.episodes) {
    out << e.episode << ',' << e.steps << ',' << e.cumulative_reward << ',' << to_string(e.terminated_by)
        << ',' << e.sigma << '\n';
  }
  int soft = 0, hard = 0;
  for (const EpisodeLogEntry& e : log.episodes) {
    soft += e.terminated_by == Termination::SoftViolation;
    hard += e.terminated_by == Termination::HardViolation;
  }
  std::cout << to_string(variant) << ": " << log.episodes.size() << " episodes, " << log.total_steps
            << " steps, max |u| " << log.max_abs_u << " V, " << soft << " soft / " << hard
            << " hard terminations; weights in " << layout.agent_weights(variant).string() << '\n';
}

namespace {

std::vector<std::pair<std::string, std::unique_ptr<Controller>>> available_controllers(
    const RunConfig& cfg, const RunLayout& layout) {
  std::vector<std::pair<std::string, std::unique_ptr<Controller>>> out;
  for (const std::string& id : cfg.eval_controllers) {
    try {
      out.emplace_back(id, make_controller(cfg, layout, id));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingArtifact) throw;
      log_info("skipping ", id, ": ", e.what());
    }
  }
  if (out.empty()) fail(ErrorCode::MissingArtifact, "no controller available for evaluation");
  return out;
}

struct EvalJob {
  const Controller* ctrl;
  std::string id;
  RefTrajectory ref;
  bool perturbed;
  EvalReport report;
};

std::vector<EvalReport> run_jobs(const RunConfig& cfg, std::vector<EvalJob>& jobs) {
  const PendulumParams nominal = cfg.plant;
  const PendulumParams perturbed = cfg.perturbed_plant();
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        EvalJob& j = jobs[i];
        const double ts = j.perturbed ? cfg.perturbed_ts : cfg.nominal_ts;
        const double tf = j.perturbed ? cfg.perturbed_tf : cfg.nominal_tf;
        const TrajectoryLog log =
            run_controller(*j.ctrl, j.perturbed ? perturbed : nominal, j.ref, tf, cfg.mpc.Ts);
        j.report.controller = j.id;
        j.report.plant = j.perturbed ? "perturbed" : "nominal";
        j.report.reference = j.ref.describe();
        j.report.window_start = ts;
        j.report.window_end = tf;
        j.report.j_ac = average_cost(log, ts, tf);
        j.report.soft_violations = count_violations(log, cfg.zones.alpha2, cfg.zones.beta2);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  std::vector<EvalReport> out;
  for (const EvalJob& j : jobs) out.push_back(j.report);
  return out;
}

void write_runtime(const std::vector<std::pair<std::string, TimingStats>>& stats,
                   const std::filesystem::path& path) {
  double mpc_mean = 0.0;
  for (const auto& [id, s] : stats) {
    if (id == "mpc") mpc_mean = s.mean_s;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.precision(8);
  out << "controller,mean_us,p50_us,p99_us,pct_reduction_vs_mpc\n";
  std::cout << std::left << std::setw(12) << "controller" << std::right << std::setw(12) << "mean_us"
            << std::setw(12) << "p50_us" << std::setw(12) << "p99_us" << std::setw(14) << "% vs mpc" << '\n';
  for (const auto& [id, s] : stats) {
    out << id << ',' << s.mean_s * 1e6 << ',' << s.p50_s * 1e6 << ',' << s.p99_s * 1e6 << ',';
    std::cout << std::left << std::setw(12) << id << std::right << std::fixed << std::setprecision(4)
              << std::setw(12) << s.mean_s * 1e6 << std::setw(12) << s.p50_s * 1e6 << std::setw(12)
              << s.p99_s * 1e6;
    if (mpc_mean > 0.0) {
      const double pct = 100.0 * (1.0 - s.mean_s / mpc_mean);
      out << pct;
      std::cout << std::setw(13) << std::setprecision(3) << pct << '%';
    }
    out << '\n';
    std::cout << '\n';
  }
  std::cout.unsetf(std::ios::floatfield);
}

std::vector<std::pair<std::string, TimingStats>> benchmark_all(
    const RunConfig& cfg, const std::vector<std::pair<std::string, std::unique_ptr<Controller>>>& ctrls) {
  std::vector<std::pair<std::string, TimingStats>> stats;
  for (const auto& [id, ctrl] : ctrls) {
    stats.emplace_back(id, benchmark_runtime(*ctrl, cfg.bench_steps, cfg.bench_warmup));
  }
  return stats;
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg) {
  const RunLayout layout{cfg.out_dir};
  const auto ctrls = available_controllers(cfg, layout);
  layout.create();
  const std::string baseline = ctrls.front().first == "mpc" ? "mpc" : ctrls.front().first;

  for (const bool perturbed : {false, true}) {
    std::vector<EvalJob> jobs;
    for (const RefTrajectory& ref : perturbed ? cfg.perturbed_refs : cfg.nominal_refs) {
      for (const auto& [id, ctrl] : ctrls) jobs.push_back({ctrl.get(), id, ref, perturbed, {}});
    }
    const std::vector<EvalReport> reports = run_jobs(cfg, jobs);
    const std::vector<ComparisonRow> rows = compare(reports, baseline);
    const std::string name = perturbed ? "table_perturbed" : "table_nominal";
    write_comparison_csv(rows, layout.reports() / (name + ".csv"));
    write_reports_csv(reports, layout.reports() / (name + "_details.csv"));
    std::cout << (perturbed ? "Perturbed plant" : "Nominal plant") << ", window ["
              << (perturbed ? cfg.perturbed_ts : cfg.nominal_ts) << ", "
              << (perturbed ? cfg.perturbed_tf : cfg.nominal_tf) << "] s\n"
              << format_comparison_table(rows) << '\n';
  }
  write_runtime(benchmark_all(cfg, ctrls), layout.reports() / "runtime.csv");
}

void cmd_benchmark(const RunConfig& cfg) {
  const RunLayout layout{cfg.out_dir};
  const auto ctrls = available_controllers(cfg, layout);
  layout.create();
  write_runtime(benchmark_all(cfg, ctrls), layout.reports() / "runtime.csv");
}

}  // namespace rlmpc
