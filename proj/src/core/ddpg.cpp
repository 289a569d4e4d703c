#include "core/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace rlmpc {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) fail(ErrorCode::InvalidArgument, "replay buffer capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
  ++insertions_;
}

void ReplayBuffer::clear() {
  data_.clear();
  head_ = 0;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) fail(ErrorCode::InvalidArgument, "replay index out of range");
  if (data_.size() < capacity_) return data_[i];
  return data_[(head_ + i) % capacity_];
}

Batch sample_batch(const ReplayBuffer& buffer, int M, std::mt19937_64& rng) {
  if (M <= 0) fail(ErrorCode::EmptyBatch, "batch size must be positive");
  if (buffer.size() < static_cast<std::size_t>(M)) {
    fail(ErrorCode::InsufficientData, "replay buffer holds " + std::to_string(buffer.size()) +
                                          " transitions, batch needs " + std::to_string(M));
  }
  const Eigen::Index dim = buffer.at(0).s.size();
  Batch b;
  b.s.resize(dim, M);
  b.s_next.resize(dim, M);
  b.a.resize(M);
  b.r.resize(M);
  b.done.resize(M);
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  for (int i = 0; i < M; ++i) {
    const Transition& t = buffer.at(pick(rng));
    b.s.col(i) = t.s;
    b.s_next.col(i) = t.s_next;
    b.a[i] = t.a;
    b.r[i] = t.r;
    b.done[i] = t.done ? 1.0 : 0.0;
  }
  return b;
}

NoiseProcess::NoiseProcess(double sigma0, double decay, double sigma_min, std::uint64_t seed)
    : sigma0_(sigma0), decay_(decay), sigma_min_(sigma_min), sigma_(sigma0), rng_(seed) {
  if (!(sigma0 >= 0.0) || !(decay > 0.0 && decay <= 1.0) || !(sigma_min >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "invalid exploration noise schedule");
  }
}

void NoiseProcess::next_episode() { sigma_ = std::max(sigma_ * decay_, sigma_min_); }

double NoiseProcess::sample() {
  if (sigma_ == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma_);
  return n(rng_);
}

void validate(const DdpgConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorCode::Config, "ddpg: " + what); };
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) bad("gamma must lie in [0, 1)");
  if (!(c.tau > 0.0 && c.tau <= 1.0)) bad("tau must lie in (0, 1]");
  if (c.batch_size <= 0) bad("batch size must be positive");
  if (c.buffer_capacity < static_cast<std::size_t>(c.batch_size)) bad("buffer smaller than a batch");
  if (!(c.actor_lr > 0.0) || !(c.critic_lr > 0.0)) bad("learning rates must be positive");
  if (!(c.sigma_min >= 0.0) || !(c.sigma0 >= c.sigma_min)) bad("need sigma0 >= sigma_min >= 0");
  if (!(c.sigma_decay > 0.0 && c.sigma_decay <= 1.0)) bad("sigma decay must lie in (0, 1]");
  if (c.warmup < c.batch_size) bad("warmup must be at least one batch");
  if (c.hidden <= 0) bad("hidden width must be positive");
}

DdpgConfig load_ddpg_config(const KeyValueFile& f, const std::string& prefix) {
  DdpgConfig c;
  c.gamma = f.get_double(prefix + "gamma", c.gamma);
  c.tau = f.get_double(prefix + "tau", c.tau);
  c.batch_size = static_cast<int>(f.get_int(prefix + "batch", c.batch_size));
  c.buffer_capacity = static_cast<std::size_t>(
      f.get_int(prefix + "buffer", static_cast<long long>(c.buffer_capacity)));
  c.actor_lr = f.get_double(prefix + "actor_lr", c.actor_lr);
  c.critic_lr = f.get_double(prefix + "critic_lr", c.critic_lr);
  c.sigma0 = f.get_double(prefix + "sigma0", c.sigma0);
  c.sigma_decay = f.get_double(prefix + "sigma_decay", c.sigma_decay);
  c.sigma_min = f.get_double(prefix + "sigma_min", c.sigma_min);
  c.warmup = static_cast<int>(f.get_int(prefix + "warmup", c.warmup));
  c.hidden = static_cast<int>(f.get_int(prefix + "hidden", c.hidden));
  validate(c);
  return c;
}

DdpgAgent make_agent(int obs_dim, double action_bound, const DdpgConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  if (obs_dim <= 0) fail(ErrorCode::InvalidArgument, "observation dimension must be positive");
  if (!(action_bound > 0.0)) fail(ErrorCode::InvalidArgument, "action bound must be positive");
  DdpgAgent ag;
  ag.actor = Mlp::init({{obs_dim, cfg.hidden, 1}, {Activation::Relu, Activation::Tanh}, action_bound},
                       mix_seed(seed, 0));
  ag.critic = Mlp::init({{obs_dim + 1, cfg.hidden, 1}, {Activation::Relu, Activation::Linear}, 1.0},
                        mix_seed(seed, 1));
  ag.target_actor = ag.actor;
  ag.target_critic = ag.critic;
  ag.actor_opt = AdamState::for_network(ag.actor, cfg.actor_lr);
  ag.critic_opt = AdamState::for_network(ag.critic, cfg.critic_lr);
  ag.gamma = cfg.gamma;
  ag.tau = cfg.tau;
  ag.action_bound = action_bound;
  ag.batch_size = cfg.batch_size;
  ag.warmup = cfg.warmup;
  ag.noise = NoiseProcess(cfg.sigma0, cfg.sigma_decay, cfg.sigma_min, mix_seed(seed, 2));
  ag.buffer = ReplayBuffer(cfg.buffer_capacity);
  ag.sample_rng.seed(mix_seed(seed, 3));
  return ag;
}

void set_actor(DdpgAgent& agent, const Mlp& actor, double lr) {
  if (actor.input_dim() != agent.critic.input_dim() - 1 || actor.output_dim() != 1) {
    fail(ErrorCode::DimensionMismatch, "actor does not match the critic's observation size");
  }
  agent.actor = actor;
  agent.target_actor = actor;
  agent.action_bound = actor.output_scale();
  agent.actor_opt = AdamState::for_network(agent.actor, lr);
}

double act(const DdpgAgent& agent, const Eigen::VectorXd& s) { return agent.actor.predict_scalar(s); }

double act_with_noise(DdpgAgent& agent, const Eigen::VectorXd& s) {
  const double a = act(agent, s) + agent.noise.sample();
  return std::clamp(a, -agent.action_bound, agent.action_bound);
}

namespace {

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd in(s.rows() + 1, s.cols());
  in.topRows(s.rows()) = s;
  in.bottomRows(1) = a;
  return in;
}

void require_rows(const Batch& batch) {
  if (batch.size() == 0) fail(ErrorCode::EmptyBatch, "DDPG update on an empty batch");
}

}  // namespace

Eigen::VectorXd critic_targets(const DdpgAgent& agent, const Batch& batch) {
  const ForwardCache next_a = forward(agent.target_actor, batch.s_next);
  const ForwardCache next_q = forward(agent.target_critic, critic_input(batch.s_next, next_a.output));
  const Eigen::VectorXd q = next_q.output.row(0).transpose();
  return batch.r.array() + agent.gamma * (1.0 - batch.done.array()) * q.array();
}

double critic_loss(const DdpgAgent& agent, const Batch& batch, const Eigen::VectorXd& targets) {
  require_rows(batch);
  const ForwardCache fc = forward(agent.critic, critic_input(batch.s, batch.a.transpose()));
  return (fc.output.row(0).transpose() - targets).squaredNorm() / static_cast<double>(batch.size());
}

Gradients critic_gradient(const DdpgAgent& agent, const Batch& batch, const Eigen::VectorXd& targets) {
  require_rows(batch);
  const ForwardCache fc = forward(agent.critic, critic_input(batch.s, batch.a.transpose()));
  const Eigen::MatrixXd upstream =
      (2.0 / static_cast<double>(batch.size())) * (fc.output.row(0) - targets.transpose());
  return backward(agent.critic, fc, upstream);
}

double actor_objective(const DdpgAgent& agent, const Batch& batch) {
  require_rows(batch);
  const ForwardCache fa = forward(agent.actor, batch.s);
  const ForwardCache fq = forward(agent.critic, critic_input(batch.s, fa.output));
  return fq.output.mean();
}

Gradients actor_gradient(const DdpgAgent& agent, const Batch& batch) {
  require_rows(batch);
  const ForwardCache fa = forward(agent.actor, batch.s);
  const ForwardCache fq = forward(agent.critic, critic_input(batch.s, fa.output));
  const Eigen::MatrixXd up_q =
      Eigen::MatrixXd::Constant(1, batch.size(), -1.0 / static_cast<double>(batch.size()));
  const Gradients gq = backward(agent.critic, fq, up_q);
  const Eigen::MatrixXd dq_da = gq.input_gradient.bottomRows(1);
  return backward(agent.actor, fa, dq_da);
}

double critic_update(DdpgAgent& agent, const Batch& batch) {
  require_rows(batch);
  const Eigen::VectorXd y = critic_targets(agent, batch);
  const double loss = critic_loss(agent, batch, y);
  adam_step(agent.critic, critic_gradient(agent, batch, y), agent.critic_opt);
  return loss;
}

double actor_update(DdpgAgent& agent, const Batch& batch) {
  const double q = actor_objective(agent, batch);
  adam_step(agent.actor, actor_gradient(agent, batch), agent.actor_opt);
  return q;
}

void soft_update(DdpgAgent& agent, double tau) {
  agent.target_actor.blend_toward(agent.actor, tau);
  agent.target_critic.blend_toward(agent.critic, tau);
}

void save_agent(const DdpgAgent& agent, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_mlp(agent.actor, dir / "actor.txt");
  save_mlp(agent.critic, dir / "critic.txt");
  save_mlp(agent.target_actor, dir / "target_actor.txt");
  save_mlp(agent.target_critic, dir / "target_critic.txt");
  std::ofstream meta(dir / "agent.meta");
  if (!meta) fail(ErrorCode::Io, "cannot write " + (dir / "agent.meta").string());
  meta.precision(17);
  meta << "episode = " << agent.episode << '\n'
       << "sigma = " << agent.noise.sigma() << '\n'
       << "action_bound = " << agent.action_bound << '\n'
       << "gamma = " << agent.gamma << '\n'
       << "tau = " << agent.tau << '\n';
  std::ofstream rng(dir / "noise.rng");
  rng << agent.noise.rng() << '\n' << agent.sample_rng << '\n';
}

DdpgAgent load_agent(const std::filesystem::path& dir, const DdpgConfig& cfg) {
  const KeyValueFile meta = [&] {
    if (!std::filesystem::exists(dir / "agent.meta")) {
      fail(ErrorCode::MissingArtifact, "no agent checkpoint in " + dir.string());
    }
    return KeyValueFile::load(dir / "agent.meta");
  }();
  DdpgAgent ag;
  ag.actor = load_mlp(dir / "actor.txt");
  ag.critic = load_mlp(dir / "critic.txt");
  ag.target_actor = load_mlp(dir / "target_actor.txt");
  ag.target_critic = load_mlp(dir / "target_critic.txt");
  if (ag.critic.input_dim() != ag.actor.input_dim() + 1) {
    fail(ErrorCode::CorruptFile, "actor and critic shapes disagree in " + dir.string());
  }
  ag.actor_opt = AdamState::for_network(ag.actor, cfg.actor_lr);
  ag.critic_opt = AdamState::for_network(ag.critic, cfg.critic_lr);
  ag.gamma = meta.get_double("gamma", cfg.gamma);
  ag.tau = meta.get_double("tau", cfg.tau);
  ag.action_bound = meta.get_double("action_bound");
  ag.episode = static_cast<int>(meta.get_int("episode"));
  ag.batch_size = cfg.batch_size;
  ag.warmup = cfg.warmup;
  ag.noise = NoiseProcess(cfg.sigma0, cfg.sigma_decay, cfg.sigma_min, 0);
  ag.noise.set_sigma(meta.get_double("sigma"));
  ag.buffer = ReplayBuffer(cfg.buffer_capacity);
  std::ifstream rng(dir / "noise.rng");
  if (rng) rng >> ag.noise.rng() >> ag.sample_rng;
  if (rng.fail()) fail(ErrorCode::CorruptFile, "unreadable random state in " + dir.string());
  return ag;
}

}  // namespace rlmpc
