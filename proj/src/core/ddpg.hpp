#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "core/mlp.hpp"

namespace rlmpc {

class KeyValueFile;

struct Transition {
  Eigen::VectorXd s;
  double a = 0.0;  // actor contribution [V]
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Fixed-capacity ring buffer; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }
  bool empty() const { return data_.empty(); }
  void clear();

  // 0 = oldest retained transition.
  const Transition& at(std::size_t i) const;

 private:
  std::vector<Transition> data_;
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::uint64_t insertions_ = 0;
};

struct Batch {
  Eigen::MatrixXd s;       // obs x M
  Eigen::VectorXd a;       // M
  Eigen::VectorXd r;       // M
  Eigen::MatrixXd s_next;  // obs x M
  Eigen::VectorXd done;    // M, 1.0 when terminal

  Eigen::Index size() const { return a.size(); }
};

// Uniform with replacement. Throws InsufficientData when size() < M.
Batch sample_batch(const ReplayBuffer& buffer, int M, std::mt19937_64& rng);

// Gaussian exploration with a per-episode multiplicative decay floored at
// sigma_min.
class NoiseProcess {
 public:
  NoiseProcess() = default;
  NoiseProcess(double sigma0, double decay, double sigma_min, std::uint64_t seed);

  double sigma() const { return sigma_; }
  void set_sigma(double sigma) { sigma_ = sigma; }
  void next_episode();
  double sample();

  double sigma0() const { return sigma0_; }
  double decay() const { return decay_; }
  double sigma_min() const { return sigma_min_; }
  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }

 private:
  double sigma0_ = 1.0;
  double decay_ = 0.995;
  double sigma_min_ = 0.05;
  double sigma_ = 1.0;
  std::mt19937_64 rng_;
};

struct DdpgConfig {
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 64;
  std::size_t buffer_capacity = 1000000;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double sigma0 = 1.0;
  double sigma_decay = 0.995;
  double sigma_min = 0.05;
  int warmup = 1000;  // stored transitions before updates start
  int hidden = 128;
};

void validate(const DdpgConfig& cfg);
DdpgConfig load_ddpg_config(const KeyValueFile& file, const std::string& prefix);

struct DdpgAgent {
  Mlp actor;          // obs -> a, tanh scaled by action_bound
  Mlp critic;         // [obs; a] -> Q, linear
  Mlp target_actor;
  Mlp target_critic;
  AdamState actor_opt;
  AdamState critic_opt;
  double gamma = 0.99;
  double tau = 0.005;
  double action_bound = 3.0;
  int batch_size = 64;
  int warmup = 1000;
  NoiseProcess noise;
  ReplayBuffer buffer{1};
  std::mt19937_64 sample_rng;
  int episode = 0;  // completed training episodes

  int obs_dim() const { return actor.input_dim(); }
};

DdpgAgent make_agent(int obs_dim, double action_bound, const DdpgConfig& cfg, std::uint64_t seed);

// Replaces the online and target actor with `actor` and resets its optimizer.
void set_actor(DdpgAgent& agent, const Mlp& actor, double lr);

double act(const DdpgAgent& agent, const Eigen::VectorXd& s);

// clip(actor(s) + N(0, sigma), +-action_bound).
double act_with_noise(DdpgAgent& agent, const Eigen::VectorXd& s);

// y_i = r_i + gamma (1 - done_i) Q'(s'_i, mu'(s'_i))
Eigen::VectorXd critic_targets(const DdpgAgent& agent, const Batch& batch);

// Mean squared TD error against fixed targets, and its gradient.
double critic_loss(const DdpgAgent& agent, const Batch& batch, const Eigen::VectorXd& targets);
Gradients critic_gradient(const DdpgAgent& agent, const Batch& batch, const Eigen::VectorXd& targets);

// Mean Q(s_i, mu(s_i)) and the gradient of its negation over actor weights.
double actor_objective(const DdpgAgent& agent, const Batch& batch);
Gradients actor_gradient(const DdpgAgent& agent, const Batch& batch);

// One Adam step on the critic; returns the pre-step loss.
double critic_update(DdpgAgent& agent, const Batch& batch);

// One Adam ascent step on mean Q(s, mu(s)) with the critic frozen; returns the
// pre-step mean Q.
double actor_update(DdpgAgent& agent, const Batch& batch);

void soft_update(DdpgAgent& agent, double tau);

// actor, critic, target_actor, target_critic weight files plus agent.meta.
void save_agent(const DdpgAgent& agent, const std::filesystem::path& dir);
DdpgAgent load_agent(const std::filesystem::path& dir, const DdpgConfig& cfg);

}  // namespace rlmpc
