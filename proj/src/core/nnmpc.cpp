#include "core/nnmpc.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/log.hpp"
#include "core/rng.hpp"

namespace rlmpc {

Eigen::VectorXd make_observation(const State& x, const CrucialPoints& cp) {
  Eigen::VectorXd obs(4 + static_cast<Eigen::Index>(cp.c.size()));
  obs.head<4>() = x.vec();
  for (std::size_t j = 0; j < cp.c.size(); ++j) obs[4 + static_cast<Eigen::Index>(j)] = cp.c[j];
  return obs;
}

namespace {

struct EpisodeSamples {
  std::vector<Eigen::VectorXd> obs;
  std::vector<double> targets;
  bool dropped = false;
};

EpisodeSamples run_dataset_episode(const PendulumParams& plant, const DiscreteModel& model,
                                   const MpcConfig& cfg, const DatasetOptions& options, int episode) {
  std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(episode)));
  const RefTrajectory traj = options.family.draw(rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  State x;
  if (unit(rng) < options.random_start_fraction) {
    std::uniform_real_distribution<double> theta(-options.start_theta, options.start_theta);
    std::uniform_real_distribution<double> alpha(-options.start_alpha, options.start_alpha);
    const double t0 = theta(rng);
    const double a0 = alpha(rng);
    x = State(t0, a0, 0.0, 0.0);
  }
  std::normal_distribution<double> noise(0.0, options.noise_sigma);

  EpisodeSamples out;
  out.obs.reserve(static_cast<std::size_t>(options.episode_len));
  out.targets.reserve(static_cast<std::size_t>(options.episode_len));
  try {
    for (int k = 0; k < options.episode_len; ++k) {
      const CrucialPoints cp = downsample(traj, k, cfg.Ts, cfg.crucial_ts, cfg.N);
      const double u = drmpc_step(model, cfg, x, cp);
      out.obs.push_back(make_observation(x, cp));
      out.targets.push_back(u);

      double applied = u;
      const bool perturb_step = unit(rng) < options.noise_fraction;
      const double n = noise(rng);
      if (perturb_step) applied = std::clamp(u + n, -cfg.u_bound, cfg.u_bound);
      x = simulate_interval(plant, x, applied, cfg.Ts);
      if (std::abs(x.alpha()) > 1.0) {
        log_info("dataset episode ", episode, ": pendulum fell at step ", k, ", truncating");
        break;
      }
    }
  } catch (const Error& e) {
    log_info("dataset episode ", episode, " dropped: ", e.what());
    out = EpisodeSamples{};
    out.dropped = true;
  }
  return out;
}

}  // namespace

NnmpcDataset generate_dataset(const PendulumParams& plant, const DiscreteModel& model,
                              const MpcConfig& cfg, const DatasetOptions& options,
                              DatasetStats* stats) {
  validate(cfg);
  if (options.n_episodes < 0 || options.episode_len < 0) {
    fail(ErrorCode::InvalidArgument, "dataset episode counts must be >= 0");
  }
  std::vector<EpisodeSamples> episodes(static_cast<std::size_t>(options.n_episodes));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int e = next++; e < options.n_episodes; e = next++) {
      episodes[static_cast<std::size_t>(e)] = run_dataset_episode(plant, model, cfg, options, e);
    }
  };
  const int threads = std::max(1, std::min(options.threads, options.n_episodes));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::size_t total = 0;
  int dropped = 0;
  for (const auto& ep : episodes) {
    total += ep.targets.size();
    dropped += ep.dropped ? 1 : 0;
  }
  const Eigen::Index obs_dim = 4 + cfg.N / crucial_stride(cfg.Ts, cfg.crucial_ts, cfg.N) + 1;
  NnmpcDataset data;
  data.observations.resize(obs_dim, static_cast<Eigen::Index>(total));
  data.targets.resize(static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& ep : episodes) {
    for (std::size_t i = 0; i < ep.targets.size(); ++i, ++col) {
      data.observations.col(col) = ep.obs[i];
      data.targets[col] = ep.targets[i];
    }
  }

  if (stats != nullptr) {
    stats->dropped_episodes = dropped;
    if (total > 0) {
      stats->mean = data.observations.rowwise().mean();
      const Eigen::MatrixXd centered = data.observations.colwise() - stats->mean;
      stats->stddev = (centered.array().square().rowwise().sum() / static_cast<double>(total)).sqrt();
    } else {
      stats->mean = Eigen::VectorXd::Zero(obs_dim);
      stats->stddev = Eigen::VectorXd::Zero(obs_dim);
    }
  }
  return data;
}

void save_dataset_csv(const NnmpcDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const Eigen::Index dim = data.observations.rows();
  for (Eigen::Index i = 0; i < dim; ++i) {
    out << (i < 4 ? "x" + std::to_string(i + 1) : "c" + std::to_string(i - 3)) << ',';
  }
  out << "u\n";
  char buf[64];
  for (Eigen::Index c = 0; c < data.size(); ++c) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), data.observations(i, c));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    const auto res = std::to_chars(buf, buf + sizeof(buf), data.targets[c]);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

NnmpcDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::CorruptFile, path.string() + ": empty dataset file");
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "u") {
    fail(ErrorCode::CorruptFile, path.string() + ": unexpected dataset header");
  }
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    Eigen::Index count = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
      if (res.ec != std::errc{} || res.ptr != line.data() + end) {
        fail(ErrorCode::CorruptFile, path.string() + ": bad number on data row " + std::to_string(rows + 1));
      }
      values.push_back(v);
      ++count;
      pos = end + 1;
    }
    if (count != columns) fail(ErrorCode::CorruptFile, path.string() + ": ragged dataset row");
    ++rows;
  }
  NnmpcDataset data;
  data.observations.resize(columns - 1, rows);
  data.targets.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c + 1 < columns; ++c) data.observations(c, r) = values[r * columns + c];
    data.targets[r] = values[r * columns + columns - 1];
  }
  return data;
}

NnmpcTrainResult train_nnmpc(const NnmpcDataset& data, const NnmpcTrainOptions& options) {
  const Eigen::Index n = data.size();
  if (n == 0) fail(ErrorCode::EmptyDataset, "train_nnmpc: dataset is empty");
  const Eigen::Index dim = data.observations.rows();

  std::mt19937_64 rng(options.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::Index n_val = static_cast<Eigen::Index>(std::floor(options.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  const Eigen::Index n_train = n - n_val;

  Eigen::MatrixXd x_train(dim, n_train), y_train(1, n_train);
  Eigen::MatrixXd x_val(dim, n_val), y_val(1, n_val);
  for (Eigen::Index i = 0; i < n_train; ++i) {
    x_train.col(i) = data.observations.col(order[i]);
    y_train(0, i) = data.targets[order[i]];
  }
  for (Eigen::Index i = 0; i < n_val; ++i) {
    x_val.col(i) = data.observations.col(order[n_train + i]);
    y_val(0, i) = data.targets[order[n_train + i]];
  }

  const Eigen::VectorXd mean = x_train.rowwise().mean();
  Eigen::VectorXd stddev =
      ((x_train.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n_train)).sqrt();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(stddev[i] > 1e-8)) stddev[i] = 1.0;
  }
  const Eigen::MatrixXd x_norm = (x_train.colwise() - mean).array().colwise() / stddev.array();

  LayerSpec spec;
  spec.dims = {static_cast<int>(dim), options.hidden, 1};
  spec.activations = {Activation::Relu, Activation::Tanh};
  spec.output_scale = options.output_bound;
  Mlp net = Mlp::init(spec, mix_seed(options.seed, 1));

  SupervisedOptions sup;
  sup.epochs = options.epochs;
  sup.batch_size = options.batch_size;
  sup.lr = options.lr;
  sup.seed = mix_seed(options.seed, 2);

  NnmpcTrainResult result;
  result.history = train_supervised(net, x_norm, y_train, sup);

  // Fold standardization: W (x - mu) / sigma + b = (W diag(1/sigma)) x + (b - W diag(1/sigma) mu)
  {
    auto& first = net.mutable_layers().front();
    first.W = first.W * stddev.cwiseInverse().asDiagonal();
    first.b -= first.W * mean;
  }

  result.train_mse = mean_squared_error(net, x_train, y_train);
  result.validation_mse = n_val > 0 ? mean_squared_error(net, x_val, y_val) : 0.0;

  std::ostringstream meta;
  meta.precision(17);
  meta << "samples = " << n << "\ntrain_samples = " << n_train << "\nvalidation_samples = " << n_val
       << "\nepochs = " << options.epochs << "\nbatch_size = " << options.batch_size
       << "\nlr = " << options.lr << "\nseed = " << options.seed
       << "\noutput_bound = " << options.output_bound << "\ntrain_mse = " << result.train_mse
       << "\nvalidation_mse = " << result.validation_mse << "\n";
  result.controller.net = std::move(net);
  result.controller.metadata = meta.str();
  return result;
}

double nnmpc_act(const NnmpcController& ctrl, const State& x, const CrucialPoints& cp) {
  return ctrl.net.predict_scalar(make_observation(x, cp));
}

void save_controller(const NnmpcController& ctrl, const std::filesystem::path& weights_path) {
  save_mlp(ctrl.net, weights_path);
  std::filesystem::path meta = weights_path;
  meta += ".meta";
  std::ofstream out(meta);
  if (!out) fail(ErrorCode::Io, "cannot write " + meta.string());
  out << ctrl.metadata;
}

NnmpcController load_controller(const std::filesystem::path& weights_path) {
  NnmpcController ctrl;
  ctrl.net = load_mlp(weights_path);
  std::filesystem::path meta = weights_path;
  meta += ".meta";
  std::ifstream in(meta);
  if (in) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    ctrl.metadata = buffer.str();
  }
  return ctrl;
}

}  // namespace rlmpc
