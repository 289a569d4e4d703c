#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rlmpc {

enum class Activation { Relu, Tanh, Linear };

const char* to_string(Activation act);
Activation parse_activation(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::Linear;
};

struct LayerSpec {
  std::vector<int> dims;                // input, hidden..., output
  std::vector<Activation> activations;  // one per weight layer
  double output_scale = 1.0;
};

// Dense feedforward network. Inputs and batches are column-major: one sample
// per column. Every mutation bumps `generation()` so that stale forward
// caches can be detected.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<DenseLayer> layers, double output_scale);

  // He-uniform for ReLU layers, Xavier-uniform otherwise; zero biases.
  static Mlp init(const LayerSpec& spec, std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() {
    ++generation_;
    return layers_;
  }
  double output_scale() const { return output_scale_; }
  void set_output_scale(double scale);

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;
  std::uint64_t generation() const { return generation_; }
  LayerSpec spec() const;

  // Single sample, no cache.
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  double predict_scalar(const Eigen::VectorXd& x) const { return predict(x)[0]; }

  // θ' <- tau θ_src + (1 - tau) θ'
  void blend_toward(const Mlp& src, double tau);

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& flat);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<DenseLayer> layers_;
  double output_scale_ = 1.0;
  std::uint64_t generation_ = 0;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd output;               // output_scale * act(pre.back())
  const Mlp* net = nullptr;
  std::uint64_t generation = 0;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  Eigen::MatrixXd input_gradient;  // in x batch

  Eigen::VectorXd flat() const;
};

ForwardCache forward(const Mlp& net, const Eigen::MatrixXd& batch);

// Reverse-mode gradients of sum_k upstream(:,k)' output(:,k) with respect to
// every parameter (summed over the batch) and each input column.
Gradients backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;

  static AdamState for_network(const Mlp& net, double lr);
};

// One Adam descent step.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

struct SupervisedOptions {
  int epochs = 200;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct TrainingHistory {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // training-set MSE after each epoch
};

// Minibatch MSE regression with per-epoch shuffling.
TrainingHistory train_supervised(Mlp& net, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& targets, const SupervisedOptions& options);

double mean_squared_error(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

// Header `mlp v1 <dims> <activations> <output_scale>`, then for each layer
// its weights row-major followed by its biases, one value per line.
void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);
std::string serialize_mlp(const Mlp& net);
Mlp deserialize_mlp(const std::string& text, const std::string& origin = "<memory>");

}  // namespace rlmpc
