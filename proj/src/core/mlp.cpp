#include "core/mlp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace rlmpc {

const char* to_string(Activation act) {
  switch (act) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  fail(ErrorCode::CorruptFile, "unknown activation: " + name);
}

namespace {

void apply_activation(Activation act, Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Linear: break;
  }
}

void apply_activation(Activation act, Eigen::VectorXd& z) {
  switch (act) {
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Linear: break;
  }
}

// Scaled output. tanh rounds to exactly +-1 for large arguments; a bounded
// output is pulled back to the largest double strictly inside the bound.
template <typename M>
M scaled_output(const std::vector<DenseLayer>& layers, double scale, const M& h) {
  M out = scale * h;
  if (!layers.empty() && layers.back().act == Activation::Tanh) {
    const double inside = std::nextafter(scale, 0.0);
    out = out.cwiseMin(inside).cwiseMax(-inside);
  }
  return out;
}

// Multiplies `g` in place by act'(pre).
void scale_by_derivative(Activation act, const Eigen::MatrixXd& pre, Eigen::MatrixXd& g) {
  switch (act) {
    case Activation::Relu:
      g = (pre.array() > 0.0).select(g, 0.0);
      break;
    case Activation::Tanh:
      g.array() *= 1.0 - pre.array().tanh().square();
      break;
    case Activation::Linear:
      break;
  }
}

void check_chain(const std::vector<DenseLayer>& layers) {
  if (layers.empty()) fail(ErrorCode::DimensionMismatch, "network needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].b.size() != layers[i].W.rows()) {
      fail(ErrorCode::DimensionMismatch, "bias size does not match layer width");
    }
    if (i > 0 && layers[i].W.cols() != layers[i - 1].W.rows()) {
      fail(ErrorCode::DimensionMismatch, "consecutive layer dimensions do not chain");
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers, double output_scale) : layers_(std::move(layers)) {
  check_chain(layers_);
  set_output_scale(output_scale);
}

void Mlp::set_output_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorCode::InvalidArgument, "output_scale must be > 0");
  }
  output_scale_ = scale;
  ++generation_;
}

Mlp Mlp::init(const LayerSpec& spec, std::uint64_t seed) {
  if (spec.dims.size() < 2 || spec.activations.size() != spec.dims.size() - 1) {
    fail(ErrorCode::InvalidArgument, "layer spec needs dims.size() - 1 activations");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < spec.dims.size(); ++i) {
    const int fan_in = spec.dims[i];
    const int fan_out = spec.dims[i + 1];
    if (fan_in < 1 || fan_out < 1) fail(ErrorCode::InvalidArgument, "layer sizes must be >= 1");
    const Activation act = spec.activations[i];
    const double limit = act == Activation::Relu ? std::sqrt(6.0 / fan_in)
                                                 : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.act = act;
    layer.W.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.W(r, c) = dist(rng);
    }
    layer.b = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers), spec.output_scale);
}

int Mlp::input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().W.cols()); }

int Mlp::output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().W.rows()); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

LayerSpec Mlp::spec() const {
  LayerSpec s;
  s.output_scale = output_scale_;
  if (layers_.empty()) return s;
  s.dims.push_back(input_dim());
  for (const auto& l : layers_) {
    s.dims.push_back(static_cast<int>(l.W.rows()));
    s.activations.push_back(l.act);
  }
  return s;
}

Eigen::VectorXd Mlp::predict(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) fail(ErrorCode::DimensionMismatch, "input length does not match network");
  Eigen::VectorXd h = x;
  for (const auto& l : layers_) {
    Eigen::VectorXd z = l.W * h + l.b;
    apply_activation(l.act, z);
    h = std::move(z);
  }
  return scaled_output(layers_, output_scale_, h);
}

void Mlp::blend_toward(const Mlp& src, double tau) {
  if (src.layers_.size() != layers_.size()) fail(ErrorCode::DimensionMismatch, "blend: shape mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (src.layers_[i].W.rows() != layers_[i].W.rows() || src.layers_[i].W.cols() != layers_[i].W.cols()) {
      fail(ErrorCode::DimensionMismatch, "blend: shape mismatch");
    }
    layers_[i].W = tau * src.layers_[i].W + (1.0 - tau) * layers_[i].W;
    layers_[i].b = tau * src.layers_[i].b + (1.0 - tau) * layers_[i].b;
  }
  ++generation_;
}

Eigen::VectorXd Mlp::flat_parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
      flat.segment(k, l.W.rows()) = l.W.col(c);
      k += l.W.rows();
    }
    flat.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  return flat;
}

void Mlp::set_flat_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    fail(ErrorCode::DimensionMismatch, "flat parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
      l.W.col(c) = flat.segment(k, l.W.rows());
      k += l.W.rows();
    }
    l.b = flat.segment(k, l.b.size());
    k += l.b.size();
  }
  ++generation_;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.output_scale_ != b.output_scale_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.act != y.act || x.W.rows() != y.W.rows() || x.W.cols() != y.W.cols()) return false;
    if (x.W != y.W || x.b != y.b) return false;
  }
  return true;
}

Eigen::VectorXd Gradients::flat() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < dW.size(); ++i) n += dW[i].size() + db[i].size();
  Eigen::VectorXd out(n);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < dW.size(); ++i) {
    for (Eigen::Index c = 0; c < dW[i].cols(); ++c) {
      out.segment(k, dW[i].rows()) = dW[i].col(c);
      k += dW[i].rows();
    }
    out.segment(k, db[i].size()) = db[i];
    k += db[i].size();
  }
  return out;
}

ForwardCache forward(const Mlp& net, const Eigen::MatrixXd& batch) {
  if (batch.rows() != net.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "forward: input has " + std::to_string(batch.rows()) +
                                           " rows, network expects " + std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  cache.net = &net;
  cache.generation = net.generation();
  const auto& layers = net.layers();
  cache.inputs.reserve(layers.size());
  cache.pre.reserve(layers.size());
  Eigen::MatrixXd h = batch;
  for (const auto& l : layers) {
    Eigen::MatrixXd z = l.W * h;
    z.colwise() += l.b;
    cache.inputs.push_back(std::move(h));
    cache.pre.push_back(z);
    apply_activation(l.act, z);
    h = std::move(z);
  }
  cache.output = scaled_output(layers, net.output_scale(), h);
  return cache;
}

Gradients backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& upstream) {
  if (cache.net != &net || cache.generation != net.generation()) {
    fail(ErrorCode::StaleCache, "backward: cache does not belong to the current network state");
  }
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    fail(ErrorCode::DimensionMismatch, "backward: upstream shape does not match output");
  }
  const auto& layers = net.layers();
  const std::size_t L = layers.size();
  Gradients g;
  g.dW.resize(L);
  g.db.resize(L);

  Eigen::MatrixXd delta = net.output_scale() * upstream;
  for (std::size_t idx = L; idx-- > 0;) {
    scale_by_derivative(layers[idx].act, cache.pre[idx], delta);
    g.dW[idx].noalias() = delta * cache.inputs[idx].transpose();
    g.db[idx] = delta.rowwise().sum();
    Eigen::MatrixXd next = layers[idx].W.transpose() * delta;
    delta = std::move(next);
  }
  g.input_gradient = std::move(delta);
  return g;
}

AdamState AdamState::for_network(const Mlp& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (const auto& l : net.layers()) {
    s.mW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    s.vW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    s.vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
  return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.mutable_layers();
  if (grads.dW.size() != layers.size() || state.mW.size() != layers.size()) {
    fail(ErrorCode::DimensionMismatch, "adam_step: gradient/optimizer shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double step = state.lr * std::sqrt(c2) / c1;
  // Equivalent to lr * m_hat / (sqrt(v_hat) + eps) with eps rescaled.
  const double eps = state.eps * std::sqrt(c2);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.dW[i].rows() != layers[i].W.rows() || grads.dW[i].cols() != layers[i].W.cols()) {
      fail(ErrorCode::DimensionMismatch, "adam_step: gradient shape mismatch");
    }
    state.mW[i] = state.beta1 * state.mW[i] + (1.0 - state.beta1) * grads.dW[i];
    state.vW[i] = state.beta2 * state.vW[i] + (1.0 - state.beta2) * grads.dW[i].cwiseAbs2();
    state.mb[i] = state.beta1 * state.mb[i] + (1.0 - state.beta1) * grads.db[i];
    state.vb[i] = state.beta2 * state.vb[i] + (1.0 - state.beta2) * grads.db[i].cwiseAbs2();
    layers[i].W.array() -= step * state.mW[i].array() / (state.vW[i].array().sqrt() + eps);
    layers[i].b.array() -= step * state.mb[i].array() / (state.vb[i].array().sqrt() + eps);
  }
}

double mean_squared_error(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  if (inputs.cols() == 0) fail(ErrorCode::EmptyDataset, "mean_squared_error: empty dataset");
  constexpr Eigen::Index kChunk = 4096;
  double total = 0.0;
  for (Eigen::Index start = 0; start < inputs.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, inputs.cols() - start);
    const ForwardCache cache = forward(net, inputs.middleCols(start, n));
    total += (cache.output - targets.middleCols(start, n)).squaredNorm();
  }
  return total / static_cast<double>(inputs.cols());
}

TrainingHistory train_supervised(Mlp& net, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& targets, const SupervisedOptions& options) {
  const Eigen::Index n = inputs.cols();
  if (n == 0) fail(ErrorCode::EmptyDataset, "train_supervised: empty dataset");
  if (inputs.rows() != net.input_dim() || targets.rows() != net.output_dim() || targets.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "train_supervised: dataset does not match network");
  }
  if (options.batch_size < 1 || options.epochs < 0) {
    fail(ErrorCode::InvalidArgument, "train_supervised: bad batch size or epochs");
  }

  TrainingHistory history;
  history.initial_loss = mean_squared_error(net, inputs, targets);

  std::mt19937_64 rng(options.seed);
  AdamState adam = AdamState::for_network(net, options.lr);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd xb, yb;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(options.batch_size, n - start);
      xb.resize(inputs.rows(), m);
      yb.resize(targets.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j) {
        xb.col(j) = inputs.col(order[start + j]);
        yb.col(j) = targets.col(order[start + j]);
      }
      const ForwardCache cache = forward(net, xb);
      const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(m)) * (cache.output - yb);
      adam_step(net, backward(net, cache, upstream), adam);
    }
    history.epoch_loss.push_back(mean_squared_error(net, inputs, targets));
  }
  return history;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
  out.push_back('\n');
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& token, const std::string& origin) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    fail(ErrorCode::CorruptFile, origin + ": bad number `" + token + "`");
  }
  return v;
}

}  // namespace

std::string serialize_mlp(const Mlp& net) {
  const LayerSpec s = net.spec();
  std::string out = "mlp v1 ";
  for (std::size_t i = 0; i < s.dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s.dims[i]);
  }
  out += ' ';
  for (std::size_t i = 0; i < s.activations.size(); ++i) {
    if (i) out += ',';
    out += to_string(s.activations[i]);
  }
  out += ' ';
  append_number(out, net.output_scale());
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) append_number(out, l.W(r, c));
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) append_number(out, l.b[r]);
  }
  return out;
}

Mlp deserialize_mlp(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string magic, version, dims_s, acts_s, scale_s;
  if (!(in >> magic >> version >> dims_s >> acts_s >> scale_s) || magic != "mlp" || version != "v1") {
    fail(ErrorCode::CorruptFile, origin + ": missing `mlp v1` header");
  }
  LayerSpec spec;
  for (const auto& d : split(dims_s, ',')) {
    const double v = parse_number(d, origin);
    if (v < 1 || v != std::floor(v)) fail(ErrorCode::CorruptFile, origin + ": bad layer size");
    spec.dims.push_back(static_cast<int>(v));
  }
  try {
    for (const auto& a : split(acts_s, ',')) spec.activations.push_back(parse_activation(a));
  } catch (const Error& e) {
    fail(ErrorCode::CorruptFile, origin + ": " + e.what());
  }
  if (spec.dims.size() < 2 || spec.activations.size() != spec.dims.size() - 1) {
    fail(ErrorCode::CorruptFile, origin + ": header dims/activations disagree");
  }
  const double scale = parse_number(scale_s, origin);

  std::vector<DenseLayer> layers;
  std::string token;
  const auto next = [&]() {
    if (!(in >> token)) fail(ErrorCode::CorruptFile, origin + ": truncated weight data");
    return parse_number(token, origin);
  };
  for (std::size_t i = 0; i + 1 < spec.dims.size(); ++i) {
    DenseLayer l;
    l.act = spec.activations[i];
    l.W.resize(spec.dims[i + 1], spec.dims[i]);
    l.b.resize(spec.dims[i + 1]);
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = next();
    }
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b[r] = next();
    layers.push_back(std::move(l));
  }
  if (in >> token) fail(ErrorCode::CorruptFile, origin + ": trailing data after weights");
  try {
    return Mlp(std::move(layers), scale);
  } catch (const Error& e) {
    fail(ErrorCode::CorruptFile, origin + ": " + e.what());
  }
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << serialize_mlp(net);
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open weight file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_mlp(buffer.str(), path.string());
}

}  // namespace rlmpc
