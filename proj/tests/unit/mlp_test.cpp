#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "core/error.hpp"
#include "core/mlp.hpp"
#include "support/oracles.hpp"

using namespace rlmpc;

namespace {

LayerSpec actor_spec() { return {{10, 128, 1}, {Activation::Relu, Activation::Tanh}, 12.0}; }
LayerSpec critic_spec() { return {{11, 128, 1}, {Activation::Relu, Activation::Linear}, 1.0}; }
LayerSpec deep_spec() { return {{5, 16, 8, 3}, {Activation::Tanh, Activation::Relu, Activation::Linear}, 1.0}; }

// init leaves biases at zero; tests want every parameter exercised.
Mlp random_net(const LayerSpec& spec, std::uint64_t seed) {
  Mlp net = Mlp::init(spec, seed);
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (auto& l : net.mutable_layers()) {
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = d(rng);
  }
  return net;
}

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

std::vector<oracle::NaiveLayer> to_naive(const Mlp& net) {
  std::vector<oracle::NaiveLayer> out;
  for (const DenseLayer& l : net.layers()) {
    oracle::NaiveLayer n;
    n.W.assign(static_cast<std::size_t>(l.W.rows()), std::vector<double>(static_cast<std::size_t>(l.W.cols())));
    for (Eigen::Index r = 0; r < l.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) n.W[r][c] = l.W(r, c);
    }
    n.b.assign(l.b.data(), l.b.data() + l.b.size());
    n.act = l.act == Activation::Relu ? 0 : l.act == Activation::Tanh ? 1 : 2;
    out.push_back(std::move(n));
  }
  return out;
}

double weighted_output(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) {
  return upstream.dot(net.predict(x));
}

}  // namespace

TEST(Mlp, InitIsDeterministicAndSized) {
  const Mlp a = Mlp::init(actor_spec(), 3);
  const Mlp b = Mlp::init(actor_spec(), 3);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == Mlp::init(actor_spec(), 4));
  EXPECT_EQ(a.parameter_count(), 1537u);
  EXPECT_EQ(a.input_dim(), 10);
  EXPECT_EQ(a.output_dim(), 1);
}

TEST(Mlp, InitRespectsHeAndXavierLimits) {
  const Mlp net = Mlp::init(actor_spec(), 9);
  EXPECT_LE(net.layers()[0].W.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 10.0));
  EXPECT_LE(net.layers()[1].W.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 129.0));
  EXPECT_TRUE(net.layers()[0].b.isZero(0.0));
}

TEST(Mlp, RejectsBadShapes) {
  DenseLayer a{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4), Activation::Relu};
  DenseLayer b{Eigen::MatrixXd::Zero(1, 5), Eigen::VectorXd::Zero(1), Activation::Linear};
  EXPECT_THROW(Mlp({a, b}, 1.0), Error);
  DenseLayer c{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(2), Activation::Linear};
  EXPECT_THROW(Mlp({a, c}, 1.0), Error);
  EXPECT_THROW(Mlp::init({{3, 1}, {Activation::Linear}, 0.0}, 1), Error);
  const Mlp net = Mlp::init(actor_spec(), 1);
  try {
    net.predict(Eigen::VectorXd::Zero(9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Mlp, ZeroNetworkOutputsZero) {
  Mlp net = Mlp::init(actor_spec(), 1);
  net.set_flat_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count())));
  std::mt19937_64 rng(2);
  EXPECT_EQ(net.predict_scalar(random_vec(10, rng)), 0.0);
}

TEST(Mlp, ForwardMatchesNaiveLoop) {
  std::mt19937_64 rng(11);
  for (const LayerSpec& spec : {actor_spec(), critic_spec(), deep_spec()}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Mlp net = random_net(spec, 100 + static_cast<std::uint64_t>(trial));
      const Eigen::VectorXd x = random_vec(spec.dims.front(), rng, 2.0);
      const Eigen::VectorXd y = net.predict(x);
      const std::vector<double> ref =
          oracle::naive_forward(to_naive(net), net.output_scale(), std::vector<double>(x.data(), x.data() + x.size()));
      ASSERT_EQ(static_cast<std::size_t>(y.size()), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[static_cast<Eigen::Index>(i)], ref[i], 1e-12);
    }
  }
}

TEST(Mlp, BatchForwardMatchesSingle) {
  std::mt19937_64 rng(12);
  const Mlp net = random_net(critic_spec(), 5);
  Eigen::MatrixXd batch(11, 7);
  for (int c = 0; c < 7; ++c) batch.col(c) = random_vec(11, rng);
  const ForwardCache cache = forward(net, batch);
  for (int c = 0; c < 7; ++c) EXPECT_NEAR(cache.output(0, c), net.predict_scalar(batch.col(c)), 1e-12);
}

TEST(Mlp, TanhOutputIsStrictlyBounded) {
  Mlp net = random_net(actor_spec(), 4);
  for (auto& l : net.mutable_layers()) l.W *= 20.0;
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) EXPECT_LT(std::abs(net.predict_scalar(random_vec(10, rng, 50.0))), 12.0);
}

TEST(Mlp, ForwardIsPure) {
  const Mlp net = random_net(deep_spec(), 6);
  std::mt19937_64 rng(14);
  const Eigen::VectorXd x = random_vec(5, rng);
  const Eigen::VectorXd first = net.predict(x);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(net.predict(x) == first);
}

TEST(Mlp, ZeroUpstreamGivesZeroGradients) {
  const Mlp net = random_net(actor_spec(), 7);
  std::mt19937_64 rng(15);
  const ForwardCache cache = forward(net, random_vec(10, rng));
  const Gradients g = backward(net, cache, Eigen::MatrixXd::Zero(1, 1));
  EXPECT_TRUE(g.flat().isZero(0.0));
  EXPECT_TRUE(g.input_gradient.isZero(0.0));
}

TEST(Mlp, LinearLayerGradientIsOuterProduct) {
  std::mt19937_64 rng(16);
  const Mlp net = random_net({{4, 3}, {Activation::Linear}, 1.0}, 8);
  const Eigen::VectorXd x = random_vec(4, rng);
  const Eigen::VectorXd up = random_vec(3, rng);
  const Gradients g = backward(net, forward(net, x), up);
  EXPECT_LT((g.dW[0] - up * x.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((g.db[0] - up).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((g.input_gradient - net.layers()[0].W.transpose() * up).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  // Central differences at h = 1e-6 carry about 1e-9 of rounding error on
  // outputs of order 10, so components below 1e-4 are compared against that
  // floor instead of their own magnitude.
  constexpr double kFdFloor = 1e-4;
  std::mt19937_64 rng(17);
  const LayerSpec specs[] = {actor_spec(), critic_spec(), deep_spec()};
  for (int trial = 0; trial < 50; ++trial) {
    const LayerSpec& spec = specs[trial % 3];
    const Mlp net = random_net(spec, 200 + static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd x = random_vec(spec.dims.front(), rng);
    const Eigen::VectorXd up = random_vec(spec.dims.back(), rng);
    const Gradients g = backward(net, forward(net, x), up);

    const Eigen::VectorXd p = net.flat_parameters();
    const Eigen::VectorXd fd = oracle::gradient(
        [&](const Eigen::VectorXd& q) {
          Mlp copy = net;
          copy.set_flat_parameters(q);
          return weighted_output(copy, x, up);
        },
        p, 1e-6);
    EXPECT_LE(oracle::max_rel_err(g.flat(), fd, kFdFloor), 1e-4) << "trial " << trial;

    const Eigen::VectorXd fd_in =
        oracle::gradient([&](const Eigen::VectorXd& xi) { return weighted_output(net, xi, up); }, x, 1e-6);
    EXPECT_LE(oracle::max_rel_err(g.input_gradient, fd_in, kFdFloor), 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, BackwardRejectsStaleCache) {
  Mlp net = random_net(actor_spec(), 9);
  std::mt19937_64 rng(18);
  const ForwardCache cache = forward(net, random_vec(10, rng));
  net.mutable_layers()[0].b[0] += 1.0;
  try {
    backward(net, cache, Eigen::MatrixXd::Ones(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StaleCache);
  }
  const Mlp other = random_net(actor_spec(), 9);
  EXPECT_THROW(backward(other, cache, Eigen::MatrixXd::Ones(1, 1)), Error);
}

TEST(Mlp, AdamZeroGradientLeavesParameters) {
  Mlp net = random_net(deep_spec(), 10);
  const Mlp before = net;
  AdamState st = AdamState::for_network(net, 1e-2);
  std::mt19937_64 rng(19);
  Gradients g = backward(net, forward(net, random_vec(5, rng)), Eigen::MatrixXd::Zero(3, 1));
  for (int i = 0; i < 5; ++i) {
    adam_step(net, g, st);
    EXPECT_EQ(st.step, i + 1);
  }
  EXPECT_TRUE(net == before);
}

TEST(Mlp, AdamConvergesOnScalarQuadratic) {
  // loss = 0.5 (w - 3)^2 for a single linear weight
  DenseLayer l{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), Activation::Linear};
  Mlp net({l}, 1.0);
  AdamState st = AdamState::for_network(net, 1e-2);
  int steps = 0;
  for (; steps < 2000; ++steps) {
    const double w = net.layers()[0].W(0, 0);
    if (std::abs(w - 3.0) < 1e-4) break;
    Gradients g;
    g.dW = {Eigen::MatrixXd::Constant(1, 1, w - 3.0)};
    g.db = {Eigen::VectorXd::Zero(1)};
    adam_step(net, g, st);
  }
  EXPECT_LT(std::abs(net.layers()[0].W(0, 0) - 3.0), 1e-4);
  EXPECT_LE(steps, 2000);
}

TEST(Mlp, SupervisedLearnsZeroAndLinearTargets) {
  std::mt19937_64 rng(20);
  const int n = 512;
  Eigen::MatrixXd X(4, n);
  for (int c = 0; c < n; ++c) X.col(c) = random_vec(4, rng);
  const Eigen::RowVector4d w(0.5, -1.0, 0.25, 2.0);

  Mlp zero = Mlp::init({{4, 16, 1}, {Activation::Relu, Activation::Linear}, 1.0}, 1);
  SupervisedOptions opt;
  opt.epochs = 100;
  opt.batch_size = 32;
  opt.lr = 1e-2;
  const TrainingHistory hz = train_supervised(zero, X, Eigen::MatrixXd::Zero(1, n), opt);
  EXPECT_LT(hz.epoch_loss.back(), 1e-4);
  EXPECT_LT(std::abs(zero.predict_scalar(Eigen::Vector4d::Zero())), 1e-2);

  Mlp lin = Mlp::init({{4, 1}, {Activation::Linear}, 1.0}, 2);
  opt.epochs = 300;
  const TrainingHistory hl = train_supervised(lin, X, w * X, opt);
  EXPECT_LE(hl.epoch_loss.back(), 1e-4);
  EXPECT_LE(hl.epoch_loss.back(), hl.initial_loss);
  EXPECT_EQ(hl.epoch_loss.size(), 300u);
}

TEST(Mlp, SupervisedRejectsEmptyDataset) {
  Mlp net = Mlp::init({{4, 1}, {Activation::Linear}, 1.0}, 2);
  try {
    train_supervised(net, Eigen::MatrixXd(4, 0), Eigen::MatrixXd(1, 0), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(Mlp, SupervisedIsDeterministic) {
  std::mt19937_64 rng(21);
  Eigen::MatrixXd X(3, 100);
  for (int c = 0; c < 100; ++c) X.col(c) = random_vec(3, rng);
  const Eigen::MatrixXd Y = X.colwise().squaredNorm();
  SupervisedOptions opt;
  opt.epochs = 5;
  opt.seed = 42;
  Mlp a = Mlp::init({{3, 8, 1}, {Activation::Relu, Activation::Linear}, 1.0}, 3);
  Mlp b = a;
  train_supervised(a, X, Y, opt);
  train_supervised(b, X, Y, opt);
  EXPECT_TRUE(a == b);
}

TEST(Mlp, SerializationRoundTripIsBitIdentical) {
  const Mlp net = random_net(actor_spec(), 22);
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "rlmpc_mlp_test";
  std::filesystem::create_directories(dir);
  save_mlp(net, dir / "net.txt");
  const Mlp back = load_mlp(dir / "net.txt");
  EXPECT_TRUE(back == net);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_vec(10, rng);
    EXPECT_EQ(back.predict_scalar(x), net.predict_scalar(x));
  }
  std::ifstream in(dir / "net.txt");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("mlp v1", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Mlp, CorruptOrMissingFilesAreRejected) {
  const std::string good = serialize_mlp(Mlp::init({{2, 2, 1}, {Activation::Relu, Activation::Tanh}, 3.0}, 1));
  EXPECT_TRUE(deserialize_mlp(good) == Mlp::init({{2, 2, 1}, {Activation::Relu, Activation::Tanh}, 3.0}, 1));
  auto code_of = [](const std::string& text) {
    try {
      deserialize_mlp(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code_of("mlp v2" + good.substr(6)), ErrorCode::CorruptFile);
  EXPECT_EQ(code_of(good.substr(0, good.size() / 2)), ErrorCode::CorruptFile);
  EXPECT_EQ(code_of(""), ErrorCode::CorruptFile);
  try {
    load_mlp("/nonexistent/dir/net.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::Io || e.code() == ErrorCode::MissingArtifact);
  }
}

TEST(Mlp, BlendTowardInterpolates) {
  Mlp a = random_net(deep_spec(), 30);
  const Mlp b = random_net(deep_spec(), 31);
  const Eigen::VectorXd pa = a.flat_parameters();
  a.blend_toward(b, 0.25);
  EXPECT_LT((a.flat_parameters() - (0.25 * b.flat_parameters() + 0.75 * pa)).cwiseAbs().maxCoeff(), 1e-15);
  a.blend_toward(b, 1.0);
  EXPECT_TRUE(a == b);
}
