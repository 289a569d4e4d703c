#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/reference.hpp"

using namespace rlmpc;

TEST(Reference, WaveShapes) {
  const RefTrajectory s = RefTrajectory::sine(1.0, 1.0);
  EXPECT_DOUBLE_EQ(s(std::numbers::pi / 2), 1.0);
  EXPECT_EQ(s(0.0), 0.0);

  RefTrajectory sq = s;
  sq.kind = WaveKind::Square;
  EXPECT_EQ(sq(0.5), 1.0);
  EXPECT_EQ(sq(4.0), -1.0);
  EXPECT_EQ(sq(0.0), 1.0);

  RefTrajectory saw = s;
  saw.kind = WaveKind::Sawtooth;
  EXPECT_NEAR(saw(0.0), 0.0, 1e-15);
  EXPECT_NEAR(saw(std::numbers::pi / 2), 0.5, 1e-12);

  EXPECT_DOUBLE_EQ(RefTrajectory::constant(0.3)(12.0), 0.3);
  EXPECT_THROW(sample(s, -0.01), Error);
}

TEST(Reference, FullWindowSamplesEveryStep) {
  const RefTrajectory s = RefTrajectory::sine(0.8, 2.0);
  const auto w = full_window(s, 7, 0.01, 50);
  ASSERT_EQ(w.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(w[i], s((7 + i) * 0.01));
}

TEST(Reference, CrucialPointsSpanHorizon) {
  const RefTrajectory s = RefTrajectory::sine(1.0, 1.0);
  const CrucialPoints cp = downsample(s, 3, 0.01, 0.1, 50);
  ASSERT_EQ(cp.c.size(), 6u);
  EXPECT_EQ(cp.stride(), 10);
  for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(cp.c[j], s((3 + 10 * j) * 0.01));
}

TEST(Reference, IndivisibleSamplingRejected) {
  try {
    crucial_stride(0.01, 0.07, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndivisibleSampling);
  }
  EXPECT_THROW(crucial_stride(0.01, 0.015, 50), Error);
  EXPECT_EQ(crucial_stride(0.01, 0.05, 50), 5);
}

TEST(Reference, RegeneratedWindowExactAtCrucialPoints) {
  std::mt19937_64 rng(3);
  const SineFamily fam;
  for (int trial = 0; trial < 20; ++trial) {
    const RefTrajectory t = fam.draw(rng);
    const long long k = trial * 13;
    const CrucialPoints cp = downsample(t, k, 0.01, 0.1, 50);
    const auto w = regenerate_window(cp);
    const auto full = full_window(t, k, 0.01, 50);
    ASSERT_EQ(w.size(), 50u);
    for (int i = 0; i < 50; i += 10) EXPECT_DOUBLE_EQ(w[i], full[i]);
    // Linear interpolation error is bounded by h^2 max|f''| / 8.
    const double bound = std::pow(0.1, 2) * t.amplitude * t.angular_frequency * t.angular_frequency / 8.0;
    for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(w[i] - full[i]), bound + 1e-12);
  }
}

TEST(Reference, ConstantSurvivesDownsampling) {
  const CrucialPoints cp = downsample(RefTrajectory::constant(0.4), 0, 0.01, 0.1, 50);
  for (double v : regenerate_window(cp)) EXPECT_DOUBLE_EQ(v, 0.4);
}

TEST(Reference, FamilyStaysInRange) {
  std::mt19937_64 rng(9);
  const SineFamily fam;
  for (int i = 0; i < 500; ++i) {
    const RefTrajectory t = fam.draw(rng);
    EXPECT_GE(t.amplitude, 0.5);
    EXPECT_LE(t.amplitude, 1.2);
    EXPECT_GE(t.angular_frequency, 0.5);
    EXPECT_LE(t.angular_frequency, 2.0);
    EXPECT_GE(t.phase, 0.0);
    EXPECT_LT(t.phase, 2 * std::numbers::pi);
  }
}

TEST(Reference, LoadFromConfig) {
  const KeyValueFile f = KeyValueFile::parse("ref.kind = square\nref.amplitude = 0.5\nref.frequency = 2\n");
  const RefTrajectory t = load_reference(f, "ref.");
  EXPECT_EQ(t.kind, WaveKind::Square);
  EXPECT_DOUBLE_EQ(t.amplitude, 0.5);
  EXPECT_DOUBLE_EQ(t.angular_frequency, 2.0);
  EXPECT_THROW(load_reference(KeyValueFile::parse("ref.frequency = -1\n"), "ref."), Error);
  EXPECT_THROW(load_reference(KeyValueFile::parse("ref.kind = triangle\n"), "ref."), Error);
}

TEST(Reference, LengthContracts) {
  for (auto [N, Ts, CTs] : {std::tuple{50, 0.01, 0.1}, {40, 0.01, 0.05}, {12, 0.02, 0.06}, {8, 0.01, 0.01}}) {
    const RefTrajectory t = RefTrajectory::sine(1.0, 1.0);
    EXPECT_EQ(full_window(t, 0, Ts, N).size(), static_cast<std::size_t>(N));
    const CrucialPoints cp = downsample(t, 0, Ts, CTs, N);
    EXPECT_EQ(static_cast<int>(cp.c.size()), N / crucial_stride(Ts, CTs, N) + 1);
    EXPECT_EQ(regenerate_window(cp).size(), static_cast<std::size_t>(N));
  }
}

TEST(Reference, BandLimitedReconstructionWithinOnePercent) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> amp(0.1, 2.0), phase(0.0, 6.28);
  for (int trial = 0; trial < 200; ++trial) {
    const double w = 2.0 * (trial % 10 + 1) / 10.0;  // w * CTs <= 0.2
    const RefTrajectory t = RefTrajectory::sine(amp(rng), w, phase(rng));
    const long long k = trial * 7;
    const auto rec = regenerate_window(downsample(t, k, 0.01, 0.1, 50));
    const auto full = full_window(t, k, 0.01, 50);
    for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(rec[i] - full[i]), 0.01 * t.amplitude);
  }
}
