#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace rlmpc {

class KeyValueFile;

enum class WaveKind { Sine, Square, Sawtooth };

const char* to_string(WaveKind kind);
WaveKind parse_wave_kind(const std::string& name);

// Closed-form reference for the rotary arm angle. The pendulum angle and the
// pendulum rate always track zero.
struct RefTrajectory {
  WaveKind kind = WaveKind::Sine;
  double amplitude = 1.0;          // [rad]
  double angular_frequency = 1.0;  // [rad/s]
  double offset = 0.0;             // [rad]
  double phase = 0.0;              // [rad]

  static RefTrajectory sine(double amplitude, double angular_frequency, double phase = 0.0,
                            double offset = 0.0);
  static RefTrajectory constant(double value);

  double operator()(double t) const;
  std::string describe() const;
};

void validate(const RefTrajectory& traj);

// Reads kind, amplitude, frequency, offset, phase under `prefix`.
RefTrajectory load_reference(const KeyValueFile& file, const std::string& prefix,
                             const RefTrajectory& fallback = {});

using ReferenceFn = std::function<double(double)>;

double sample(const RefTrajectory& traj, double t);

// w[i] = f((k + i) Ts), i = 0..N-1.
std::vector<double> full_window(const ReferenceFn& f, long long k, double Ts, int N);
std::vector<double> full_window(const RefTrajectory& traj, long long k, double Ts, int N);

struct CrucialPoints {
  std::vector<double> c;  // N / (CTs/Ts) + 1 samples
  double Ts = 0.0;
  double CTs = 0.0;
  int N = 0;

  int stride() const;  // CTs / Ts
};

// Integer ratio CTs/Ts; throws IndivisibleSampling unless CTs/Ts is a
// positive integer dividing N.
int crucial_stride(double Ts, double CTs, int N);

// c[j] = f((k + j stride) Ts), j = 0..N/stride. Spans [k Ts, k Ts + N Ts].
CrucialPoints downsample(const ReferenceFn& f, long long k, double Ts, double CTs, int N);
CrucialPoints downsample(const RefTrajectory& traj, long long k, double Ts, double CTs, int N);

// Piecewise-linear reconstruction of the N-sample window from the crucial
// points; exact at every multiple of the stride.
std::vector<double> regenerate_window(const CrucialPoints& cp);

// Random training reference: sine with amplitude ~ U[0.5, 1.2] rad,
// frequency ~ U[0.5, 2] rad/s, phase ~ U[0, 2π).
struct SineFamily {
  double amplitude_min = 0.5;
  double amplitude_max = 1.2;
  double frequency_min = 0.5;
  double frequency_max = 2.0;

  RefTrajectory draw(std::mt19937_64& rng) const;
};

}  // namespace rlmpc
