#include "core/reference.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "core/config.hpp"
#include "core/error.hpp"

namespace rlmpc {

const char* to_string(WaveKind kind) {
  switch (kind) {
    case WaveKind::Sine: return "sine";
    case WaveKind::Square: return "square";
    case WaveKind::Sawtooth: return "sawtooth";
  }
  return "sine";
}

WaveKind parse_wave_kind(const std::string& name) {
  if (name == "sine") return WaveKind::Sine;
  if (name == "square") return WaveKind::Square;
  if (name == "sawtooth") return WaveKind::Sawtooth;
  fail(ErrorCode::Config, "unknown reference kind: " + name);
}

RefTrajectory RefTrajectory::sine(double amplitude, double angular_frequency, double phase,
                                  double offset) {
  RefTrajectory t;
  t.kind = WaveKind::Sine;
  t.amplitude = amplitude;
  t.angular_frequency = angular_frequency;
  t.phase = phase;
  t.offset = offset;
  return t;
}

RefTrajectory RefTrajectory::constant(double value) {
  RefTrajectory t;
  t.amplitude = 0.0;
  t.offset = value;
  return t;
}

double RefTrajectory::operator()(double t) const {
  const double arg = angular_frequency * t + phase;
  switch (kind) {
    case WaveKind::Sine:
      return offset + amplitude * std::sin(arg);
    case WaveKind::Square:
      return offset + (std::sin(arg) >= 0.0 ? amplitude : -amplitude);
    case WaveKind::Sawtooth: {
      // Rises from -A to A each period, crossing zero at arg = 0.
      const double cycles = arg / (2.0 * std::numbers::pi) + 0.5;
      return offset + amplitude * (2.0 * (cycles - std::floor(cycles)) - 1.0);
    }
  }
  return offset;
}

std::string RefTrajectory::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "(A=" << amplitude << ";w=" << angular_frequency;
  if (phase != 0.0) os << ";phi=" << phase;
  if (offset != 0.0) os << ";off=" << offset;
  os << ")";
  return os.str();
}

void validate(const RefTrajectory& traj) {
  if (!(traj.amplitude >= 0.0) || !std::isfinite(traj.amplitude)) {
    fail(ErrorCode::InvalidArgument, "reference amplitude must be >= 0");
  }
  if (!(traj.angular_frequency > 0.0) || !std::isfinite(traj.angular_frequency)) {
    fail(ErrorCode::InvalidArgument, "reference angular frequency must be > 0");
  }
  if (!std::isfinite(traj.offset) || !std::isfinite(traj.phase)) {
    fail(ErrorCode::InvalidArgument, "reference offset/phase must be finite");
  }
}

RefTrajectory load_reference(const KeyValueFile& file, const std::string& prefix,
                             const RefTrajectory& fallback) {
  RefTrajectory t = fallback;
  if (file.has(prefix + "kind")) t.kind = parse_wave_kind(file.get_string(prefix + "kind"));
  t.amplitude = file.get_double(prefix + "amplitude", t.amplitude);
  t.angular_frequency = file.get_double(prefix + "frequency", t.angular_frequency);
  t.offset = file.get_double(prefix + "offset", t.offset);
  t.phase = file.get_double(prefix + "phase", t.phase);
  try {
    validate(t);
  } catch (const Error& e) {
    fail(ErrorCode::Config, file.origin() + ": " + e.what());
  }
  return t;
}

double sample(const RefTrajectory& traj, double t) {
  if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "reference sample time must be >= 0");
  return traj(t);
}

std::vector<double> full_window(const ReferenceFn& f, long long k, double Ts, int N) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "full_window: N must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) w[i] = f(static_cast<double>(k + i) * Ts);
  return w;
}

std::vector<double> full_window(const RefTrajectory& traj, long long k, double Ts, int N) {
  return full_window([&traj](double t) { return sample(traj, t); }, k, Ts, N);
}

int crucial_stride(double Ts, double CTs, int N) {
  if (!(Ts > 0.0) || !(CTs > 0.0) || N < 1) {
    fail(ErrorCode::IndivisibleSampling, "crucial sampling needs Ts > 0, CTs > 0, N >= 1");
  }
  const double ratio = CTs / Ts;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    fail(ErrorCode::IndivisibleSampling, "CTs/Ts is not a positive integer");
  }
  const int stride = static_cast<int>(rounded);
  if (N % stride != 0) {
    fail(ErrorCode::IndivisibleSampling,
         "horizon " + std::to_string(N) + " not divisible by CTs/Ts = " + std::to_string(stride));
  }
  return stride;
}

int CrucialPoints::stride() const { return crucial_stride(Ts, CTs, N); }

CrucialPoints downsample(const ReferenceFn& f, long long k, double Ts, double CTs, int N) {
  const int stride = crucial_stride(Ts, CTs, N);
  CrucialPoints cp;
  cp.Ts = Ts;
  cp.CTs = CTs;
  cp.N = N;
  const int count = N / stride + 1;
  cp.c.resize(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    cp.c[j] = f(static_cast<double>(k + static_cast<long long>(j) * stride) * Ts);
  }
  return cp;
}

CrucialPoints downsample(const RefTrajectory& traj, long long k, double Ts, double CTs, int N) {
  return downsample([&traj](double t) { return sample(traj, t); }, k, Ts, CTs, N);
}

std::vector<double> regenerate_window(const CrucialPoints& cp) {
  const int stride = cp.stride();
  if (cp.c.size() != static_cast<std::size_t>(cp.N / stride + 1)) {
    fail(ErrorCode::DimensionMismatch, "crucial point count does not match N/(CTs/Ts)+1");
  }
  std::vector<double> w(static_cast<std::size_t>(cp.N));
  for (int i = 0; i < cp.N; ++i) {
    const int j = i / stride;
    const int offset = i % stride;
    if (offset == 0) {
      w[i] = cp.c[j];
    } else {
      const double frac = static_cast<double>(offset) / stride;
      w[i] = cp.c[j] + frac * (cp.c[j + 1] - cp.c[j]);
    }
  }
  return w;
}

RefTrajectory SineFamily::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> amp(amplitude_min, amplitude_max);
  std::uniform_real_distribution<double> freq(frequency_min, frequency_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double a = amp(rng);
  const double w = freq(rng);
  const double p = phase(rng);
  return RefTrajectory::sine(a, w, p);
}

}  // namespace rlmpc
