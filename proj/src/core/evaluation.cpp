#include "core/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "core/error.hpp"

namespace rlmpc {

void save_trajectory_csv(const TrajectoryLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.precision(12);
  out << "t,theta,alpha,theta_dot,alpha_dot,u,ref\n";
  for (const TrajectoryRow& r : log.rows) {
    out << r.t << ',' << r.x[0] << ',' << r.x[1] << ',' << r.x[2] << ',' << r.x[3] << ',' << r.u << ','
        << r.ref << '\n';
  }
}

TrajectoryLog load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,theta,alpha,theta_dot,alpha_dot,u,ref") {
    fail(ErrorCode::CorruptFile, path.string() + ": unexpected trajectory header");
  }
  TrajectoryLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    TrajectoryRow r;
    row >> r.t >> r.x[0] >> r.x[1] >> r.x[2] >> r.x[3] >> r.u >> r.ref;
    if (row.fail()) fail(ErrorCode::CorruptFile, path.string() + ": malformed row");
    log.rows.push_back(r);
  }
  if (log.rows.size() >= 2) log.Ts = log.rows[1].t - log.rows[0].t;
  return log;
}

namespace {

double integrand(const TrajectoryRow& r) {
  const double e = r.x[0] - r.ref;
  return 5.0 * e * e + 5.0 * r.x[1] * r.x[1] + 0.5 * r.u * r.u;
}

}  // namespace

double average_cost(const TrajectoryLog& log, double ts, double tf) {
  const double eps = 1e-9;
  if (log.rows.size() < 2 || !(ts < tf) || ts < log.rows.front().t - eps || tf > log.rows.back().t + eps) {
    std::ostringstream os;
    os << "cost window [" << ts << ", " << tf << "] outside the logged span";
    fail(ErrorCode::WindowOutOfRange, os.str());
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) {
    const double t0 = log.rows[i].t, t1 = log.rows[i + 1].t;
    const double a = std::max(t0, ts), b = std::min(t1, tf);
    if (b <= a) continue;
    const double g0 = integrand(log.rows[i]), g1 = integrand(log.rows[i + 1]);
    auto g = [&](double t) { return g0 + (g1 - g0) * (t - t0) / (t1 - t0); };
    sum += 0.5 * (g(a) + g(b)) * (b - a);
  }
  return sum / (tf - ts);
}

TrajectoryLog run_controller(const Controller& controller, const PendulumParams& plant,
                             const RefTrajectory& traj, double duration, double Ts) {
  if (!(duration >= 0.0) || !(Ts > 0.0)) fail(ErrorCode::InvalidArgument, "invalid rollout duration");
  const long long steps = std::llround(duration / Ts);
  TrajectoryLog log;
  log.Ts = Ts;
  log.rows.reserve(static_cast<std::size_t>(steps + 1));
  State x;
  for (long long k = 0; k <= steps; ++k) {
    const double u = std::clamp(controller.act(x, traj, k), -kPlantVoltageLimit, kPlantVoltageLimit);
    log.rows.push_back({static_cast<double>(k) * Ts, x.vec(), u, traj(static_cast<double>(k) * Ts)});
    if (k < steps) x = simulate_interval(plant, x, u, Ts);
  }
  return log;
}

TimingStats benchmark_runtime(const Controller& controller, int n_steps, int warmup_steps) {
  if (n_steps < 100) fail(ErrorCode::InvalidArgument, "benchmark needs at least 100 steps");
  warmup_steps = std::max(warmup_steps, 0);
  const RefTrajectory traj = RefTrajectory::sine(1.0, 1.0);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> th(-1.0, 1.0), al(-0.1, 0.1), rate(-2.0, 2.0);
  std::uniform_int_distribution<long long> step(0, 2000);
  const int total = n_steps + warmup_steps;
  std::vector<std::pair<State, long long>> states;
  states.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const State s(th(rng), al(rng), rate(rng), rate(rng));
    states.emplace_back(s, step(rng));
  }

  volatile double sink = 0.0;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(n_steps));
  for (int i = 0; i < total; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double u = controller.act(states[i].first, traj, states[i].second);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + u;
    if (i >= warmup_steps) times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  TimingStats stats;
  stats.samples = n_steps;
  double sum = 0.0;
  for (double t : times) sum += t;
  stats.mean_s = sum / static_cast<double>(times.size());
  std::sort(times.begin(), times.end());
  auto pct = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(times.size()))) - 1;
    return times[std::min(idx, times.size() - 1)];
  };
  stats.p50_s = pct(0.50);
  stats.p99_s = pct(0.99);
  return stats;
}

int count_violations(const TrajectoryLog& log, double alpha_soft, double theta_soft) {
  int n = 0;
  for (const TrajectoryRow& r : log.rows) {
    if (std::abs(r.x[1]) >= alpha_soft || std::abs(r.x[0]) >= theta_soft) ++n;
  }
  return n;
}

std::vector<ComparisonRow> compare(const std::vector<EvalReport>& reports, const std::string& baseline_id) {
  std::map<std::string, double> base;
  for (const EvalReport& r : reports) {
    if (r.controller == baseline_id) base[r.reference] = r.j_ac;
  }
  std::vector<ComparisonRow> rows;
  for (const EvalReport& r : reports) {
    const auto it = base.find(r.reference);
    if (it == base.end()) {
      fail(ErrorCode::InvalidArgument, "no '" + baseline_id + "' report for reference " + r.reference);
    }
    ComparisonRow row;
    row.controller = r.controller;
    row.reference = r.reference;
    row.j_ac = r.j_ac;
    row.is_baseline = r.controller == baseline_id;
    row.pct_vs_baseline = row.is_baseline ? 0.0 : 100.0 * (r.j_ac - it->second) / it->second;
    rows.push_back(row);
  }
  return rows;
}

namespace {

bool only_baseline(const std::vector<ComparisonRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.is_baseline; });
}

}  // namespace

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const bool pct = !only_baseline(rows);
  out.precision(10);
  out << "controller,reference,j_ac" << (pct ? ",pct_vs_baseline" : "") << '\n';
  for (const ComparisonRow& r : rows) {
    out << r.controller << ',' << r.reference << ',' << r.j_ac;
    if (pct) out << ',' << r.pct_vs_baseline;
    out << '\n';
  }
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  const bool pct = !only_baseline(rows);
  std::size_t wc = 10, wr = 9;
  for (const ComparisonRow& r : rows) {
    wc = std::max(wc, r.controller.size());
    wr = std::max(wr, r.reference.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wc) + 2) << "controller" << std::setw(static_cast<int>(wr) + 2)
     << "reference" << std::right << std::setw(12) << "J_ac";
  if (pct) os << std::setw(14) << "% vs base";
  os << '\n';
  for (const ComparisonRow& r : rows) {
    os << std::left << std::setw(static_cast<int>(wc) + 2) << r.controller << std::setw(static_cast<int>(wr) + 2)
       << r.reference << std::right << std::setw(12) << std::fixed << std::setprecision(5) << r.j_ac;
    if (pct) {
      if (r.is_baseline) {
        os << std::setw(14) << "-";
      } else {
        os << "  " << std::setw(11) << std::showpos << std::setprecision(2) << r.pct_vs_baseline << std::noshowpos << '%';
      }
    }
    os << '\n';
  }
  return os.str();
}

void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.precision(10);
  out << "controller,plant,reference,ts,tf,j_ac,soft_violations,mean_us,p50_us,p99_us\n";
  for (const EvalReport& r : reports) {
    out << r.controller << ',' << r.plant << ',' << r.reference << ',' << r.window_start << ','
        << r.window_end << ',' << r.j_ac << ',' << r.soft_violations << ',';
    if (r.has_timing) {
      out << r.timing.mean_s * 1e6 << ',' << r.timing.p50_s * 1e6 << ',' << r.timing.p99_s * 1e6;
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

}  // namespace rlmpc
