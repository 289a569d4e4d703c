#include "core/plant.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <unsupported/Eigen/MatrixFunctions>

#include "core/config.hpp"
#include "core/error.hpp"

namespace rlmpc {

namespace {

constexpr const char* kRawKeys[] = {"Rm", "kt", "km", "mr", "r", "br", "mp", "pendulum_length", "bp"};

double* raw_field(PendulumParams& p, const std::string& key) {
  if (key == "Rm") return &p.Rm;
  if (key == "kt") return &p.kt;
  if (key == "km") return &p.km;
  if (key == "mr") return &p.mr;
  if (key == "r") return &p.r;
  if (key == "br") return &p.br;
  if (key == "mp") return &p.mp;
  if (key == "bp") return &p.bp;
  return nullptr;
}

void check_raw(const PendulumParams& p) {
  const auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
      fail(ErrorCode::InvalidArgument, std::string("pendulum parameter ") + name + " must be > 0");
    }
  };
  const auto non_negative = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorCode::InvalidArgument, std::string("pendulum parameter ") + name + " must be >= 0");
    }
  };
  positive(p.Rm, "Rm");
  positive(p.kt, "kt");
  non_negative(p.km, "km");
  positive(p.mr, "mr");
  positive(p.r, "r");
  non_negative(p.br, "br");
  positive(p.mp, "mp");
  positive(p.l, "l");
  non_negative(p.bp, "bp");
  positive(p.g, "g");
}

}  // namespace

PendulumParams PendulumParams::qube_servo2() { return derive_inertias(PendulumParams{}); }

PendulumParams derive_inertias(const PendulumParams& raw) {
  check_raw(raw);
  PendulumParams p = raw;
  p.Jr = p.mr * p.r * p.r / 3.0;
  const double length = 2.0 * p.l;
  p.Jp = p.mp * length * length / 3.0;
  const double coupling = p.mp * p.l * p.r;
  p.Jt = p.Jp * p.Jr - coupling * coupling;
  if (!(p.Jt > 0.0)) {
    fail(ErrorCode::NonPositiveJt, "derived Jt = Jp*Jr - mp^2 l^2 r^2 is not positive");
  }
  return p;
}

void validate(const PendulumParams& p) {
  check_raw(p);
  if (!(p.Jr > 0.0) || !(p.Jp > 0.0)) {
    fail(ErrorCode::InvalidArgument, "pendulum inertias must be > 0 (call derive_inertias)");
  }
  const double coupling = p.mp * p.l * p.r;
  const double jt = p.Jp * p.Jr - coupling * coupling;
  if (!(p.Jt > 0.0) || std::abs(jt - p.Jt) > 1e-12 * std::abs(p.Jp * p.Jr)) {
    fail(ErrorCode::NonPositiveJt, "Jt inconsistent with Jp, Jr or not positive");
  }
}

PendulumParams load_pendulum_params(const KeyValueFile& file, const std::string& prefix) {
  PendulumParams p;
  for (const char* key : kRawKeys) {
    const std::string name = prefix + key;
    const double v = file.get_double(name);
    if (std::string(key) == "pendulum_length") {
      p.l = v / 2.0;
    } else {
      *raw_field(p, key) = v;
    }
  }
  try {
    return derive_inertias(p);
  } catch (const Error& e) {
    fail(ErrorCode::Config, file.origin() + ": " + e.what());
  }
}

PendulumParams load_pendulum_params(const std::filesystem::path& path) {
  return load_pendulum_params(KeyValueFile::load(path));
}

void save_pendulum_params(const PendulumParams& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  out << "Rm = " << p.Rm << "\nkt = " << p.kt << "\nkm = " << p.km << "\nmr = " << p.mr
      << "\nr = " << p.r << "\nbr = " << p.br << "\nmp = " << p.mp
      << "\npendulum_length = " << 2.0 * p.l << "\nbp = " << p.bp << "\n";
}

State::State(double theta, double alpha, double theta_dot, double alpha_dot)
    : State(Eigen::Vector4d(theta, alpha, theta_dot, alpha_dot)) {}

State::State(const Eigen::Vector4d& v) : v_(v) {
  if (!v_.allFinite()) fail(ErrorCode::InvalidArgument, "state has non-finite entries");
}

Eigen::Vector4d nonlinear_derivative(const PendulumParams& p, const Eigen::Vector4d& x, double u) {
  if (!(std::abs(u) <= kPlantVoltageLimit + 1e-9)) {
    fail(ErrorCode::InvalidArgument, "input voltage outside the +-15 V plant limit");
  }
  const double alpha = x[1];
  const double theta_dot = x[2];
  const double alpha_dot = x[3];

  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  const double s2 = std::sin(2.0 * alpha);
  const double coupling = p.mp * p.l * p.r;

  const double inertia = p.Jr + p.Jp * s * s;
  const double torque = p.km / p.Rm * (u - p.km * theta_dot);
  const double arm_centripetal =
      p.coriolis == ArmCoriolis::SinAlpha ? coupling * s * alpha_dot * alpha_dot
                                          : coupling * alpha_dot * alpha_dot;

  // [ M           -mplr cos a ] [θ̈]   [rhs_arm ]
  // [ -mplr cos a  Jp         ] [α̈] = [rhs_pend]
  const double rhs_arm = -p.Jp * theta_dot * alpha_dot * s2 - arm_centripetal - p.br * theta_dot + torque;
  const double rhs_pend = 0.5 * p.Jp * theta_dot * theta_dot * s2 + p.mp * p.g * p.l * s - p.bp * alpha_dot;

  const double off = coupling * c;
  const double det = inertia * p.Jp - off * off;
  if (!(std::abs(det) > 1e-12 * inertia * p.Jp)) {
    fail(ErrorCode::SingularMassMatrix, "acceleration system is singular");
  }
  const double theta_ddot = (p.Jp * rhs_arm + off * rhs_pend) / det;
  const double alpha_ddot = (off * rhs_arm + inertia * rhs_pend) / det;
  return {theta_dot, alpha_dot, theta_ddot, alpha_ddot};
}

State rk4_step(const PendulumParams& p, const State& x, double u, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "rk4_step: dt must be > 0");
  const Eigen::Vector4d& x0 = x.vec();
  const Eigen::Vector4d k1 = nonlinear_derivative(p, x0, u);
  const Eigen::Vector4d k2 = nonlinear_derivative(p, x0 + 0.5 * dt * k1, u);
  const Eigen::Vector4d k3 = nonlinear_derivative(p, x0 + 0.5 * dt * k2, u);
  const Eigen::Vector4d k4 = nonlinear_derivative(p, x0 + dt * k3, u);
  return State(x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

State simulate_interval(const PendulumParams& p, const State& x, double u, double Ts, int substeps) {
  if (substeps < 1) fail(ErrorCode::InvalidArgument, "simulate_interval: substeps must be >= 1");
  const double dt = Ts / substeps;
  State out = x;
  for (int i = 0; i < substeps; ++i) out = rk4_step(p, out, u, dt);
  return out;
}

double mechanical_energy(const PendulumParams& p, const Eigen::Vector4d& x) {
  const double s = std::sin(x[1]);
  const double c = std::cos(x[1]);
  const double inertia = p.Jr + p.Jp * s * s;
  const double coupling = p.mp * p.l * p.r;
  const double kinetic = 0.5 * inertia * x[2] * x[2] + 0.5 * p.Jp * x[3] * x[3] - coupling * c * x[2] * x[3];
  return kinetic + p.mp * p.g * p.l * c;
}

ContinuousModel linearize(const PendulumParams& p) {
  validate(p);
  const double jt = p.Jt;
  const double mplr = p.mp * p.l * p.r;
  const double km2_rm = p.km * p.km / p.Rm;

  ContinuousModel m;
  m.As.setZero();
  m.As(0, 2) = 1.0;
  m.As(1, 3) = 1.0;
  m.As(2, 1) = p.mp * p.mp * p.l * p.l * p.r * p.g / jt;
  m.As(2, 2) = -p.Jp * p.br / jt - km2_rm * p.Jp / jt;
  m.As(2, 3) = -mplr * p.bp / jt;
  m.As(3, 1) = p.Jr * p.mp * p.g * p.l / jt;
  m.As(3, 2) = -mplr * p.br / jt - km2_rm * mplr / jt;
  m.As(3, 3) = -p.Jr * p.bp / jt;

  m.Bs.setZero();
  m.Bs(2) = p.km * p.Jp / (p.Rm * jt);
  m.Bs(3) = p.km * mplr / (p.Rm * jt);
  return m;
}

DiscreteModel discretize(const ContinuousModel& c, double Ts) {
  if (!(Ts > 0.0)) fail(ErrorCode::InvalidArgument, "discretize: Ts must be > 0");
  // exp([[As, Bs], [0, 0]] Ts) = [[A, B], [0, 1]]
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  m.topLeftCorner<4, 4>() = c.As;
  m.topRightCorner<4, 1>() = c.Bs;
  const Eigen::Matrix<double, 5, 5> phi = (m * Ts).exp();

  DiscreteModel d;
  d.A = phi.topLeftCorner<4, 4>();
  d.B = phi.topRightCorner<4, 1>();
  d.Ts = Ts;
  if (!d.A.allFinite() || !d.B.allFinite()) {
    fail(ErrorCode::InvalidArgument, "discretize produced non-finite matrices");
  }
  return d;
}

bool PerturbationSpec::is_identity() const {
  for (const auto& [key, f] : factors) {
    if (f != 1.0) return false;
  }
  for (const auto& [key, o] : offsets) {
    if (o != 0.0) return false;
  }
  return true;
}

PerturbationSpec PerturbationSpec::default_mismatch() {
  PerturbationSpec spec;
  spec.factors = {{"br", 5.0}, {"bp", 5.0}, {"mp", 1.1}};
  return spec;
}

PendulumParams perturb(const PendulumParams& p, const PerturbationSpec& spec) {
  PendulumParams out = p;
  const auto apply = [&](const std::string& key, auto&& op) {
    if (key == "pendulum_length") {
      out.l = op(2.0 * out.l) / 2.0;
      return;
    }
    double* field = raw_field(out, key);
    if (field == nullptr) {
      fail(ErrorCode::InvalidPerturbation, "unknown or derived parameter in perturbation: " + key);
    }
    *field = op(*field);
  };
  for (const auto& [key, factor] : spec.factors) {
    apply(key, [f = factor](double v) { return v * f; });
  }
  for (const auto& [key, offset] : spec.offsets) {
    apply(key, [o = offset](double v) { return v + o; });
  }
  try {
    return derive_inertias(out);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidPerturbation, std::string("perturbed parameters invalid: ") + e.what());
  }
}

PerturbationSpec load_perturbation(const KeyValueFile& file, const std::string& prefix) {
  PerturbationSpec spec;
  for (const std::string& key : file.keys_with_prefix(prefix)) {
    const std::string full = prefix + key;
    constexpr std::string_view kOffsetSuffix = "_offset";
    if (key.size() > kOffsetSuffix.size() &&
        key.compare(key.size() - kOffsetSuffix.size(), kOffsetSuffix.size(), kOffsetSuffix) == 0) {
      spec.offsets[key.substr(0, key.size() - kOffsetSuffix.size())] = file.get_double(full);
    } else {
      spec.factors[key] = file.get_double(full);
    }
  }
  return spec;
}

}  // namespace rlmpc
