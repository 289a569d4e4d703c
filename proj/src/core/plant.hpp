#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <Eigen/Core>

namespace rlmpc {

class KeyValueFile;

// Which form of the α̇² coupling term drives the rotary-arm equation.
// AsPrinted keeps `-mp*l*r*α̇²`; SinAlpha uses the Lagrangian form
// `-mp*l*r*sin(α)*α̇²`. Both vanish at the upright linearization point.
enum class ArmCoriolis { AsPrinted, SinAlpha };

// Rotary inverted pendulum constants. Jr, Jp and Jt are derived; `kt` is
// carried for completeness but no equation of motion uses it.
struct PendulumParams {
  double Rm = 8.4;        // terminal resistance [ohm]
  double kt = 0.042;      // current-torque constant [N m / A]
  double km = 0.042;      // back-emf constant [V s / rad]
  double mr = 0.095;      // rotary arm mass [kg]
  double r = 0.085;       // rotary arm length [m]
  double br = 0.001;      // rotary arm damping [N m s / rad]
  double mp = 0.024;      // pendulum mass [kg]
  double l = 0.129 / 2.0; // pendulum half-length [m]
  double bp = 0.00005;    // pendulum damping [N m s / rad]
  double g = 9.81;        // [m / s^2]

  double Jr = 0.0;  // rotary arm inertia about the motor axis [kg m^2]
  double Jp = 0.0;  // pendulum inertia about its pivot [kg m^2]
  double Jt = 0.0;  // Jp*Jr - mp^2 l^2 r^2

  ArmCoriolis coriolis = ArmCoriolis::AsPrinted;

  // QUBE-Servo 2 nominal values with inertias derived.
  static PendulumParams qube_servo2();
};

// Thin-rod inertias about the pivots: Jr = mr r^2 / 3, Jp = mp (2l)^2 / 3.
// Throws NonPositiveJt when the coupled inertia determinant is not positive.
PendulumParams derive_inertias(const PendulumParams& raw);

// Positivity / finiteness checks on the raw constants and the derived terms.
void validate(const PendulumParams& p);

// Reads Rm, kt, km, mr, r, br, mp, pendulum_length, bp (all required) under
// `prefix`; derived fields are never read.
PendulumParams load_pendulum_params(const KeyValueFile& file, const std::string& prefix = "");
PendulumParams load_pendulum_params(const std::filesystem::path& path);
void save_pendulum_params(const PendulumParams& p, const std::filesystem::path& path);

// [theta, alpha, theta_dot, alpha_dot]; alpha is measured from upright.
class State {
 public:
  State() : v_(Eigen::Vector4d::Zero()) {}
  State(double theta, double alpha, double theta_dot, double alpha_dot);
  explicit State(const Eigen::Vector4d& v);

  double theta() const { return v_[0]; }
  double alpha() const { return v_[1]; }
  double theta_dot() const { return v_[2]; }
  double alpha_dot() const { return v_[3]; }
  double operator[](int i) const { return v_[i]; }

  const Eigen::Vector4d& vec() const { return v_; }

  friend bool operator==(const State& a, const State& b) { return a.v_ == b.v_; }

 private:
  Eigen::Vector4d v_;
};

constexpr double kPlantVoltageLimit = 15.0;

// [θ̇, α̇, θ̈, α̈] from the coupled arm/pendulum equations, solved jointly for
// the two accelerations.
Eigen::Vector4d nonlinear_derivative(const PendulumParams& p, const Eigen::Vector4d& x, double u);

// Classical RK4 with u held constant over dt.
State rk4_step(const PendulumParams& p, const State& x, double u, double dt);

// One control interval of length Ts split into `substeps` RK4 steps.
State simulate_interval(const PendulumParams& p, const State& x, double u, double Ts,
                        int substeps = 10);

// Kinetic plus potential energy; conserved by the SinAlpha form when the
// dissipative terms (br, bp, km) and the input are zero.
double mechanical_energy(const PendulumParams& p, const Eigen::Vector4d& x);

struct ContinuousModel {
  Eigen::Matrix4d As;
  Eigen::Vector4d Bs;
};

struct DiscreteModel {
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
  double Ts = 0.0;
};

// Closed-form small-angle model about the upright equilibrium.
ContinuousModel linearize(const PendulumParams& p);

// Zero-order hold: A = exp(As Ts), B = ∫ exp(As τ) Bs dτ via the augmented
// exponential exp([[As, Bs], [0, 0]] Ts).
DiscreteModel discretize(const ContinuousModel& c, double Ts);

// Multiplicative factors and additive offsets keyed by the parameter-file
// names (Rm, kt, km, mr, r, br, mp, pendulum_length, bp). Applied to the raw
// constants, after which inertias are re-derived.
struct PerturbationSpec {
  std::map<std::string, double> factors;
  std::map<std::string, double> offsets;

  bool is_identity() const;

  // br x5, bp x5, mp x1.1.
  static PerturbationSpec default_mismatch();
};

PendulumParams perturb(const PendulumParams& p, const PerturbationSpec& spec);

PerturbationSpec load_perturbation(const KeyValueFile& file, const std::string& prefix);

}  // namespace rlmpc
