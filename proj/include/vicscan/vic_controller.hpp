#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "vicscan/qp_solver.hpp"

namespace vicscan {

/// Diagonal Cartesian impedance over the three translational axes.
struct ImpedanceGains {
  Vec3 inertia = Vec3::Ones();    // Lambda diag, kg
  Vec3 damping = Vec3::Zero();    // D diag, N·s/m
  Vec3 stiffness = Vec3::Zero();  // K diag, N/m
};

/// Energy-tank state. Tank energy T = ½·x_t².
struct TankState {
  double x_t = std::sqrt(2.0);  // T(0) = 1 J
  double t_min = 0.05;          // J
  double t_max = 2.0;           // J
  double eta = -0.5;            // W, maximum extraction power (<= 0)

  double energy() const { return 0.5 * x_t * x_t; }
  int sigma() const { return energy() >= t_max ? 0 : 1; }
  void validate() const;
};

enum class ControlMode { vs_cf, vs_vf, cs, cf };

ControlMode mode_from_string(const std::string& s);
const char* to_string(ControlMode m);

/// Strategy configuration (per-axis weights as diagonals).
struct StrategyConfig {
  ControlMode mode = ControlMode::vs_cf;
  double f_ref = 4.0;         // N, VS-CF target / CF reference
  double eps_max = 0.006;     // m, VS-CF penetration cap
  double eps_d = 0.004;       // m, VS-VF desired penetration
  double f_min_const = 0.0;   // N, lower force window edge
  double f_max = 15.0;        // N, upper force window edge
  Vec3 q_weight = Vec3::Ones();
  Vec3 r_weight = Vec3::Constant(1e-6);
  Vec3 k_min = Vec3::Constant(100.0);
  Vec3 k_max = Vec3::Constant(1000.0);
  double dt = 0.002;          // s, control period

  void validate() const;
};

/// Per-cycle controller inputs.
struct CycleState {
  Vec3 x_tilde = Vec3::Zero();    // Cartesian error x - x_d
  Vec3 xd_tilde = Vec3::Zero();   // its rate
  Vec3 xdd_tilde = Vec3::Zero();  // its acceleration
  double surface = 0.0;           // map height at (x, y)
  Vec2 surface_gradient = Vec2::Zero();
  double map_kappa = 0.0;
  double map_lambda = 0.0;
  double beta = 1.35;
  Vec3 scan_direction = Vec3::UnitX();
};

/// Model interaction wrench of the rendered impedance:
/// Lambda·xdd + D·xd + K·x (affine in the stiffness diagonal).
Vec3 interaction_force(const ImpedanceGains& g, const CycleState& c);

/// Penetration rate seen by the probe: surface slope carried along the
/// lateral velocity minus the vertical probe velocity. Flat surface
/// reduces to -zd_ee.
double penetration_rate(const CycleState& c, const Vec3& v_ee);

/// Tissue force needed to reach a given penetration (posterior-mean
/// parameters), floored at zero:
///   kappa·eps^beta + lambda·eps_dot·eps^beta.
double force_bound_from_penetration(double kappa, double lambda, double beta,
                                    double eps_bound, double eps_dot);

/// Critically-damped-style damping design: D = 2·zeta·sqrt(K·Lambda).
Vec3 damping_design(const Vec3& stiffness, const Vec3& inertia, double zeta);

/// Force window on the z axis for the current strategy and cycle.
/// VS-CF: desired force is the constant reference and the window is capped
/// by the penetration-derived bound at eps_max; VS-VF: desired force is the
/// penetration-derived value at eps_d inside the constant window.
struct ForceTargets {
  double f_desired_z = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};
ForceTargets force_targets(const StrategyConfig& cfg, const CycleState& c,
                           double eps_dot);

/// Builds the per-cycle stiffness QP: decision variable is the stiffness
/// diagonal. Objective ½‖F(K)-F_d‖²_Q + ½‖K-K_min‖²_R; constraints are the
/// stiffness box, the z force window, the tank-energy row and the power row.
/// Only the z axis carries force-window rows; the x/y entries are left
/// unbounded.
QpProblem assemble_qp(const StrategyConfig& cfg, const CycleState& c,
                      const TankState& tank, const Vec3& inertia,
                      const Vec3& damping, double t_prev, double eps_dot);

/// Explicit-Euler tank update with the storage switch sigma and the
/// variable-stiffness port w = -(K - K_min)·x_tilde (active above T_min).
/// Throws NumericalError when the tank state collapses below 1e-6.
TankState tank_step(const TankState& tank, const Vec3& stiffness,
                    const Vec3& k_min, const Vec3& damping,
                    const CycleState& c, double dt);

enum class FallbackReason { none, tank_floor, qp_infeasible, qp_max_iter };

struct CycleReport {
  QpStatus qp_status = QpStatus::optimal;
  FallbackReason fallback = FallbackReason::none;
  std::vector<int> active_set;
  double tank_energy = 0.0;  // after the step
  double tank_power = 0.0;   // (T_k - T_{k-1}) / dt
  Vec3 f_model = Vec3::Zero();
  double f_desired_z = 0.0;
  double f_window_lo = 0.0;
  double f_window_hi = 0.0;
};

/// Variable-impedance controller: assembles and solves the stiffness QP,
/// applies the fallback policy (stiffness pinned at K_min when the tank is
/// at its floor or the QP fails), redesigns the damping and steps the tank.
/// One instance per control loop (holds the QP warm start and rendered
/// damping); not thread-safe across instances sharing state.
class VicController {
 public:
  VicController(StrategyConfig cfg, TankState tank, Vec3 inertia,
                double zeta = 0.707);

  /// Runs one control cycle; returns the gains to render next interval.
  std::pair<ImpedanceGains, CycleReport> cycle(const CycleState& c,
                                               const Vec3& v_ee);

  const TankState& tank() const { return tank_; }
  const StrategyConfig& config() const { return cfg_; }
  const Vec3& rendered_damping() const { return damping_; }

  /// When set, every failing (non-optimal) QP is dumped to
  /// `<prefix><cycle>.txt` for offline reproduction.
  void set_dump_prefix(std::string prefix) { dump_prefix_ = std::move(prefix); }

 private:
  StrategyConfig cfg_;
  TankState tank_;
  Vec3 inertia_;
  double zeta_;
  Vec3 damping_;
  QpSolver solver_;
  std::string dump_prefix_;
  long cycle_count_ = 0;
};

/// Controller configuration file (JSON, `format: 1`), mirroring
/// StrategyConfig field-for-field plus the tank block, inertia and zeta.
struct ControllerConfig {
  StrategyConfig strategy;
  TankState tank;
  Vec3 inertia = Vec3::Ones();
  double zeta = 0.707;
  Vec3 cs_stiffness = Vec3::Constant(1000.0);  // CS baseline
  double cf_kp = 0.3;                          // CF force PD gains
  double cf_kd = 0.01;
  Vec3 cf_xy_stiffness = Vec3::Constant(300.0);

  static ControllerConfig load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

}  // namespace vicscan
