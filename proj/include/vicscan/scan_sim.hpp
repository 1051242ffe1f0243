#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vicscan/body_map.hpp"
#include "vicscan/phantom.hpp"
#include "vicscan/vic_controller.hpp"

namespace vicscan {

/// Straight lateral scan: the Cartesian target moves from start to end at
/// constant speed while the z target stays at the fixed height
/// (map surface at the start point) - z_offset, i.e. "constant z under the
/// surface". settle_time holds the target at the start before moving.
struct ScanPlan {
  Vec2 start = Vec2(0.04, 0.04);
  Vec2 end = Vec2(0.148, 0.04);
  double speed = 0.01;      // m/s
  double z_offset = 0.012;  // m below the start-point surface
  double settle_time = 2.0; // s

  double path_time() const { return (end - start).norm() / speed; }
  double duration() const { return settle_time + path_time(); }
  void validate() const;
};

/// Trapezoidal surface lift: ramps from zero to `height` over `ramp`,
/// holds, ramps back down. Continuous, zero at the segment edges.
struct LiftSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double height = 0.0;  // m
  double ramp = 1.0;    // s
};

struct Disturbance {
  std::vector<LiftSegment> segments;

  double lift(double t) const;
  double lift_rate(double t) const;
  void validate() const;

  static Disturbance none() { return {}; }
  /// Default stress profile: 2 cm lift, 1 s ramps, 3 s hold.
  static Disturbance default_lift(double t_start);
};

/// One logged control cycle.
struct ScanLogRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 x_tilde = Vec3::Zero();
  Vec3 f_model = Vec3::Zero();
  double f_tissue_z = 0.0;  // ground-truth contact force
  Vec3 k_diag = Vec3::Zero();
  Vec3 d_diag = Vec3::Zero();
  double tank_energy = 0.0;
  double tank_power = 0.0;
  int qp_status = 0;  // 0 optimal, 1 infeasible, 2 max_iter, 3 n/a, 4 tank floor
  double penetration = 0.0;  // ground truth
  int contact = 0;           // exactly (penetration >= 0)
};

struct ScanLog {
  double dt = 0.0;
  std::vector<ScanLogRow> rows;

  void save_csv(const std::string& path) const;
  static ScanLog load_csv(const std::string& path);
};

/// Full run configuration for one scan.
struct ScanConfig {
  ControllerConfig controller;
  ScanPlan plan;
  Disturbance disturbance;
  double dt_control = 0.002;  // s
  double dt_physics = 0.001;  // s
};

/// Rendered-impedance plant state.
struct PlantState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  double time = 0.0;
};

/// One semi-implicit Euler physics step of the rendered impedance
///   Lambda·xdd_tilde = F_tissue - D·xd_tilde - K·x_tilde
/// with the ground-truth tissue reaction, the surface lifted per the
/// disturbance, and zero force out of contact. Throws SimulationError when
/// the state leaves 10x the workspace.
PlantState step_plant(const PlantState& state, const ImpedanceGains& gains,
                      const Vec3& x_desired, const Vec3& v_desired,
                      const Phantom& ph, const Disturbance& dist,
                      double dt_phys);

/// Closed-loop scan: control at 1/dt_control, physics at 1/dt_physics.
/// VS modes run the stiffness QP; CS renders a constant stiffness; CF runs
/// a z-axis force PD (admittance) with compliant x/y.
ScanLog run_scan(const ScanConfig& cfg, const Phantom& ph, const BodyMap& map,
                 std::uint64_t seed);

/// Safety certificates extracted from one scan log.
struct SafetySummary {
  std::string mode;
  bool disturbed = false;
  double min_tank_energy = 0.0;
  double max_extraction_power = 0.0;  // max of -dT/dt, W
  bool tank_floor_ok = true;          // T >= T_min - |eta|·dt everywhere
  bool power_valve_ok = true;         // dT/dt >= eta - 1e-9 on optimal cycles
  bool k_bounds_ok = true;            // K in [K_min, K_max] everywhere
  bool contact_loss_k_min_ok = true;  // K = K_min while floored out of contact
  long contact_loss_floored_cycles = 0;
  long cycles = 0;

  bool all_ok() const {
    return tank_floor_ok && power_valve_ok && k_bounds_ok &&
           contact_loss_k_min_ok;
  }
};

SafetySummary summarize_safety(const ScanLog& log, const ControllerConfig& cc,
                               ControlMode mode, bool disturbed);

struct DisturbanceSuiteResult {
  std::vector<std::pair<ControlMode, ScanLog>> logs;
  std::vector<SafetySummary> summaries;
};

/// Runs the lift experiment for the requested modes and certifies the tank
/// floor, the minimum-stiffness behaviour during contact loss and the
/// recontact power valve for the VS entries.
DisturbanceSuiteResult run_disturbance_suite(const ScanConfig& base,
                                             const Phantom& ph,
                                             const BodyMap& map,
                                             const Disturbance& lift,
                                             const std::vector<ControlMode>& modes,
                                             std::uint64_t seed);

}  // namespace vicscan
