#include "vicscan/scan_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vicscan/csv.hpp"

namespace vicscan {

void ScanPlan::validate() const {
  if (!(speed > 0.0)) throw ConfigError("plan.speed: must be > 0");
  if (!(z_offset > 0.0)) throw ConfigError("plan.z_offset: must be > 0");
  if (settle_time < 0.0) throw ConfigError("plan.settle_time: must be >= 0");
  if ((end - start).norm() <= 0.0)
    throw ConfigError("plan.end: must differ from plan.start");
}

double Disturbance::lift(double t) const {
  double total = 0.0;
  for (const LiftSegment& s : segments) {
    if (t <= s.t_start || t >= s.t_end) continue;
    const double up_end = s.t_start + s.ramp;
    const double down_start = s.t_end - s.ramp;
    if (t < up_end) {
      total += s.height * (t - s.t_start) / s.ramp;
    } else if (t > down_start) {
      total += s.height * (s.t_end - t) / s.ramp;
    } else {
      total += s.height;
    }
  }
  return total;
}

double Disturbance::lift_rate(double t) const {
  double total = 0.0;
  for (const LiftSegment& s : segments) {
    if (t <= s.t_start || t >= s.t_end) continue;
    const double up_end = s.t_start + s.ramp;
    const double down_start = s.t_end - s.ramp;
    if (t < up_end) {
      total += s.height / s.ramp;
    } else if (t > down_start) {
      total -= s.height / s.ramp;
    }
  }
  return total;
}

void Disturbance::validate() const {
  for (const LiftSegment& s : segments) {
    if (!(s.t_end > s.t_start))
      throw ConfigError("disturbance.t_end: must exceed t_start");
    if (!(s.ramp > 0.0) || 2.0 * s.ramp > (s.t_end - s.t_start))
      throw ConfigError("disturbance.ramp: ramps must fit in the segment");
  }
}

Disturbance Disturbance::default_lift(double t_start) {
  Disturbance d;
  d.segments.push_back({t_start, t_start + 5.0, 0.02, 1.0});
  return d;
}

namespace {

// Ground-truth contact force on the probe tip (z component; the phantom
// exerts no lateral force). Out-of-workspace lateral positions see no
// tissue.
struct TissueContact {
  double force = 0.0;
  double penetration = -1.0;
};

TissueContact tissue_contact(const Phantom& ph, const Disturbance& dist,
                             const Vec3& pos, const Vec3& vel, double t) {
  TissueContact out;
  if (!ph.in_bounds(pos.x(), pos.y())) return out;
  const auto truth = ph.query(pos.x(), pos.y());
  const double surface = truth.surface + dist.lift(t);
  out.penetration = surface - pos.z();
  if (out.penetration < 0.0) return out;
  const Vec2 grad = ph.surface_gradient(pos.x(), pos.y());
  const double eps_dot = grad.x() * vel.x() + grad.y() * vel.y() +
                         dist.lift_rate(t) - vel.z();
  out.force = hc_force(ViscoelasticParams{truth.kappa, truth.lambda, ph.beta()},
                       {out.penetration, eps_dot});
  return out;
}

void check_blowup(const Phantom& ph, const Vec3& pos, long cycle) {
  const auto& cfg = ph.config();
  const double ext_x = cfg.x_bounds[1] - cfg.x_bounds[0];
  const double ext_y = cfg.y_bounds[1] - cfg.y_bounds[0];
  const double extent = std::max({ext_x, ext_y, 0.1});
  const double cx = 0.5 * (cfg.x_bounds[0] + cfg.x_bounds[1]);
  const double cy = 0.5 * (cfg.y_bounds[0] + cfg.y_bounds[1]);
  if (std::abs(pos.x() - cx) > 10.0 * extent ||
      std::abs(pos.y() - cy) > 10.0 * extent ||
      std::abs(pos.z() - cfg.surface_z) > 10.0 * extent ||
      !pos.allFinite())
    throw SimulationError("simulation blow-up: state left 10x the workspace",
                          cycle);
}

}  // namespace

PlantState step_plant(const PlantState& state, const ImpedanceGains& gains,
                      const Vec3& x_desired, const Vec3& v_desired,
                      const Phantom& ph, const Disturbance& dist,
                      double dt_phys) {
  const TissueContact tc =
      tissue_contact(ph, dist, state.position, state.velocity, state.time);
  const Vec3 f_tissue(0.0, 0.0, tc.force);
  const Vec3 x_tilde = state.position - x_desired;
  const Vec3 xd_tilde = state.velocity - v_desired;
  const Vec3 accel =
      (f_tissue - gains.damping.cwiseProduct(xd_tilde) -
       gains.stiffness.cwiseProduct(x_tilde))
          .cwiseQuotient(gains.inertia);
  PlantState next;
  next.velocity = state.velocity + dt_phys * accel;
  next.position = state.position + dt_phys * next.velocity;
  next.acceleration = accel;
  next.time = state.time + dt_phys;
  check_blowup(ph, next.position, -1);
  return next;
}

namespace {

struct TargetState {
  Vec3 x_d;
  Vec3 v_d;
};

TargetState plan_target(const ScanPlan& plan, double z_hold, double t) {
  const Vec2 dir = (plan.end - plan.start).normalized();
  const double path_t =
      std::clamp(t - plan.settle_time, 0.0, plan.path_time());
  const Vec2 xy = plan.start + dir * plan.speed * path_t;
  TargetState ts;
  ts.x_d = Vec3(xy.x(), xy.y(), z_hold);
  ts.v_d = Vec3::Zero();
  if (t > plan.settle_time && path_t < plan.path_time())
    ts.v_d.head<2>() = dir * plan.speed;
  return ts;
}

int status_code(const CycleReport& rep) {
  if (rep.fallback == FallbackReason::tank_floor) return 4;
  switch (rep.qp_status) {
    case QpStatus::optimal:
      return 0;
    case QpStatus::infeasible:
      return 1;
    case QpStatus::max_iter:
      return 2;
  }
  return 3;
}

}  // namespace

ScanLog run_scan(const ScanConfig& cfg, const Phantom& ph, const BodyMap& map,
                 std::uint64_t /*seed*/) {
  cfg.plan.validate();
  cfg.disturbance.validate();
  if (!(cfg.dt_physics > 0.0 && cfg.dt_control > 0.0))
    throw ConfigError("scan.dt: step sizes must be positive");
  const long n_sub = std::lround(cfg.dt_control / cfg.dt_physics);
  if (n_sub < 1 ||
      std::abs(n_sub * cfg.dt_physics - cfg.dt_control) > 1e-12)
    throw ConfigError("scan.dt_physics: must divide dt_control");
  if (!map.grid().inside(cfg.plan.start.x(), cfg.plan.start.y()) ||
      !map.grid().inside(cfg.plan.end.x(), cfg.plan.end.y()))
    throw PreconditionError("run_scan: plan path not covered by the map");
  if (!ph.in_bounds(cfg.plan.start.x(), cfg.plan.start.y()) ||
      !ph.in_bounds(cfg.plan.end.x(), cfg.plan.end.y()))
    throw PreconditionError("run_scan: plan path outside the phantom bounds");

  const ControlMode mode = cfg.controller.strategy.mode;
  const double z_hold =
      map.grid().height(cfg.plan.start.x(), cfg.plan.start.y()) -
      cfg.plan.z_offset;

  // Probe starts at rest on the estimated surface above the start point.
  PlantState plant;
  plant.position =
      Vec3(cfg.plan.start.x(), cfg.plan.start.y(),
           map.grid().height(cfg.plan.start.x(), cfg.plan.start.y()));

  VicController controller(cfg.controller.strategy, cfg.controller.tank,
                           cfg.controller.inertia, cfg.controller.zeta);

  ImpedanceGains gains;
  gains.inertia = cfg.controller.inertia;
  if (mode == ControlMode::cs) {
    gains.stiffness = cfg.controller.cs_stiffness;
  } else if (mode == ControlMode::cf) {
    gains.stiffness = cfg.controller.cf_xy_stiffness;
  } else {
    gains.stiffness = cfg.controller.strategy.k_min;
  }
  gains.damping =
      damping_design(gains.stiffness, gains.inertia, cfg.controller.zeta);

  const Vec2 dir2 = (cfg.plan.end - cfg.plan.start).normalized();
  const Vec3 scan_dir(dir2.x(), dir2.y(), 0.0);
  const auto& grid = map.grid();
  const double gx_lo = grid.x_nodes().front(), gx_hi = grid.x_nodes().back();
  const double gy_lo = grid.y_nodes().front(), gy_hi = grid.y_nodes().back();

  const long n_cycles =
      std::lround(cfg.plan.duration() / cfg.dt_control);
  ScanLog log;
  log.dt = cfg.dt_control;
  log.rows.reserve(n_cycles);

  double cf_prev_err = 0.0, cf_err_rate = 0.0, cf_v_cmd = 0.0;
  bool cf_started = false;
  // 10 Hz first-order filter on the CF error derivative.
  const double cf_alpha =
      cfg.dt_control / (cfg.dt_control + 1.0 / (2.0 * M_PI * 10.0));

  for (long k = 0; k < n_cycles; ++k) {
    const double t = static_cast<double>(k) * cfg.dt_control;
    const TargetState target = plan_target(cfg.plan, z_hold, t);
    const TissueContact tc = tissue_contact(ph, cfg.disturbance,
                                            plant.position, plant.velocity, t);

    ScanLogRow row;
    row.t = t;
    row.position = plant.position;
    row.velocity = plant.velocity;
    row.x_tilde = plant.position - target.x_d;
    row.f_tissue_z = tc.force;
    row.penetration = tc.penetration;
    row.contact = tc.penetration >= 0.0 ? 1 : 0;

    if (mode == ControlMode::vs_cf || mode == ControlMode::vs_vf) {
      const double qx = std::clamp(plant.position.x(), gx_lo, gx_hi);
      const double qy = std::clamp(plant.position.y(), gy_lo, gy_hi);
      const BodyMap::MapPoint mp = map.query(qx, qy);
      CycleState cstate;
      cstate.x_tilde = plant.position - target.x_d;
      cstate.xd_tilde = plant.velocity - target.v_d;
      cstate.xdd_tilde = plant.acceleration;
      cstate.surface = mp.surface;
      cstate.surface_gradient = mp.surface_gradient;
      cstate.map_kappa = mp.kappa;
      cstate.map_lambda = mp.lambda;
      cstate.beta = map.beta();
      cstate.scan_direction = scan_dir;
      auto [g, rep] = controller.cycle(cstate, plant.velocity);
      gains = g;
      row.f_model = rep.f_model;
      row.tank_energy = rep.tank_energy;
      row.tank_power = rep.tank_power;
      row.qp_status = status_code(rep);
    } else {
      row.qp_status = 3;
      row.tank_energy = cfg.controller.tank.energy();
      row.tank_power = 0.0;
      if (mode == ControlMode::cf) {
        const double f_meas = tc.force - ph.indenter_mass() *
                                             plant.acceleration.z();
        const double err = cfg.controller.strategy.f_ref - f_meas;
        if (!cf_started) {
          cf_prev_err = err;
          cf_started = true;
        }
        const double raw_rate = (err - cf_prev_err) / cfg.dt_control;
        cf_err_rate = (1.0 - cf_alpha) * cf_err_rate + cf_alpha * raw_rate;
        cf_prev_err = err;
        cf_v_cmd = -(cfg.controller.cf_kp * err +
                     cfg.controller.cf_kd * cf_err_rate);
      }
      row.f_model = gains.damping.cwiseProduct(plant.velocity - target.v_d) +
                    gains.stiffness.cwiseProduct(row.x_tilde);
      if (mode == ControlMode::cf) row.f_model.z() = tc.force;
    }
    row.k_diag = gains.stiffness;
    row.d_diag = gains.damping;
    log.rows.push_back(row);

    // Physics substeps with the gains rendered for this interval.
    for (long s = 0; s < n_sub; ++s) {
      const double ts = t + static_cast<double>(s) * cfg.dt_physics;
      const TargetState sub_target = plan_target(cfg.plan, z_hold, ts);
      try {
        if (mode == ControlMode::cf) {
          // z axis follows the commanded admittance velocity; x/y remain
          // impedance-rendered.
          PlantState tmp = plant;
          tmp.velocity.z() = 0.0;
          ImpedanceGains lateral = gains;
          lateral.stiffness.z() = 0.0;
          lateral.damping.z() = 0.0;
          PlantState next = step_plant(tmp, lateral, sub_target.x_d,
                                       sub_target.v_d, ph, cfg.disturbance,
                                       cfg.dt_physics);
          next.position.z() =
              plant.position.z() + cf_v_cmd * cfg.dt_physics;
          next.velocity.z() = cf_v_cmd;
          next.acceleration.z() = 0.0;
          plant = next;
          check_blowup(ph, plant.position, k);
        } else {
          plant = step_plant(plant, gains, sub_target.x_d, sub_target.v_d, ph,
                             cfg.disturbance, cfg.dt_physics);
        }
      } catch (const SimulationError& e) {
        throw SimulationError(e.what(), k);
      }
    }
  }
  return log;
}

SafetySummary summarize_safety(const ScanLog& log, const ControllerConfig& cc,
                               ControlMode mode, bool disturbed) {
  SafetySummary s;
  s.mode = to_string(mode);
  s.disturbed = disturbed;
  s.cycles = static_cast<long>(log.rows.size());
  const bool vs = mode == ControlMode::vs_cf || mode == ControlMode::vs_vf;
  const double tol_t = std::abs(cc.tank.eta) * log.dt;
  s.min_tank_energy = std::numeric_limits<double>::infinity();

  for (const ScanLogRow& r : log.rows) {
    s.min_tank_energy = std::min(s.min_tank_energy, r.tank_energy);
    for (int i = 0; i < 3; ++i) {
      if (vs && (r.k_diag(i) < cc.strategy.k_min(i) - 1e-9 ||
                 r.k_diag(i) > cc.strategy.k_max(i) + 1e-9))
        s.k_bounds_ok = false;
    }
    if (!vs) continue;
    s.max_extraction_power =
        std::max(s.max_extraction_power, -r.tank_power);
    if (r.tank_energy < cc.tank.t_min - tol_t) s.tank_floor_ok = false;
    if (r.qp_status == 0 && r.tank_power < cc.tank.eta - 1e-9)
      s.power_valve_ok = false;
    if (r.contact == 0 && r.qp_status == 4) {
      ++s.contact_loss_floored_cycles;
      if ((r.k_diag - cc.strategy.k_min).cwiseAbs().maxCoeff() > 1e-9)
        s.contact_loss_k_min_ok = false;
    }
  }
  if (log.rows.empty()) s.min_tank_energy = 0.0;
  return s;
}

DisturbanceSuiteResult run_disturbance_suite(
    const ScanConfig& base, const Phantom& ph, const BodyMap& map,
    const Disturbance& lift, const std::vector<ControlMode>& modes,
    std::uint64_t seed) {
  DisturbanceSuiteResult out;
  for (ControlMode mode : modes) {
    ScanConfig cfg = base;
    cfg.controller.strategy.mode = mode;
    cfg.disturbance = lift;
    ScanLog log = run_scan(cfg, ph, map, seed);
    out.summaries.push_back(
        summarize_safety(log, cfg.controller, mode, !lift.segments.empty()));
    out.logs.emplace_back(mode, std::move(log));
  }
  return out;
}

namespace {
const std::vector<std::string> kLogHeader = {
    "t",        "x",   "y",   "z",       "vx",     "vy",        "vz",
    "ex",       "ey",  "ez",  "fmx",     "fmy",    "fmz",       "f_tissue_z",
    "kx",       "ky",  "kz",  "dx",      "dy",     "dz",        "tank_T",
    "tank_Tdot", "qp_status", "eps", "contact"};
}  // namespace

void ScanLog::save_csv(const std::string& path) const {
  CsvWriter w(path, kLogHeader);
  for (const ScanLogRow& r : rows) {
    w.row({r.t,
           r.position.x(), r.position.y(), r.position.z(),
           r.velocity.x(), r.velocity.y(), r.velocity.z(),
           r.x_tilde.x(), r.x_tilde.y(), r.x_tilde.z(),
           r.f_model.x(), r.f_model.y(), r.f_model.z(),
           r.f_tissue_z,
           r.k_diag.x(), r.k_diag.y(), r.k_diag.z(),
           r.d_diag.x(), r.d_diag.y(), r.d_diag.z(),
           r.tank_energy, r.tank_power,
           static_cast<double>(r.qp_status),
           r.penetration,
           static_cast<double>(r.contact)});
  }
}

ScanLog ScanLog::load_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header != kLogHeader)
    throw ConfigError("scan log header mismatch in " + path);
  ScanLog log;
  log.rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    ScanLogRow row;
    row.t = r[0];
    row.position = Vec3(r[1], r[2], r[3]);
    row.velocity = Vec3(r[4], r[5], r[6]);
    row.x_tilde = Vec3(r[7], r[8], r[9]);
    row.f_model = Vec3(r[10], r[11], r[12]);
    row.f_tissue_z = r[13];
    row.k_diag = Vec3(r[14], r[15], r[16]);
    row.d_diag = Vec3(r[17], r[18], r[19]);
    row.tank_energy = r[20];
    row.tank_power = r[21];
    row.qp_status = static_cast<int>(r[22]);
    row.penetration = r[23];
    row.contact = static_cast<int>(r[24]);
    log.rows.push_back(row);
  }
  if (log.rows.size() >= 2) log.dt = log.rows[1].t - log.rows[0].t;
  return log;
}

}  // namespace vicscan
