#include "vicscan/vic_controller.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace vicscan {

void TankState::validate() const {
  if (!(t_min >= 0.0)) throw ConfigError("tank.t_min: must be >= 0");
  if (!(t_min < t_max)) throw ConfigError("tank.t_max: must exceed t_min");
  if (!(eta <= 0.0)) throw ConfigError("tank.eta: must be <= 0");
  if (!(x_t > 0.0)) throw ConfigError("tank.x_t: must be > 0");
}

ControlMode mode_from_string(const std::string& s) {
  if (s == "vs-cf") return ControlMode::vs_cf;
  if (s == "vs-vf") return ControlMode::vs_vf;
  if (s == "cs") return ControlMode::cs;
  if (s == "cf") return ControlMode::cf;
  throw ConfigError("mode: expected one of vs-cf, vs-vf, cs, cf (got '" + s +
                    "')");
}

const char* to_string(ControlMode m) {
  switch (m) {
    case ControlMode::vs_cf:
      return "vs-cf";
    case ControlMode::vs_vf:
      return "vs-vf";
    case ControlMode::cs:
      return "cs";
    case ControlMode::cf:
      return "cf";
  }
  return "?";
}

void StrategyConfig::validate() const {
  if (!(eps_d > 0.0 && eps_d <= eps_max))
    throw ConfigError("strategy.eps_d: must satisfy 0 < eps_d <= eps_max");
  if (!(f_min_const <= f_max))
    throw ConfigError("strategy.f_min_const: must be <= f_max");
  if (!(dt > 0.0)) throw ConfigError("strategy.dt: must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (!(q_weight(i) > 0.0))
      throw ConfigError("strategy.q: diagonal must be positive");
    if (!(r_weight(i) > 0.0))
      throw ConfigError("strategy.r: diagonal must be positive");
    if (!(k_min(i) > 0.0) || !(k_max(i) >= k_min(i)))
      throw ConfigError("strategy.k_min/k_max: need 0 < k_min <= k_max");
  }
}

Vec3 interaction_force(const ImpedanceGains& g, const CycleState& c) {
  return g.inertia.cwiseProduct(c.xdd_tilde) +
         g.damping.cwiseProduct(c.xd_tilde) +
         g.stiffness.cwiseProduct(c.x_tilde);
}

double penetration_rate(const CycleState& c, const Vec3& v_ee) {
  // Surface-height rate along the lateral motion minus the vertical rate.
  const double s_rate = c.surface_gradient.x() * v_ee.x() +
                        c.surface_gradient.y() * v_ee.y();
  return s_rate - v_ee.z();
}

double force_bound_from_penetration(double kappa, double lambda, double beta,
                                    double eps_bound, double eps_dot) {
  if (eps_bound <= 0.0) return 0.0;
  const double eb = std::pow(eps_bound, beta);
  return std::max(0.0, kappa * eb + lambda * eps_dot * eb);
}

Vec3 damping_design(const Vec3& stiffness, const Vec3& inertia, double zeta) {
  return 2.0 * zeta *
         stiffness.cwiseProduct(inertia).cwiseSqrt();
}

ForceTargets force_targets(const StrategyConfig& cfg, const CycleState& c,
                           double eps_dot) {
  ForceTargets t;
  if (cfg.mode == ControlMode::vs_cf) {
    t.f_desired_z = cfg.f_ref;
    t.window_lo = cfg.f_min_const;
    t.window_hi = std::min(
        cfg.f_max, force_bound_from_penetration(c.map_kappa, c.map_lambda,
                                                c.beta, cfg.eps_max, eps_dot));
  } else {
    t.f_desired_z = force_bound_from_penetration(
        c.map_kappa, c.map_lambda, c.beta, cfg.eps_d, eps_dot);
    t.window_lo = cfg.f_min_const;
    t.window_hi = cfg.f_max;
  }
  return t;
}

QpProblem assemble_qp(const StrategyConfig& cfg, const CycleState& c,
                      const TankState& tank, const Vec3& inertia,
                      const Vec3& damping, double t_prev, double eps_dot) {
  if (cfg.mode != ControlMode::vs_cf && cfg.mode != ControlMode::vs_vf)
    throw PreconditionError("assemble_qp: mode must be VS-CF or VS-VF");

  // F(K) = a + diag(x_tilde)·K with a the inertia+damping part.
  const Vec3 a = inertia.cwiseProduct(c.xdd_tilde) +
                 damping.cwiseProduct(c.xd_tilde);
  const Vec3 x = c.x_tilde;

  const ForceTargets targets = force_targets(cfg, c, eps_dot);
  Vec3 f_desired = Vec3::Zero();
  f_desired.z() = targets.f_desired_z;

  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(3, 3);
  p.g = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 3; ++i) {
    p.H(i, i) = x(i) * cfg.q_weight(i) * x(i) + cfg.r_weight(i);
    p.g(i) = x(i) * cfg.q_weight(i) * (a(i) - f_desired(i)) -
             cfg.r_weight(i) * cfg.k_min(i);
  }
  p.lb = cfg.k_min;
  p.ub = cfg.k_max;

  // Rows: z force window (two rows), tank-energy row, power row.
  p.A = Eigen::MatrixXd::Zero(4, 3);
  p.b = Eigen::VectorXd::Zero(4);
  p.A(0, 2) = x(2);
  p.b(0) = targets.window_hi - a(2);
  p.A(1, 2) = -x(2);
  p.b(1) = a(2) - targets.window_lo;

  const Vec3 xxd = c.x_tilde.cwiseProduct(c.xd_tilde);
  const double sigma = static_cast<double>(tank.sigma());
  const double dissipation =
      sigma * c.xd_tilde.dot(damping.cwiseProduct(c.xd_tilde));
  const double kmin_term = c.x_tilde.dot(cfg.k_min.cwiseProduct(c.xd_tilde));
  p.A.row(2) = -xxd.transpose();
  p.b(2) = dissipation - kmin_term + (t_prev - tank.t_min) / cfg.dt;
  p.A.row(3) = -xxd.transpose();
  p.b(3) = dissipation - kmin_term - tank.eta;
  return p;
}

TankState tank_step(const TankState& tank, const Vec3& stiffness,
                    const Vec3& k_min, const Vec3& damping,
                    const CycleState& c, double dt) {
  if (dt <= 0.0) throw PreconditionError("tank_step: dt must be > 0");
  if (tank.x_t <= 1e-6)
    throw NumericalError(
        "tank_step: tank state collapsed (initialize above T_min)");
  const double sigma = static_cast<double>(tank.sigma());
  Vec3 w = Vec3::Zero();
  if (tank.energy() > tank.t_min)
    w = -(stiffness - k_min).cwiseProduct(c.x_tilde);
  const double dissipation =
      c.xd_tilde.dot(damping.cwiseProduct(c.xd_tilde));
  const double xdot =
      sigma / tank.x_t * dissipation - w.dot(c.xd_tilde) / tank.x_t;
  TankState next = tank;
  next.x_t = tank.x_t + dt * xdot;
  if (next.x_t <= 1e-6)
    throw NumericalError("tank_step: tank state collapsed during update");
  return next;
}

VicController::VicController(StrategyConfig cfg, TankState tank, Vec3 inertia,
                             double zeta)
    : cfg_(std::move(cfg)), tank_(tank), inertia_(inertia), zeta_(zeta) {
  cfg_.validate();
  tank_.validate();
  for (int i = 0; i < 3; ++i) {
    if (!(inertia_(i) > 0.0))
      throw ConfigError("controller.inertia: diagonal must be positive");
  }
  damping_ = damping_design(cfg_.k_min, inertia_, zeta_);
}

std::pair<ImpedanceGains, CycleReport> VicController::cycle(
    const CycleState& c, const Vec3& v_ee) {
  ++cycle_count_;
  const double t_prev = tank_.energy();
  const double eps_dot = penetration_rate(c, v_ee);

  CycleReport rep;
  Vec3 k_applied = cfg_.k_min;

  if (t_prev < tank_.t_min) {
    rep.fallback = FallbackReason::tank_floor;
  } else {
    const QpProblem qp =
        assemble_qp(cfg_, c, tank_, inertia_, damping_, t_prev, eps_dot);
    const QpSolution sol = solver_.solve(qp);
    rep.qp_status = sol.status;
    rep.active_set = sol.active_set;
    if (sol.status == QpStatus::optimal) {
      for (int i = 0; i < 3; ++i)
        k_applied(i) = std::clamp(sol.u(i), cfg_.k_min(i), cfg_.k_max(i));
    } else {
      rep.fallback = sol.status == QpStatus::infeasible
                         ? FallbackReason::qp_infeasible
                         : FallbackReason::qp_max_iter;
      if (!dump_prefix_.empty()) {
        std::ofstream out(dump_prefix_ + std::to_string(cycle_count_) +
                          ".txt");
        dump_qp(qp, out);
      }
    }
  }

  // Tank bookkeeping uses the same damping the constraint rows saw.
  const TankState next =
      tank_step(tank_, k_applied, cfg_.k_min, damping_, c, cfg_.dt);
  rep.tank_energy = next.energy();
  rep.tank_power = (next.energy() - t_prev) / cfg_.dt;
  tank_ = next;

  ImpedanceGains gains;
  gains.inertia = inertia_;
  gains.stiffness = k_applied;
  gains.damping = damping_design(k_applied, inertia_, zeta_);
  damping_ = gains.damping;

  rep.f_model = interaction_force(gains, c);
  const ForceTargets targets = force_targets(cfg_, c, eps_dot);
  rep.f_desired_z = targets.f_desired_z;
  rep.f_window_lo = targets.window_lo;
  rep.f_window_hi = targets.window_hi;
  return {gains, rep};
}

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(field + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

ControllerConfig ControllerConfig::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("controller: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("controller: invalid JSON in " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != 1)
    throw ConfigError("controller.format: expected 1");
  ControllerConfig c;
  c.strategy.mode = mode_from_string(j.at("mode").get<std::string>());
  c.strategy.f_ref = j.value("f_ref", c.strategy.f_ref);
  c.strategy.eps_max = j.value("eps_max", c.strategy.eps_max);
  c.strategy.eps_d = j.value("eps_d", c.strategy.eps_d);
  c.strategy.f_min_const = j.value("f_min_const", c.strategy.f_min_const);
  c.strategy.f_max = j.value("f_max", c.strategy.f_max);
  if (j.contains("q")) c.strategy.q_weight = vec3_from(j["q"], "controller.q");
  if (j.contains("r")) c.strategy.r_weight = vec3_from(j["r"], "controller.r");
  if (j.contains("k_min"))
    c.strategy.k_min = vec3_from(j["k_min"], "controller.k_min");
  if (j.contains("k_max"))
    c.strategy.k_max = vec3_from(j["k_max"], "controller.k_max");
  c.strategy.dt = j.value("dt", c.strategy.dt);
  if (j.contains("tank")) {
    const auto& t = j["tank"];
    const double t0 = t.value("t0", 1.0);
    if (t0 <= 0.0) throw ConfigError("controller.tank.t0: must be > 0");
    c.tank.x_t = std::sqrt(2.0 * t0);
    c.tank.t_min = t.value("t_min", c.tank.t_min);
    c.tank.t_max = t.value("t_max", c.tank.t_max);
    c.tank.eta = t.value("eta", c.tank.eta);
  }
  if (j.contains("inertia"))
    c.inertia = vec3_from(j["inertia"], "controller.inertia");
  c.zeta = j.value("zeta", c.zeta);
  if (j.contains("cs_stiffness"))
    c.cs_stiffness = vec3_from(j["cs_stiffness"], "controller.cs_stiffness");
  c.cf_kp = j.value("cf_kp", c.cf_kp);
  c.cf_kd = j.value("cf_kd", c.cf_kd);
  if (j.contains("cf_xy_stiffness"))
    c.cf_xy_stiffness =
        vec3_from(j["cf_xy_stiffness"], "controller.cf_xy_stiffness");
  c.strategy.validate();
  c.tank.validate();
  return c;
}

void ControllerConfig::save_json(const std::string& path) const {
  json j;
  j["format"] = 1;
  j["mode"] = to_string(strategy.mode);
  j["f_ref"] = strategy.f_ref;
  j["eps_max"] = strategy.eps_max;
  j["eps_d"] = strategy.eps_d;
  j["f_min_const"] = strategy.f_min_const;
  j["f_max"] = strategy.f_max;
  j["q"] = vec3_to(strategy.q_weight);
  j["r"] = vec3_to(strategy.r_weight);
  j["k_min"] = vec3_to(strategy.k_min);
  j["k_max"] = vec3_to(strategy.k_max);
  j["dt"] = strategy.dt;
  j["tank"] = {{"t0", tank.energy()},
               {"t_min", tank.t_min},
               {"t_max", tank.t_max},
               {"eta", tank.eta}};
  j["inertia"] = vec3_to(inertia);
  j["zeta"] = zeta;
  j["cs_stiffness"] = vec3_to(cs_stiffness);
  j["cf_kp"] = cf_kp;
  j["cf_kd"] = cf_kd;
  j["cf_xy_stiffness"] = vec3_to(cf_xy_stiffness);
  std::ofstream out(path);
  if (!out) throw ConfigError("controller: cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace vicscan
