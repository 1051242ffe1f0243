// Acceptance suite: one pass/fail line per criterion, non-zero exit when
// anything fails. Heavier end-to-end checks live here; fast unit coverage
// lives in the per-module test binaries.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "qp_oracle.hpp"
#include "vicscan/scan_sim.hpp"

using namespace vicscan;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", id,
              name, detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Phantom homogeneous_phantom(double kappa, double lambda) {
  Phantom::Config cfg;
  cfg.kappa0 = kappa;
  cfg.lambda0 = lambda;
  cfg.dome.height_amplitude = 0.0;
  cfg.dome.lambda_amplitude = 0.0;
  return Phantom(cfg);
}

// Shared expensive fixtures for the scan criteria.
struct ScanWorld {
  Phantom phantom = Phantom::default_phantom();
  std::vector<PointEstimate> survey;
  BodyMap map;

  ScanWorld()
      : survey([this] {
          PalpationProtocol proto;
          proto.noise_sigma = 0.05;
          return survey_grid(phantom, 0.01, proto, 97);
        }()),
        map(build_body_map(survey, MapSettings{0.01, 0.01, 0.01, true})) {}
};

ScanWorld* g_world = nullptr;

// ------------------------------------------------------------ criterion 1

void criterion_1_estimator_recovery() {
  const double kappa = 10000.0, lambda = 1500.0;
  const Phantom ph = homogeneous_phantom(kappa, lambda);
  const double surface = ph.query(0.05, 0.05).surface;

  PalpationProtocol clean;
  clean.noise_sigma = 0.0;
  const auto t0 = Clock::now();
  const auto rec = generate_palpation(ph, 0.05, 0.05, clean, 1);
  const FitResult fit = fit_hc(rec, surface, ph.beta(), ph.indenter_mass());
  const double per_point_s = seconds_since(t0);
  const double err_k = std::abs(fit.params.kappa - kappa) / kappa;
  const double err_l = std::abs(fit.params.lambda - lambda) / lambda;

  PalpationProtocol noisy;
  noisy.noise_sigma = 0.05;
  double ss_k = 0.0, ss_l = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto nrec = generate_palpation(ph, 0.05, 0.05, noisy, 100 + s);
    const FitResult nfit =
        fit_hc(nrec, surface, ph.beta(), ph.indenter_mass());
    ss_k += std::pow((nfit.params.kappa - kappa) / kappa, 2);
    ss_l += std::pow((nfit.params.lambda - lambda) / lambda, 2);
  }
  const double rms_k = std::sqrt(ss_k / seeds);
  const double rms_l = std::sqrt(ss_l / seeds);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "clean err k=%.2e l=%.2e; noisy rms k=%.3f%% l=%.3f%%; "
                "%.0f ms/point",
                err_k, err_l, 100 * rms_k, 100 * rms_l, 1e3 * per_point_s);
  report(1, "estimator recovery",
         err_k < 1e-6 && err_l < 1e-6 && rms_k < 0.05 && rms_l < 0.05 &&
             per_point_s < 1.0,
         buf);
}

// ------------------------------------------------------------ criterion 2

void criterion_2_model_validation_ordering() {
  ViscoelasticParams truth{10000.0, 1500.0, 1.35};
  LoadUnloadProtocol proto;  // 3 cm/s load 0.75 s, 10 s hold, 1.5 cm/s unload
  proto.noise_sigma = 0.05;
  const auto rec = generate_load_unload(truth, 0.05, 0.2, proto, 2);
  const double r_kv = fit_kv(rec, 0.05, 0.2).residual;
  const double r_11 = fit_hc(rec, 0.05, 1.1, 0.2).residual;
  const double r_135 = fit_hc(rec, 0.05, 1.35, 0.2).residual;
  const double r_15 = fit_hc(rec, 0.05, 1.5, 0.2).residual;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "KV %.4f > HC(1.1) %.4f > HC(1.5) %.4f > HC(1.35) %.4f [N]",
                r_kv, r_11, r_15, r_135);
  report(2, "residual ordering (Table)",
         r_kv > r_11 && r_11 > r_15 && r_15 > r_135, buf);
}

// ------------------------------------------------------------ criterion 3

void criterion_3_residual_vs_duration() {
  const Phantom ph = homogeneous_phantom(10000.0, 1500.0);
  PalpationProtocol proto;
  proto.noise_sigma = 0.05;
  const auto curve =
      residual_vs_duration(ph, 0.05, 0.05, proto, {0.5, 5.0}, 3, 20);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mean holdout residual %.4g N @0.5s vs %.4g N @5s",
                curve[0].second, curve[1].second);
  report(3, "residual vs duration", curve[1].second < curve[0].second, buf);
}

// ------------------------------------------------------------ criterion 4

void criterion_4_map_accuracy() {
  const ScanWorld& w = *g_world;
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> ux(0.005, 0.155), uy(0.005, 0.115);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = ux(gen), y = uy(gen);
    const double predicted = w.map.query(x, y).kappa;
    const double truth = w.phantom.query(x, y).kappa;
    worst = std::max(worst, std::abs(predicted - truth) / truth);
  }
  const double crest = w.map.query(0.06, 0.03).kappa;
  const double soft = w.map.query(0.04, 0.03).kappa;
  const double contrast = crest / soft;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst off-grid err %.2f%%; contrast %.2f",
                100 * worst, contrast);
  report(4, "map accuracy", worst < 0.10 && contrast > 1.5, buf);
}

// ------------------------------------------------------------ criterion 5

void criterion_5_qp_correctness() {
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StrategyConfig cfg;
  int checked = 0, optimal = 0;
  double worst_gap = 0.0, worst_kkt = 0.0;
  std::vector<double> times_us;

  for (int trial = 0; trial < 1000; ++trial) {
    cfg.mode = trial % 2 == 0 ? ControlMode::vs_cf : ControlMode::vs_vf;
    CycleState c;
    c.x_tilde = Vec3(0.01 * u(gen), 0.01 * u(gen), 0.02 * u(gen));
    c.xd_tilde = Vec3(0.03 * u(gen), 0.03 * u(gen), 0.05 * u(gen));
    c.xdd_tilde = Vec3(0.4 * u(gen), 0.4 * u(gen), 0.6 * u(gen));
    c.map_kappa = 5000.0 + 25000.0 * std::abs(u(gen));
    c.map_lambda = 500.0 + 2000.0 * std::abs(u(gen));
    c.surface_gradient = Vec2(0.4 * u(gen), 0.4 * u(gen));
    TankState tank;
    tank.x_t = std::sqrt(2.0 * (0.06 + std::abs(u(gen)) * 2.2));
    const Vec3 damping = damping_design(
        Vec3::Constant(100.0 + 900.0 * std::abs(u(gen))), Vec3::Ones(), 0.707);
    const QpProblem p = assemble_qp(cfg, c, tank, Vec3::Ones(), damping,
                                    tank.energy(), 0.05 * u(gen));
    ++checked;
    const auto t0 = Clock::now();
    const QpSolution s = qp_solve(p);
    times_us.push_back(1e6 * seconds_since(t0));
    const auto oracle = qp_test::qp_oracle(p);
    if (s.status == QpStatus::optimal) {
      ++optimal;
      if (!oracle.feasible) {
        worst_gap = 1e9;
        continue;
      }
      const double gap =
          std::abs(s.objective - oracle.objective) / (1.0 + std::abs(oracle.objective));
      worst_gap = std::max(worst_gap, gap);
      worst_kkt = std::max(worst_kkt, kkt_check(p, s.u).max_residual());
    } else if (s.status == QpStatus::infeasible && oracle.feasible) {
      worst_gap = 1e9;  // disagreement with the oracle
    }
  }
  std::nth_element(times_us.begin(), times_us.begin() + times_us.size() / 2,
                   times_us.end());
  const double median_us = times_us[times_us.size() / 2];
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "%d/%d optimal; worst gap %.2e; worst KKT %.2e; median %.1f us "
                "(soft target, logged)",
                optimal, checked, worst_gap, worst_kkt, median_us);
  report(5, "qp vs brute-force oracle",
         worst_gap < 1e-6 && worst_kkt < 1e-7 && optimal > 600, buf);
}

// ------------------------------------------------------------ criterion 6

void criterion_6_force_tracking() {
  const ScanWorld& w = *g_world;

  auto steady_err = [&](const ScanLog& log, double f_ref, double x_lo,
                        double x_hi) {
    double worst = 0.0;
    for (const auto& r : log.rows) {
      if (r.t < 2.5) continue;
      if (r.position.x() < x_lo || r.position.x() > x_hi) continue;
      worst = std::max(worst, std::abs(std::abs(r.f_tissue_z) - f_ref));
    }
    return worst;
  };

  ScanConfig vscf;
  vscf.controller.strategy.mode = ControlMode::vs_cf;
  const ScanLog vscf_log = run_scan(vscf, w.phantom, w.map, 11);
  const double vscf_err =
      steady_err(vscf_log, vscf.controller.strategy.f_ref, 0.075, 0.085);

  ScanConfig cf;
  cf.controller.strategy.mode = ControlMode::cf;
  const ScanLog cf_log = run_scan(cf, w.phantom, w.map, 11);
  const double cf_err =
      steady_err(cf_log, cf.controller.strategy.f_ref, 0.075, 0.085);

  ScanConfig cs;
  cs.controller.strategy.mode = ControlMode::cs;
  const ScanLog cs_log = run_scan(cs, w.phantom, w.map, 11);
  double cs_min = 1e300, cs_max = 0.0;
  for (const auto& r : cs_log.rows) {
    if (r.t < 2.5) continue;
    cs_min = std::min(cs_min, std::abs(r.f_tissue_z));
    cs_max = std::max(cs_max, std::abs(r.f_tissue_z));
  }
  const double spread = cs_max / std::max(cs_min, 1e-9);

  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "vs-cf err %.3f N; cf err %.3f N; cs spread %.1fx (%.2f..%.2f N)",
                vscf_err, cf_err, spread, cs_min, cs_max);
  report(6, "force tracking & cs spread",
         vscf_err < 0.2 && cf_err < 0.2 && spread > 3.0, buf);
}

// ------------------------------------------------------------ criterion 7

void criterion_7_penetration_guard() {
  const ScanWorld& w = *g_world;

  // VS-CF nominal: penetration stays under eps_max + 0.5 mm everywhere.
  ScanConfig vscf;
  vscf.controller.strategy.mode = ControlMode::vs_cf;
  const ScanLog a = run_scan(vscf, w.phantom, w.map, 13);
  double max_pen_nominal = 0.0;
  for (const auto& r : a.rows)
    max_pen_nominal = std::max(max_pen_nominal, r.penetration);

  // VS-CF with a binding cap: the penetration-derived force bound clips the
  // reference and the probe must respect eps_max.
  ScanConfig binding = vscf;
  binding.controller.strategy.eps_max = 0.0025;
  binding.controller.strategy.eps_d = 0.002;
  const ScanLog b = run_scan(binding, w.phantom, w.map, 13);
  double max_pen_binding = 0.0;
  for (const auto& r : b.rows)
    max_pen_binding = std::max(max_pen_binding, r.penetration);

  // VS-VF: force capped over the ribs, penetration held on soft segments.
  ScanConfig vsvf;
  vsvf.controller.strategy.mode = ControlMode::vs_vf;
  vsvf.controller.strategy.f_max = 8.0;
  vsvf.controller.strategy.f_min_const = 0.5;
  const ScanLog c = run_scan(vsvf, w.phantom, w.map, 13);
  double max_force = 0.0, worst_eps_err = 0.0;
  for (const auto& r : c.rows) {
    if (r.t < 2.5) continue;
    max_force = std::max(max_force, std::abs(r.f_tissue_z));
    const double x = r.position.x();
    const bool soft = (x > 0.075 && x < 0.085) || (x > 0.035 && x < 0.045);
    if (soft)
      worst_eps_err = std::max(
          worst_eps_err, std::abs(r.penetration -
                                  vsvf.controller.strategy.eps_d) /
                             vsvf.controller.strategy.eps_d);
  }

  char buf[224];
  std::snprintf(buf, sizeof(buf),
                "vs-cf pen %.2f mm (cap test %.2f <= %.2f mm); vs-vf F %.2f "
                "<= %.2f N, eps err %.1f%%",
                1e3 * max_pen_nominal, 1e3 * max_pen_binding,
                1e3 * (binding.controller.strategy.eps_max + 5e-4), max_force,
                vsvf.controller.strategy.f_max + 0.1, 100 * worst_eps_err);
  report(7, "penetration & force guards",
         max_pen_nominal < vscf.controller.strategy.eps_max + 5e-4 &&
             max_pen_binding < binding.controller.strategy.eps_max + 5e-4 &&
             max_force < vsvf.controller.strategy.f_max + 0.1 &&
             worst_eps_err < 0.10,
         buf);
}

// ------------------------------------------------------------ criterion 8

void criterion_8_passivity_under_disturbance() {
  const ScanWorld& w = *g_world;
  ScanConfig base;
  base.controller.tank.x_t = std::sqrt(2.0 * 0.25);  // stress the budget
  Disturbance lift;
  lift.segments.push_back({4.0, 8.0, 0.03, 0.75});

  const auto result = run_disturbance_suite(
      base, w.phantom, w.map, lift, {ControlMode::vs_cf, ControlMode::vs_vf},
      17);
  bool ok = true;
  long floored = 0;
  double min_t = 1e300, max_extract = 0.0;
  for (const auto& s : result.summaries) {
    ok = ok && s.all_ok();
    floored += s.contact_loss_floored_cycles;
    min_t = std::min(min_t, s.min_tank_energy);
    max_extract = std::max(max_extract, s.max_extraction_power);
  }
  ok = ok && floored > 0;  // the scenario must actually exercise the path
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "min T %.4f J (floor %.3f); max extraction %.3f W (|eta| %.2f); "
                "%ld floored contact-loss cycles",
                min_t, base.controller.tank.t_min, max_extract,
                std::abs(base.controller.tank.eta), floored);
  report(8, "passivity under lift", ok, buf);
}

// ------------------------------------------------------------ criterion 9

void criterion_9_determinism_convergence() {
  const ScanWorld& w = *g_world;
  ScanConfig cfg;
  cfg.controller.strategy.mode = ControlMode::vs_cf;

  const ScanLog a = run_scan(cfg, w.phantom, w.map, 23);
  const ScanLog b = run_scan(cfg, w.phantom, w.map, 23);
  bool bitwise = a.rows.size() == b.rows.size();
  for (std::size_t i = 0; bitwise && i < a.rows.size(); ++i) {
    bitwise = a.rows[i].position == b.rows[i].position &&
              a.rows[i].velocity == b.rows[i].velocity &&
              a.rows[i].f_tissue_z == b.rows[i].f_tissue_z &&
              a.rows[i].k_diag == b.rows[i].k_diag &&
              a.rows[i].tank_energy == b.rows[i].tank_energy;
  }

  ScanConfig fine = cfg;
  fine.dt_physics = 0.0005;
  const ScanLog c = run_scan(fine, w.phantom, w.map, 23);
  double diff2 = 0.0, ref2 = 0.0;
  const std::size_t n = std::min(a.rows.size(), c.rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    diff2 += std::pow(a.rows[i].f_tissue_z - c.rows[i].f_tissue_z, 2);
    ref2 += std::pow(a.rows[i].f_tissue_z, 2);
  }
  const double rel_rms = std::sqrt(diff2 / std::max(ref2, 1e-12));

  char buf[128];
  std::snprintf(buf, sizeof(buf), "bitwise=%s; step-halving force RMS %.3f%%",
                bitwise ? "yes" : "no", 100 * rel_rms);
  report(9, "determinism & convergence", bitwise && rel_rms < 0.01, buf);
}

// ----------------------------------------------------------- criterion 10

void criterion_10_end_to_end_runtime() {
  const auto t0 = Clock::now();

  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto;
  proto.noise_sigma = 0.05;
  const auto survey = survey_grid(ph, 0.015, proto, 31);  // ~10x10 grid
  const BodyMap map =
      build_body_map(survey, MapSettings{0.015, 0.01, 0.015, true});

  ScanConfig base;
  base.plan.speed = (base.plan.end - base.plan.start).norm() / 28.0;
  base.plan.settle_time = 2.0;  // 30 s of control per run
  Disturbance lift;
  lift.segments.push_back({8.0, 14.0, 0.02, 1.0});

  long total_rows = 0;
  for (ControlMode mode : {ControlMode::vs_cf, ControlMode::vs_vf,
                           ControlMode::cs, ControlMode::cf}) {
    for (bool disturbed : {false, true}) {
      ScanConfig cfg = base;
      cfg.controller.strategy.mode = mode;
      if (disturbed) cfg.disturbance = lift;
      const ScanLog log = run_scan(cfg, ph, map, 29);
      total_rows += static_cast<long>(log.rows.size());
    }
  }
  const double elapsed = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.1f s total (%ld control cycles)", elapsed,
                total_rows);
  report(10, "end-to-end runtime", elapsed < 300.0 && total_rows >= 8 * 14000,
         buf);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::printf("building survey + body map fixtures...\n");
  ScanWorld world;
  g_world = &world;
  std::printf("fixtures ready in %.1f s\n\n", seconds_since(t0));

  criterion_1_estimator_recovery();
  criterion_2_model_validation_ordering();
  criterion_3_residual_vs_duration();
  criterion_4_map_accuracy();
  criterion_5_qp_correctness();
  criterion_6_force_tracking();
  criterion_7_penetration_guard();
  criterion_8_passivity_under_disturbance();
  criterion_9_determinism_convergence();
  criterion_10_end_to_end_runtime();

  std::printf("\n%s (%d failure%s)\n",
              g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
