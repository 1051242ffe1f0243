// vicscan: batch pipeline for viscoelastic body mapping and passive
// variable-impedance scanning on a synthetic phantom.
//
// Stages: phantom-init -> palpate -> estimate -> map -> scan / compare.
// Exit codes: 0 success, 2 configuration or input error, 3 simulation error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "vicscan/csv.hpp"
#include "vicscan/manifest.hpp"
#include "vicscan/rng.hpp"
#include "vicscan/scan_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vicscan;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("out: cannot create directory " + dir);
}

void require_file(const std::string& path, const std::string& field) {
  if (!fs::exists(path))
    throw ConfigError(field + ": file not found: " + path);
}

std::string hash_hex(const std::string& payload) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(payload)));
  return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    std::uint64_t seed, const json& effective,
                    std::vector<std::string> inputs,
                    std::vector<std::string> outputs) {
  RunManifest man;
  man.command = command;
  man.seed = seed;
  man.effective_config_json = effective.dump();
  man.config_hash = hash_hex(man.effective_config_json);
  man.inputs = std::move(inputs);
  man.outputs = std::move(outputs);
  man.write(out_dir);
}

struct ProtocolFlags {
  PalpationProtocol proto;

  void attach(CLI::App* cmd) {
    cmd->add_option("--amplitude", proto.amplitude, "palpation amplitude [m]");
    cmd->add_option("--frequency", proto.frequency, "palpation frequency [Hz]");
    cmd->add_option("--duration", proto.duration, "palpation duration [s]");
    cmd->add_option("--rate", proto.sample_rate, "sample rate [Hz]");
    cmd->add_option("--bias", proto.contact_bias, "mean penetration [m]");
    cmd->add_option("--noise", proto.noise_sigma, "force noise sigma [N]");
  }

  json to_json() const {
    return {{"amplitude", proto.amplitude}, {"frequency", proto.frequency},
            {"duration", proto.duration},   {"sample_rate", proto.sample_rate},
            {"contact_bias", proto.contact_bias},
            {"noise_sigma", proto.noise_sigma}};
  }
};

struct PlanFlags {
  ScanPlan plan;

  void attach(CLI::App* cmd) {
    cmd->add_option("--start-x", plan.start.x(), "scan start x [m]");
    cmd->add_option("--start-y", plan.start.y(), "scan start y [m]");
    cmd->add_option("--end-x", plan.end.x(), "scan end x [m]");
    cmd->add_option("--end-y", plan.end.y(), "scan end y [m]");
    cmd->add_option("--speed", plan.speed, "lateral speed [m/s]");
    cmd->add_option("--z-offset", plan.z_offset,
                    "target depth below the start surface [m]");
    cmd->add_option("--settle", plan.settle_time, "settle time [s]");
  }

  json to_json() const {
    return {{"start", {plan.start.x(), plan.start.y()}},
            {"end", {plan.end.x(), plan.end.y()}},
            {"speed", plan.speed},
            {"z_offset", plan.z_offset},
            {"settle_time", plan.settle_time}};
  }
};

std::string record_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "point_%04d.csv", id);
  return buf;
}

// ---------------------------------------------------------------- palpate

int cmd_palpate(const std::string& phantom_path, double spacing,
                const ProtocolFlags& pf, std::uint64_t seed,
                const std::string& out) {
  require_file(phantom_path, "--phantom");
  const Phantom ph = Phantom::load_json(phantom_path);
  pf.proto.validate();
  if (spacing <= 0.0) throw ConfigError("--spacing: must be > 0");
  ensure_dir(out);
  ensure_dir(out + "/records");

  const auto& cfg = ph.config();
  CsvWriter index(out + "/points.csv", {"id", "x", "y", "surface_z", "flag"});
  std::vector<std::string> outputs = {"points.csv"};
  int id = 0;
  for (double y = cfg.y_bounds[0]; y <= cfg.y_bounds[1] + 1e-12; y += spacing) {
    for (double x = cfg.x_bounds[0]; x <= cfg.x_bounds[1] + 1e-12;
         x += spacing, ++id) {
      const std::uint64_t node_seed = mix_seed(seed, id);
      const ContactDetection det =
          detect_surface(ph, x, y, pf.proto.noise_sigma, mix_seed(node_seed, 1));
      int flag = det.detected ? kSurveyOk : kSurveyNoContact;
      index.row({static_cast<double>(id), x, y, det.surface_z,
                 static_cast<double>(flag)});
      if (!det.detected) continue;
      const ProbeRecord rec =
          generate_palpation(ph, x, y, pf.proto, mix_seed(node_seed, 2));
      save_record_csv(rec, out + "/records/" + record_name(id));
      outputs.push_back("records/" + record_name(id));
    }
  }

  json effective = {{"phantom", phantom_path},
                    {"spacing", spacing},
                    {"protocol", pf.to_json()}};
  write_manifest(out, "palpate", seed, effective, {phantom_path}, outputs);
  std::cout << "palpate: " << id << " nodes -> " << out << "\n";
  return 0;
}

// --------------------------------------------------------------- estimate

int cmd_estimate(const std::string& phantom_path, const std::string& in_dir,
                 double beta, std::uint64_t seed, const std::string& out) {
  require_file(phantom_path, "--phantom");
  require_file(in_dir + "/points.csv",
               "--in (run `vicscan palpate` first; missing points.csv)");
  const Phantom ph = Phantom::load_json(phantom_path);
  ensure_dir(out);

  const CsvTable index = read_csv(in_dir + "/points.csv");
  std::vector<PointEstimate> survey;
  for (const auto& row : index.rows) {
    PointEstimate pe;
    const int id = static_cast<int>(row[0]);
    pe.x = row[1];
    pe.y = row[2];
    pe.surface_z = row[3];
    pe.flag = static_cast<int>(row[4]);
    if (pe.flag == kSurveyOk) {
      const ProbeRecord rec =
          load_record_csv(in_dir + "/records/" + record_name(id));
      pe.fit = fit_hc(rec, pe.surface_z, beta, ph.indenter_mass());
      if (pe.fit.lambda_unidentifiable) pe.flag |= kSurveyLambdaUnidentifiable;
      if (!pe.fit.ok()) pe.flag |= kSurveyFitFailed;
    }
    survey.push_back(pe);
  }
  save_survey_csv(survey, out + "/survey.csv");

  // Model-validation table on a synthetic load/unload cycle at the
  // workspace centre: Kelvin-Voigt against Hunt-Crossley at three exponents.
  const auto& cfg = ph.config();
  const double cx = 0.5 * (cfg.x_bounds[0] + cfg.x_bounds[1]);
  const double cy = 0.5 * (cfg.y_bounds[0] + cfg.y_bounds[1]);
  const auto truth = ph.query(cx, cy);
  LoadUnloadProtocol lu;
  lu.noise_sigma = 0.05;
  const ProbeRecord cycle = generate_load_unload(
      {truth.kappa, truth.lambda, ph.beta()}, truth.surface,
      ph.indenter_mass(), lu, mix_seed(seed, 0xBE7A));
  const double r_kv = fit_kv(cycle, truth.surface, ph.indenter_mass()).residual;
  CsvWriter table(out + "/beta_table.csv",
                  {"kv", "hc_beta_1.5", "hc_beta_1.35", "hc_beta_1.1"});
  std::vector<double> residuals = {r_kv};
  for (double b : {1.5, 1.35, 1.1})
    residuals.push_back(
        fit_hc(cycle, truth.surface, b, ph.indenter_mass()).residual);
  table.row(residuals);
  std::cout << "estimate: relative residual [N]  KV " << residuals[0]
            << "  HC(1.5) " << residuals[1] << "  HC(1.35) " << residuals[2]
            << "  HC(1.1) " << residuals[3] << "\n";

  json effective = {{"phantom", phantom_path}, {"in", in_dir}, {"beta", beta}};
  write_manifest(out, "estimate", seed, effective,
                 {phantom_path, in_dir + "/points.csv"},
                 {"survey.csv", "beta_table.csv"});
  std::cout << "estimate: " << survey.size() << " nodes -> " << out << "\n";
  return 0;
}

// -------------------------------------------------------------------- map

int cmd_map(const std::string& survey_path, const MapSettings& settings,
            std::uint64_t seed, const std::string& out) {
  require_file(survey_path,
               "--survey (run `vicscan estimate` first; missing survey.csv)");
  ensure_dir(out);
  const auto survey = load_survey_csv(survey_path);
  const BodyMap map = build_body_map(survey, settings);
  map.save_json(out + "/bodymap.json", out + "/grid.csv");

  json effective = {{"survey", survey_path},
                    {"grid_spacing", settings.grid_spacing},
                    {"smoothness", settings.smoothness},
                    {"gpr_spacing", settings.gpr_spacing},
                    {"auto_hyperparams", settings.auto_hyperparams}};
  write_manifest(out, "map", seed, effective, {survey_path},
                 {"bodymap.json", "grid.csv"});
  std::cout << "map: " << survey.size() << " survey nodes -> " << out
            << "/bodymap.json\n";
  return 0;
}

// ------------------------------------------------------------------- scan

void write_plot_script(const std::string& out, const std::string& csv_name,
                       double f_ref) {
  std::ofstream gp(out + "/plots.gp");
  gp << "# gnuplot script: force, stiffness and tank energy panels\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 1200,900\n"
     << "set output 'scan.png'\n"
     << "set multiplot layout 3,1\n"
     << "set key autotitle columnhead\n"
     << "set ylabel 'F_z [N]'\n"
     << "plot '" << csv_name << "' using 1:14 with lines title 'tissue force', \\\n"
     << "     '" << csv_name << "' using 1:13 with lines title 'model force', \\\n"
     << "     " << f_ref << " with lines dashtype 2 title 'reference'\n"
     << "set ylabel 'K diag [N/m]'\n"
     << "plot '" << csv_name << "' using 1:15 with lines title 'k_x', \\\n"
     << "     '" << csv_name << "' using 1:16 with lines title 'k_y', \\\n"
     << "     '" << csv_name << "' using 1:17 with lines title 'k_z'\n"
     << "set ylabel 'tank T [J]'\n"
     << "set xlabel 't [s]'\n"
     << "plot '" << csv_name << "' using 1:21 with lines title 'tank energy'\n"
     << "unset multiplot\n";
}

json summary_to_json(const SafetySummary& s) {
  return {{"mode", s.mode},
          {"disturbed", s.disturbed},
          {"cycles", s.cycles},
          {"min_tank_energy_j", s.min_tank_energy},
          {"max_extraction_power_w", s.max_extraction_power},
          {"tank_floor_ok", s.tank_floor_ok},
          {"power_valve_ok", s.power_valve_ok},
          {"k_bounds_ok", s.k_bounds_ok},
          {"contact_loss_k_min_ok", s.contact_loss_k_min_ok},
          {"contact_loss_floored_cycles", s.contact_loss_floored_cycles},
          {"all_ok", s.all_ok()}};
}

struct ForceStats {
  double steady_mean = 0.0;
  double steady_max_abs_err = 0.0;  // vs f_ref
  double max_force = 0.0;
  double min_force = 1e300;
  double max_penetration = 0.0;
};

ForceStats force_stats(const ScanLog& log, const ScanPlan& plan, double f_ref) {
  ForceStats fs;
  double acc = 0.0;
  long n = 0;
  for (const auto& r : log.rows) {
    if (r.t < plan.settle_time + 0.5) continue;
    const double f = std::abs(r.f_tissue_z);
    fs.max_force = std::max(fs.max_force, f);
    fs.min_force = std::min(fs.min_force, f);
    fs.max_penetration = std::max(fs.max_penetration, r.penetration);
    acc += f;
    ++n;
    fs.steady_max_abs_err = std::max(fs.steady_max_abs_err, std::abs(f - f_ref));
  }
  if (n > 0) fs.steady_mean = acc / n;
  if (fs.min_force == 1e300) fs.min_force = 0.0;
  return fs;
}

void run_one_scan(const ScanConfig& cfg, const Phantom& ph, const BodyMap& map,
                  std::uint64_t seed, const std::string& out, bool disturbed) {
  ensure_dir(out);
  const ScanLog log = run_scan(cfg, ph, map, seed);
  log.save_csv(out + "/scanlog.csv");
  write_plot_script(out, "scanlog.csv", cfg.controller.strategy.f_ref);
  const SafetySummary s = summarize_safety(log, cfg.controller,
                                           cfg.controller.strategy.mode,
                                           disturbed);
  const ForceStats fstats =
      force_stats(log, cfg.plan, cfg.controller.strategy.f_ref);
  json j = summary_to_json(s);
  j["force"] = {{"steady_mean_n", fstats.steady_mean},
                {"steady_max_abs_err_n", fstats.steady_max_abs_err},
                {"max_n", fstats.max_force},
                {"min_n", fstats.min_force},
                {"max_penetration_m", fstats.max_penetration}};
  std::ofstream(out + "/summary.json") << j.dump(2) << '\n';
}

int cmd_scan(const std::string& phantom_path, const std::string& map_path,
             const std::string& mode_str, const std::string& disturb,
             const std::string& controller_path, const PlanFlags& plan_flags,
             std::uint64_t seed, const std::string& out) {
  require_file(phantom_path, "--phantom");
  require_file(map_path, "--map (run `vicscan map` first; missing bodymap)");
  const Phantom ph = Phantom::load_json(phantom_path);
  const BodyMap map = BodyMap::load_json(map_path);

  ScanConfig cfg;
  if (!controller_path.empty()) {
    require_file(controller_path, "--config");
    cfg.controller = ControllerConfig::load_json(controller_path);
  }
  cfg.controller.strategy.mode = mode_from_string(mode_str);
  cfg.plan = plan_flags.plan;
  if (disturb == "lift") {
    cfg.disturbance = Disturbance::default_lift(
        cfg.plan.settle_time + 0.3 * cfg.plan.path_time());
  } else if (disturb != "none") {
    throw ConfigError("--disturb: expected none or lift (got '" + disturb +
                      "')");
  }

  run_one_scan(cfg, ph, map, seed, out, disturb == "lift");

  json effective = {{"phantom", phantom_path}, {"map", map_path},
                    {"mode", mode_str},        {"disturb", disturb},
                    {"plan", plan_flags.to_json()},
                    {"controller", controller_path.empty() ? "<defaults>"
                                                           : controller_path}};
  write_manifest(out, "scan", seed, effective, {phantom_path, map_path},
                 {"scanlog.csv", "plots.gp", "summary.json"});
  std::cout << "scan: " << mode_str << " (" << disturb << ") -> " << out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const std::string& phantom_path, const std::string& map_path,
                const std::string& controller_path,
                const PlanFlags& plan_flags, std::uint64_t seed,
                const std::string& out) {
  require_file(phantom_path, "--phantom");
  require_file(map_path, "--map (run `vicscan map` first; missing bodymap)");
  const Phantom ph = Phantom::load_json(phantom_path);
  const BodyMap map = BodyMap::load_json(map_path);
  ensure_dir(out);

  ScanConfig base;
  if (!controller_path.empty()) {
    require_file(controller_path, "--config");
    base.controller = ControllerConfig::load_json(controller_path);
  }
  base.plan = plan_flags.plan;

  struct Run {
    ControlMode mode;
    bool lift;
    std::string dir;
  };
  std::vector<Run> runs;
  for (ControlMode m : {ControlMode::vs_cf, ControlMode::vs_vf,
                        ControlMode::cs, ControlMode::cf}) {
    for (bool lift : {false, true}) {
      runs.push_back({m, lift,
                      std::string(to_string(m)) + (lift ? "_lift" : "_nominal")});
    }
  }

  // Independent runs fan out concurrently; each writes only its own dir.
  std::vector<std::future<void>> jobs;
  for (const Run& r : runs) {
    jobs.push_back(std::async(std::launch::async, [&, r]() {
      ScanConfig cfg = base;
      cfg.controller.strategy.mode = r.mode;
      if (r.lift)
        cfg.disturbance = Disturbance::default_lift(
            cfg.plan.settle_time + 0.3 * cfg.plan.path_time());
      run_one_scan(cfg, ph, map, seed, out + "/" + r.dir, r.lift);
    }));
  }
  for (auto& j : jobs) j.get();

  json all = json::array();
  for (const Run& r : runs) {
    std::ifstream in(out + "/" + r.dir + "/summary.json");
    json j;
    in >> j;
    j["dir"] = r.dir;
    all.push_back(j);
  }

  // Comparison headline: VS-CF steady error against the CS force spread.
  double vscf_err = 0.0, cs_min = 0.0, cs_max = 0.0;
  for (const auto& j : all) {
    if (j["dir"] == "vs-cf_nominal")
      vscf_err = j["force"]["steady_max_abs_err_n"].get<double>();
    if (j["dir"] == "cs_nominal") {
      cs_min = j["force"]["min_n"].get<double>();
      cs_max = j["force"]["max_n"].get<double>();
    }
  }
  json summary = {{"runs", all},
                  {"vs_cf_steady_max_abs_err_n", vscf_err},
                  {"cs_force_min_n", cs_min},
                  {"cs_force_max_n", cs_max},
                  {"cs_force_spread_ratio", cs_min > 0 ? cs_max / cs_min : 0.0}};
  std::ofstream(out + "/comparison.json") << summary.dump(2) << '\n';

  json effective = {{"phantom", phantom_path},
                    {"map", map_path},
                    {"plan", plan_flags.to_json()},
                    {"controller", controller_path.empty() ? "<defaults>"
                                                           : controller_path}};
  write_manifest(out, "compare", seed, effective, {phantom_path, map_path},
                 {"comparison.json"});
  std::cout << "compare: 8 runs -> " << out << "/comparison.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscoelastic body mapping and passive variable-impedance "
               "scanning (synthetic phantom pipeline)"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "master seed")->capture_default_str();

  // phantom-init
  auto* sc_phantom = app.add_subcommand("phantom-init",
                                        "write the default phantom JSON");
  std::string phantom_out = "phantom.json";
  sc_phantom->add_option("-o,--out", phantom_out, "output file");

  // palpate
  auto* sc_palpate = app.add_subcommand("palpate", "survey the phantom");
  std::string palpate_phantom, palpate_out = "out_palpate";
  double spacing = 0.01;
  ProtocolFlags pf;
  sc_palpate->add_option("--phantom", palpate_phantom, "phantom JSON")
      ->required();
  sc_palpate->add_option("--spacing", spacing, "grid spacing [m]");
  sc_palpate->add_option("--out", palpate_out, "output directory");
  pf.attach(sc_palpate);

  // estimate
  auto* sc_est = app.add_subcommand("estimate", "fit per-point parameters");
  std::string est_phantom, est_in, est_out = "out_estimate";
  double beta = 1.35;
  sc_est->add_option("--phantom", est_phantom, "phantom JSON")->required();
  sc_est->add_option("--in", est_in, "palpate output directory")->required();
  sc_est->add_option("--beta", beta, "fixed Hunt-Crossley exponent");
  sc_est->add_option("--out", est_out, "output directory");

  // map
  auto* sc_map = app.add_subcommand("map", "build the viscoelastic body map");
  std::string map_survey, map_out = "out_map";
  MapSettings settings;
  bool no_auto = false;
  sc_map->add_option("--survey", map_survey, "survey.csv from estimate")
      ->required();
  sc_map->add_option("--grid-spacing", settings.grid_spacing,
                     "height grid spacing [m]");
  sc_map->add_option("--smoothness", settings.smoothness,
                     "grid regularization weight");
  sc_map->add_option("--gpr-spacing", settings.gpr_spacing,
                     "typical survey spacing for GPR priors [m]");
  sc_map->add_flag("--no-auto", no_auto, "skip hyperparameter search");
  sc_map->add_option("--out", map_out, "output directory");

  // scan
  auto* sc_scan = app.add_subcommand("scan", "run one controlled scan");
  std::string scan_phantom, scan_map, scan_mode = "vs-cf",
              scan_disturb = "none", scan_cfg, scan_out = "out_scan";
  PlanFlags plan_flags;
  sc_scan->add_option("--phantom", scan_phantom, "phantom JSON")->required();
  sc_scan->add_option("--map", scan_map, "bodymap.json")->required();
  sc_scan->add_option("--mode", scan_mode, "vs-cf | vs-vf | cs | cf");
  sc_scan->add_option("--disturb", scan_disturb, "none | lift");
  sc_scan->add_option("--config", scan_cfg, "controller JSON");
  sc_scan->add_option("--out", scan_out, "output directory");
  plan_flags.attach(sc_scan);

  // compare
  auto* sc_cmp = app.add_subcommand("compare",
                                    "run all four modes with and without "
                                    "the lift disturbance");
  std::string cmp_phantom, cmp_map, cmp_cfg, cmp_out = "out_compare";
  PlanFlags cmp_plan;
  sc_cmp->add_option("--phantom", cmp_phantom, "phantom JSON")->required();
  sc_cmp->add_option("--map", cmp_map, "bodymap.json")->required();
  sc_cmp->add_option("--config", cmp_cfg, "controller JSON");
  sc_cmp->add_option("--out", cmp_out, "output directory");
  cmp_plan.attach(sc_cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sc_phantom->parsed()) {
      Phantom::default_phantom().save_json(phantom_out);
      std::cout << "phantom-init: wrote " << phantom_out << "\n";
      return 0;
    }
    if (sc_palpate->parsed())
      return cmd_palpate(palpate_phantom, spacing, pf, seed, palpate_out);
    if (sc_est->parsed())
      return cmd_estimate(est_phantom, est_in, beta, seed, est_out);
    if (sc_map->parsed()) {
      settings.auto_hyperparams = !no_auto;
      return cmd_map(map_survey, settings, seed, map_out);
    }
    if (sc_scan->parsed())
      return cmd_scan(scan_phantom, scan_map, scan_mode, scan_disturb,
                      scan_cfg, plan_flags, seed, scan_out);
    if (sc_cmp->parsed())
      return cmd_compare(cmp_phantom, cmp_map, cmp_cfg, cmp_plan, seed,
                         cmp_out);
  } catch (const SimulationError& e) {
    std::cerr << "simulation error at cycle " << e.cycle_index << ": "
              << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
