#include "vicscan/body_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace vicscan {

BodyMap::MapPoint BodyMap::query(double x, double y) const {
  MapPoint p;
  p.surface = grid_.height(x, y);
  p.surface_gradient = grid_.gradient(x, y);
  const GprPrediction k = kappa_.predict(x, y);
  const GprPrediction l = lambda_.predict(x, y);
  p.kappa = std::max(0.0, k.mean);
  p.lambda = std::max(0.0, l.mean);
  p.kappa_variance = k.variance;
  p.lambda_variance = l.variance;
  return p;
}

BodyMap build_body_map(const std::vector<PointEstimate>& survey,
                       const MapSettings& settings) {
  std::vector<ScatterPoint> height_pts;
  std::vector<Vec2> inputs;
  std::vector<double> kappas, lambdas;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const PointEstimate& p : survey) {
    if (p.flag != kSurveyOk && p.flag != kSurveyLambdaUnidentifiable) continue;
    height_pts.push_back({p.x, p.y, p.surface_z});
    inputs.emplace_back(p.x, p.y);
    kappas.push_back(p.fit.params.kappa);
    lambdas.push_back(p.fit.lambda_unidentifiable ? 0.0 : p.fit.params.lambda);
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  if (inputs.empty())
    throw PreconditionError("build_body_map: every survey node is flagged");

  const int nx =
      std::max(2, static_cast<int>(std::lround((x_hi - x_lo) /
                                               settings.grid_spacing)) + 1);
  const int ny =
      std::max(2, static_cast<int>(std::lround((y_hi - y_lo) /
                                               settings.grid_spacing)) + 1);
  HeightGrid grid = fit_grid(height_pts, linspace(x_lo, x_hi, nx),
                             linspace(y_lo, y_hi, ny), settings.smoothness);

  auto default_hp = [&](const std::vector<double>& targets) {
    double m = 0.0, v = 0.0;
    for (double t : targets) m += t;
    m /= targets.size();
    for (double t : targets) v += (t - m) * (t - m);
    v = targets.size() > 1 ? v / (targets.size() - 1) : 1.0;
    if (v <= 0.0) v = 1.0;
    return GprHyperparams{v, 2.0 * settings.gpr_spacing,
                          2.0 * settings.gpr_spacing, 0.01 * v};
  };
  GprModel kappa_gpr =
      settings.auto_hyperparams
          ? GprModel::fit_auto(inputs, kappas, settings.gpr_spacing)
          : GprModel::fit(inputs, kappas, default_hp(kappas));
  GprModel lambda_gpr =
      settings.auto_hyperparams
          ? GprModel::fit_auto(inputs, lambdas, settings.gpr_spacing)
          : GprModel::fit(inputs, lambdas, default_hp(lambdas));

  double beta = 1.35;
  for (const PointEstimate& p : survey) {
    if (p.flag == kSurveyOk || p.flag == kSurveyLambdaUnidentifiable) {
      beta = p.fit.params.beta;
      break;
    }
  }
  return BodyMap(std::move(grid), std::move(kappa_gpr), std::move(lambda_gpr),
                 beta);
}

namespace {

using nlohmann::json;

json gpr_to_json(const GprModel& m) {
  json j;
  const GprHyperparams& hp = m.hyperparams();
  j["signal_variance"] = hp.signal_variance;
  j["length_scale"] = {hp.length_x, hp.length_y};
  j["noise_variance"] = hp.noise_variance;
  json tx = json::array(), ty = json::array();
  for (const Vec2& p : m.inputs()) tx.push_back({p.x(), p.y()});
  for (double v : m.targets()) ty.push_back(v);
  j["train_x"] = std::move(tx);
  j["train_y"] = std::move(ty);
  return j;
}

GprModel gpr_from_json(const json& j) {
  GprHyperparams hp;
  hp.signal_variance = j.at("signal_variance").get<double>();
  hp.length_x = j.at("length_scale")[0].get<double>();
  hp.length_y = j.at("length_scale")[1].get<double>();
  hp.noise_variance = j.at("noise_variance").get<double>();
  std::vector<Vec2> inputs;
  std::vector<double> targets;
  for (const auto& p : j.at("train_x"))
    inputs.emplace_back(p[0].get<double>(), p[1].get<double>());
  for (const auto& v : j.at("train_y")) targets.push_back(v.get<double>());
  return GprModel::fit(inputs, targets, hp);
}

}  // namespace

void BodyMap::save_json(const std::string& path,
                        const std::string& grid_path) const {
  grid_.save_csv(grid_path);
  json j;
  j["format"] = 1;
  j["beta"] = beta_;
  j["grid_path"] = grid_path;
  j["kappa_gpr"] = gpr_to_json(kappa_);
  j["lambda_gpr"] = gpr_to_json(lambda_);
  std::ofstream out(path);
  if (!out) throw ConfigError("bodymap: cannot write " + path);
  out << j.dump(2) << '\n';
}

BodyMap BodyMap::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("bodymap: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("bodymap: invalid JSON in " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != 1)
    throw ConfigError("bodymap.format: expected 1");
  HeightGrid grid = HeightGrid::load_csv(j.at("grid_path").get<std::string>());
  GprModel kappa = gpr_from_json(j.at("kappa_gpr"));
  GprModel lambda = gpr_from_json(j.at("lambda_gpr"));
  return BodyMap(std::move(grid), std::move(kappa), std::move(lambda),
                 j.at("beta").get<double>());
}

}  // namespace vicscan
