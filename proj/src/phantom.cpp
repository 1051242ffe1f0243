#include "vicscan/phantom.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace vicscan {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Gaussian bump value and its gradient wrt (x, y).
struct BumpEval {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

BumpEval eval_rib_profile(const Rib& rib, double x, double y) {
  const double a = rib.orientation_deg * kDegToRad;
  const Vec2 crest_dir(std::cos(a), std::sin(a));
  const Vec2 rel(x - rib.center.x(), y - rib.center.y());
  // Perpendicular offset from the crest line.
  const double along = rel.dot(crest_dir);
  const Vec2 perp = rel - along * crest_dir;
  const double d2 = perp.squaredNorm();
  const double w2 = rib.width * rib.width;
  BumpEval out;
  out.value = std::exp(-d2 / (2.0 * w2));
  out.grad = -(out.value / w2) * perp;
  return out;
}

BumpEval eval_dome_profile(const Dome& dome, double x, double y) {
  const double dx = x - dome.center.x();
  const double dy = y - dome.center.y();
  const double sx2 = dome.sigma.x() * dome.sigma.x();
  const double sy2 = dome.sigma.y() * dome.sigma.y();
  BumpEval out;
  out.value = std::exp(-(dx * dx / (2.0 * sx2) + dy * dy / (2.0 * sy2)));
  out.grad = Vec2(-out.value * dx / sx2, -out.value * dy / sy2);
  return out;
}

}  // namespace

Phantom::Phantom(Config cfg) : cfg_(std::move(cfg)) {
  if (cfg_.x_bounds[0] >= cfg_.x_bounds[1])
    throw ConfigError("phantom.bounds.x: min must be < max");
  if (cfg_.y_bounds[0] >= cfg_.y_bounds[1])
    throw ConfigError("phantom.bounds.y: min must be < max");
  if (cfg_.kappa0 <= 0.0) throw ConfigError("phantom.base.kappa: must be > 0");
  if (cfg_.lambda0 <= 0.0)
    throw ConfigError("phantom.base.lambda: must be > 0");
  if (!(cfg_.beta >= 1.0 && cfg_.beta <= 1.5))
    throw ConfigError("phantom.base.beta: must lie in [1.0, 1.5]");
  if (cfg_.indenter_mass < 0.0)
    throw ConfigError("phantom.indenter_mass: must be >= 0");
  for (std::size_t i = 0; i < cfg_.ribs.size(); ++i) {
    if (cfg_.ribs[i].width <= 0.0)
      throw ConfigError("phantom.ribs[" + std::to_string(i) +
                        "].width: must be > 0");
  }
}

bool Phantom::in_bounds(double x, double y) const {
  return x >= cfg_.x_bounds[0] && x <= cfg_.x_bounds[1] &&
         y >= cfg_.y_bounds[0] && y <= cfg_.y_bounds[1];
}

Phantom::PointTruth Phantom::query(double x, double y) const {
  if (!in_bounds(x, y))
    throw WorkspaceError("phantom query outside workspace bounds");
  PointTruth t;
  t.surface = cfg_.surface_z;
  t.kappa = cfg_.kappa0;
  t.lambda = cfg_.lambda0;
  const BumpEval dome = eval_dome_profile(cfg_.dome, x, y);
  t.surface += cfg_.dome.height_amplitude * dome.value;
  t.kappa += cfg_.dome.kappa_amplitude * dome.value;
  t.lambda += cfg_.dome.lambda_amplitude * dome.value;
  for (const Rib& rib : cfg_.ribs) {
    const BumpEval b = eval_rib_profile(rib, x, y);
    t.surface += rib.height_amplitude * b.value;
    t.kappa += rib.kappa_amplitude * b.value;
  }
  return t;
}

Vec2 Phantom::surface_gradient(double x, double y) const {
  if (!in_bounds(x, y))
    throw WorkspaceError("phantom gradient query outside workspace bounds");
  Vec2 g = cfg_.dome.height_amplitude * eval_dome_profile(cfg_.dome, x, y).grad;
  for (const Rib& rib : cfg_.ribs)
    g += rib.height_amplitude * eval_rib_profile(rib, x, y).grad;
  return g;
}

ViscoelasticParams Phantom::params_at(double x, double y) const {
  const PointTruth t = query(x, y);
  return ViscoelasticParams{t.kappa, t.lambda, cfg_.beta};
}

Phantom Phantom::default_phantom() {
  Config cfg;
  cfg.x_bounds = {0.0, 0.16};
  cfg.y_bounds = {0.0, 0.12};
  cfg.surface_z = 0.05;
  cfg.kappa0 = 10000.0;
  cfg.lambda0 = 1500.0;
  cfg.beta = 1.35;
  cfg.indenter_mass = 0.2;
  cfg.dome = Dome{Vec2(0.08, 0.085), Vec2(0.055, 0.04), 0.004, 0.0, 300.0};
  for (int i = 0; i < 4; ++i) {
    Rib rib;
    rib.center = Vec2(0.02 + 0.04 * i, 0.06);
    rib.orientation_deg = 90.0;  // crest runs along y
    rib.width = 0.008;
    rib.kappa_amplitude = 30000.0;
    rib.height_amplitude = 0.018;
    cfg.ribs.push_back(rib);
  }
  return Phantom(cfg);
}

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key,
                      const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError(ctx + "." + key + ": missing or not a number");
  return j[key].get<double>();
}

}  // namespace

Phantom Phantom::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("phantom: cannot open file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("phantom: invalid JSON in " + path + ": " + e.what());
  }
  if (!j.contains("format") || j["format"] != 1)
    throw ConfigError("phantom.format: expected 1");
  Config cfg;
  const auto& bounds = j.at("bounds");
  cfg.x_bounds = {bounds.at("x")[0].get<double>(),
                  bounds.at("x")[1].get<double>()};
  cfg.y_bounds = {bounds.at("y")[0].get<double>(),
                  bounds.at("y")[1].get<double>()};
  const auto& base = j.at("base");
  cfg.surface_z = require_number(base, "surface_z", "phantom.base");
  cfg.kappa0 = require_number(base, "kappa", "phantom.base");
  cfg.lambda0 = require_number(base, "lambda", "phantom.base");
  cfg.beta = require_number(base, "beta", "phantom.base");
  cfg.indenter_mass = require_number(j, "indenter_mass", "phantom");
  if (j.contains("dome")) {
    const auto& d = j["dome"];
    cfg.dome.center = Vec2(d.at("center")[0], d.at("center")[1]);
    cfg.dome.sigma = Vec2(d.at("sigma")[0], d.at("sigma")[1]);
    cfg.dome.height_amplitude =
        require_number(d, "height_amplitude", "phantom.dome");
    cfg.dome.kappa_amplitude = d.value("kappa_amplitude", 0.0);
    cfg.dome.lambda_amplitude = d.value("lambda_amplitude", 0.0);
  }
  for (const auto& r : j.value("ribs", json::array())) {
    Rib rib;
    rib.center = Vec2(r.at("center")[0], r.at("center")[1]);
    rib.orientation_deg = require_number(r, "orientation_deg", "phantom.ribs");
    rib.width = require_number(r, "width", "phantom.ribs");
    rib.kappa_amplitude = require_number(r, "kappa_amplitude", "phantom.ribs");
    rib.height_amplitude =
        require_number(r, "height_amplitude", "phantom.ribs");
    cfg.ribs.push_back(rib);
  }
  return Phantom(cfg);
}

void Phantom::save_json(const std::string& path) const {
  json j;
  j["format"] = 1;
  j["bounds"]["x"] = {cfg_.x_bounds[0], cfg_.x_bounds[1]};
  j["bounds"]["y"] = {cfg_.y_bounds[0], cfg_.y_bounds[1]};
  j["base"] = {{"surface_z", cfg_.surface_z},
               {"kappa", cfg_.kappa0},
               {"lambda", cfg_.lambda0},
               {"beta", cfg_.beta}};
  j["indenter_mass"] = cfg_.indenter_mass;
  j["dome"] = {{"center", {cfg_.dome.center.x(), cfg_.dome.center.y()}},
               {"sigma", {cfg_.dome.sigma.x(), cfg_.dome.sigma.y()}},
               {"height_amplitude", cfg_.dome.height_amplitude},
               {"kappa_amplitude", cfg_.dome.kappa_amplitude},
               {"lambda_amplitude", cfg_.dome.lambda_amplitude}};
  j["ribs"] = nlohmann::json::array();
  for (const Rib& rib : cfg_.ribs) {
    j["ribs"].push_back({{"center", {rib.center.x(), rib.center.y()}},
                         {"orientation_deg", rib.orientation_deg},
                         {"width", rib.width},
                         {"kappa_amplitude", rib.kappa_amplitude},
                         {"height_amplitude", rib.height_amplitude}});
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("phantom: cannot write file " + path);
  out << j.dump(2) << '\n';
}

}  // namespace vicscan
