#pragma once

#include <array>
#include <string>
#include <vector>

#include "vicscan/common.hpp"
#include "vicscan/hunt_crossley.hpp"

namespace vicscan {

/// Gaussian ridge inclusion: a straight crest line through `center` with
/// direction `orientation_deg` (degrees from the +x axis). Adds
/// height_amplitude·exp(-d²/2w²) to the surface and kappa_amplitude·(same
/// profile) to the elasticity field, d being the perpendicular distance to
/// the crest line.
struct Rib {
  Vec2 center = Vec2::Zero();
  double orientation_deg = 90.0;
  double width = 0.008;            // Gaussian sigma, m
  double kappa_amplitude = 0.0;    // N·m^-beta
  double height_amplitude = 0.0;   // m
};

/// Smooth anisotropic Gaussian bump forming the base-surface relief;
/// may also modulate the viscosity field.
struct Dome {
  Vec2 center = Vec2::Zero();
  Vec2 sigma = Vec2(0.05, 0.05);
  double height_amplitude = 0.0;   // m
  double kappa_amplitude = 0.0;    // N·m^-beta
  double lambda_amplitude = 0.0;   // N·s·m^-(beta+1)
};

/// Ground-truth synthetic body: analytic height field s(x,y) plus analytic
/// kappa/lambda fields, all in closed form so estimator-recovery tests can
/// compare against exact values. Immutable after construction.
class Phantom {
 public:
  struct Config {
    std::array<double, 2> x_bounds{0.0, 0.16};
    std::array<double, 2> y_bounds{0.0, 0.12};
    double surface_z = 0.05;       // base surface height, m
    double kappa0 = 10000.0;       // base elasticity
    double lambda0 = 1500.0;       // base viscosity
    double beta = 1.35;
    double indenter_mass = 0.2;    // kg
    Dome dome;
    std::vector<Rib> ribs;
  };

  explicit Phantom(Config cfg);

  /// Exact analytic (surface height, kappa, lambda) at a workspace point.
  /// Throws WorkspaceError outside the bounds.
  struct PointTruth {
    double surface = 0.0;
    double kappa = 0.0;
    double lambda = 0.0;
  };
  PointTruth query(double x, double y) const;

  /// Analytic surface gradient (ds/dx, ds/dy); same bounds check.
  Vec2 surface_gradient(double x, double y) const;

  ViscoelasticParams params_at(double x, double y) const;

  bool in_bounds(double x, double y) const;
  const Config& config() const { return cfg_; }
  double indenter_mass() const { return cfg_.indenter_mass; }
  double beta() const { return cfg_.beta; }

  static Phantom default_phantom();

  /// JSON round trip; schema is versioned with a `format: 1` field and
  /// documented in the README.
  static Phantom load_json(const std::string& path);
  void save_json(const std::string& path) const;

 private:
  Config cfg_;
};

}  // namespace vicscan
