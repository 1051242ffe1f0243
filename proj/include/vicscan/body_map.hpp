#pragma once

#include <memory>
#include <string>

#include "vicscan/gpr.hpp"
#include "vicscan/height_grid.hpp"
#include "vicscan/identify.hpp"

namespace vicscan {

/// Continuous viscoelastic body description: fitted height grid with
/// gradients plus two GPRs predicting kappa and lambda at any (x, y).
/// All components cover the same workspace. Immutable once built.
class BodyMap {
 public:
  BodyMap(HeightGrid grid, GprModel kappa, GprModel lambda, double beta)
      : grid_(std::move(grid)),
        kappa_(std::move(kappa)),
        lambda_(std::move(lambda)),
        beta_(beta) {}

  const HeightGrid& grid() const { return grid_; }
  const GprModel& kappa_gpr() const { return kappa_; }
  const GprModel& lambda_gpr() const { return lambda_; }
  double beta() const { return beta_; }

  struct MapPoint {
    double surface = 0.0;
    Vec2 surface_gradient = Vec2::Zero();
    double kappa = 0.0;           // posterior mean, clamped at 0
    double lambda = 0.0;          // posterior mean, clamped at 0
    double kappa_variance = 0.0;  // logged, not used in constraints
    double lambda_variance = 0.0;
  };
  MapPoint query(double x, double y) const;

  /// Single JSON document (`format: 1`): GPR hyperparameters and training
  /// sets inline, the height grid referenced by file path.
  void save_json(const std::string& path, const std::string& grid_path) const;
  static BodyMap load_json(const std::string& path);

 private:
  HeightGrid grid_;
  GprModel kappa_;
  GprModel lambda_;
  double beta_;
};

struct MapSettings {
  double grid_spacing = 0.01;    // node spacing of the fitted height grid, m
  double smoothness = 0.01;
  double gpr_spacing = 0.01;     // typical survey spacing for the GPR priors
  bool auto_hyperparams = true;
};

/// Builds the map from survey estimates; flagged nodes are excluded.
/// Throws PreconditionError when nothing usable remains.
BodyMap build_body_map(const std::vector<PointEstimate>& survey,
                       const MapSettings& settings);

}  // namespace vicscan
