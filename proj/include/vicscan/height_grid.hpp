#pragma once

#include <string>
#include <vector>

#include "vicscan/common.hpp"

namespace vicscan {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Uniform rectangular height grid fitted to scattered data by regularized
/// least squares: data term is the bilinear interpolation misfit, roughness
/// term penalizes second differences along each axis plus the mixed
/// difference (thin-plate flavour, so planes pass through unchanged).
/// Immutable after fit; queries are thread-safe.
class HeightGrid {
 public:
  const std::vector<double>& x_nodes() const { return x_; }
  const std::vector<double>& y_nodes() const { return y_; }
  double z(int ix, int iy) const { return z_[index(ix, iy)]; }
  double smoothness() const { return smoothness_; }

  /// Bilinear height at (x, y). Throws WorkspaceError outside the node hull.
  double height(double x, double y) const;

  /// Exact gradient of the bilinear interpolant; continuous within each
  /// cell. Same bounds check as height().
  Vec2 gradient(double x, double y) const;

  bool inside(double x, double y) const;

  /// Roughness penalty value ‖L z‖² of the fitted surface (diagnostic; used
  /// by the smoothing monotonicity property test).
  double roughness() const;

  /// CSV persistence: axis/meta header lines prefixed with '#', then one
  /// matrix row per y node (columns follow x nodes).
  void save_csv(const std::string& path) const;
  static HeightGrid load_csv(const std::string& path);

  friend HeightGrid fit_grid(const std::vector<ScatterPoint>& points,
                             const std::vector<double>& x_nodes,
                             const std::vector<double>& y_nodes,
                             double smoothness);

 private:
  int index(int ix, int iy) const { return iy * nx_ + ix; }

  std::vector<double> x_, y_;
  std::vector<double> z_;  // row-major, y outer
  int nx_ = 0, ny_ = 0;
  double smoothness_ = 0.0;
};

/// Fits the grid to the points. Node arrays must be uniformly spaced and
/// strictly increasing. Requires smoothness > 0 and at least 3 points not
/// all on one line (a single repeated location is accepted and produces the
/// constant grid at that height). Points outside the node hull are an error.
HeightGrid fit_grid(const std::vector<ScatterPoint>& points,
                    const std::vector<double>& x_nodes,
                    const std::vector<double>& y_nodes, double smoothness);

/// Convenience: uniform node array covering [lo, hi] with the given count.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace vicscan
