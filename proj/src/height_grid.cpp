#include "vicscan/height_grid.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vicscan/csv.hpp"

namespace vicscan {

namespace {

void check_uniform(const std::vector<double>& nodes, const char* axis) {
  if (nodes.size() < 2)
    throw PreconditionError(std::string("fit_grid: need >= 2 ") + axis +
                            " nodes");
  const double h = nodes[1] - nodes[0];
  if (h <= 0.0)
    throw PreconditionError(std::string("fit_grid: ") + axis +
                            " nodes must increase");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double hi = nodes[i] - nodes[i - 1];
    if (std::abs(hi - h) > 1e-9 * h)
      throw PreconditionError(std::string("fit_grid: ") + axis +
                              " node spacing must be uniform");
  }
}

struct CellWeights {
  int ix, iy;
  double u, v;
};

CellWeights locate(const std::vector<double>& xs, const std::vector<double>& ys,
                   double x, double y) {
  const double hx = xs[1] - xs[0];
  const double hy = ys[1] - ys[0];
  int ix = static_cast<int>(std::floor((x - xs[0]) / hx));
  int iy = static_cast<int>(std::floor((y - ys[0]) / hy));
  ix = std::clamp(ix, 0, static_cast<int>(xs.size()) - 2);
  iy = std::clamp(iy, 0, static_cast<int>(ys.size()) - 2);
  return {ix, iy, (x - xs[ix]) / hx, (y - ys[iy]) / hy};
}

double sparse_one_norm(const Eigen::SparseMatrix<double>& m) {
  double best = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double col = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2) throw PreconditionError("linspace: count must be >= 2");
  std::vector<double> v(count);
  const double h = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) v[i] = lo + h * i;
  return v;
}

bool HeightGrid::inside(double x, double y) const {
  return x >= x_.front() - 1e-12 && x <= x_.back() + 1e-12 &&
         y >= y_.front() - 1e-12 && y <= y_.back() + 1e-12;
}

double HeightGrid::height(double x, double y) const {
  if (!inside(x, y))
    throw WorkspaceError("grid height query outside the node hull");
  const CellWeights c = locate(x_, y_, x, y);
  const double z00 = z_[index(c.ix, c.iy)];
  const double z10 = z_[index(c.ix + 1, c.iy)];
  const double z01 = z_[index(c.ix, c.iy + 1)];
  const double z11 = z_[index(c.ix + 1, c.iy + 1)];
  return z00 * (1 - c.u) * (1 - c.v) + z10 * c.u * (1 - c.v) +
         z01 * (1 - c.u) * c.v + z11 * c.u * c.v;
}

Vec2 HeightGrid::gradient(double x, double y) const {
  if (!inside(x, y))
    throw WorkspaceError("grid gradient query outside the node hull");
  const CellWeights c = locate(x_, y_, x, y);
  const double hx = x_[1] - x_[0];
  const double hy = y_[1] - y_[0];
  const double z00 = z_[index(c.ix, c.iy)];
  const double z10 = z_[index(c.ix + 1, c.iy)];
  const double z01 = z_[index(c.ix, c.iy + 1)];
  const double z11 = z_[index(c.ix + 1, c.iy + 1)];
  const double dzdx = ((z10 - z00) * (1 - c.v) + (z11 - z01) * c.v) / hx;
  const double dzdy = ((z01 - z00) * (1 - c.u) + (z11 - z10) * c.u) / hy;
  return Vec2(dzdx, dzdy);
}

double HeightGrid::roughness() const {
  double acc = 0.0;
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 1; ix + 1 < nx_; ++ix) {
      const double d =
          z_[index(ix - 1, iy)] - 2.0 * z_[index(ix, iy)] + z_[index(ix + 1, iy)];
      acc += d * d;
    }
  }
  for (int ix = 0; ix < nx_; ++ix) {
    for (int iy = 1; iy + 1 < ny_; ++iy) {
      const double d =
          z_[index(ix, iy - 1)] - 2.0 * z_[index(ix, iy)] + z_[index(ix, iy + 1)];
      acc += d * d;
    }
  }
  for (int ix = 0; ix + 1 < nx_; ++ix) {
    for (int iy = 0; iy + 1 < ny_; ++iy) {
      const double d = z_[index(ix + 1, iy + 1)] - z_[index(ix + 1, iy)] -
                       z_[index(ix, iy + 1)] + z_[index(ix, iy)];
      acc += 2.0 * d * d;  // thin-plate cross term carries weight 2
    }
  }
  return acc;
}

HeightGrid fit_grid(const std::vector<ScatterPoint>& points,
                    const std::vector<double>& x_nodes,
                    const std::vector<double>& y_nodes, double smoothness) {
  if (points.empty()) throw PreconditionError("fit_grid: empty point set");
  if (smoothness <= 0.0)
    throw PreconditionError("fit_grid: smoothness must be > 0");
  check_uniform(x_nodes, "x");
  check_uniform(y_nodes, "y");

  HeightGrid g;
  g.x_ = x_nodes;
  g.y_ = y_nodes;
  g.nx_ = static_cast<int>(x_nodes.size());
  g.ny_ = static_cast<int>(y_nodes.size());
  g.smoothness_ = smoothness;
  const int n = g.nx_ * g.ny_;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].x < x_nodes.front() - 1e-12 ||
        points[i].x > x_nodes.back() + 1e-12 ||
        points[i].y < y_nodes.front() - 1e-12 ||
        points[i].y > y_nodes.back() + 1e-12)
      throw PreconditionError("fit_grid: point " + std::to_string(i) +
                              " lies outside the node hull");
  }

  // Degenerate configurations: one unique location -> constant grid; two or
  // more still-collinear locations cannot pin a plane and are rejected.
  {
    std::vector<ScatterPoint> uniq;
    for (const auto& p : points) {
      bool seen = false;
      for (const auto& q : uniq)
        if (std::abs(p.x - q.x) < 1e-12 && std::abs(p.y - q.y) < 1e-12)
          seen = true;
      if (!seen) uniq.push_back(p);
      if (uniq.size() > 2) break;
    }
    if (uniq.size() == 1) {
      double mean = 0.0;
      for (const auto& p : points) mean += p.z;
      mean /= static_cast<double>(points.size());
      g.z_.assign(n, mean);
      return g;
    }
    bool collinear = true;
    const auto& a = points[0];
    const ScatterPoint* b = nullptr;
    for (const auto& p : points) {
      if (std::hypot(p.x - a.x, p.y - a.y) > 1e-12) {
        b = &p;
        break;
      }
    }
    if (b) {
      for (const auto& p : points) {
        const double cross =
            (b->x - a.x) * (p.y - a.y) - (b->y - a.y) * (p.x - a.x);
        if (std::abs(cross) > 1e-12) {
          collinear = false;
          break;
        }
      }
    }
    if (collinear)
      throw PreconditionError("fit_grid: need >= 3 non-collinear points");
  }

  using Trip = Eigen::Triplet<double>;
  using SpMat = Eigen::SparseMatrix<double>;

  std::vector<Trip> a_trips;
  a_trips.reserve(points.size() * 4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CellWeights c = locate(x_nodes, y_nodes, points[i].x, points[i].y);
    const int row = static_cast<int>(i);
    a_trips.emplace_back(row, g.index(c.ix, c.iy), (1 - c.u) * (1 - c.v));
    a_trips.emplace_back(row, g.index(c.ix + 1, c.iy), c.u * (1 - c.v));
    a_trips.emplace_back(row, g.index(c.ix, c.iy + 1), (1 - c.u) * c.v);
    a_trips.emplace_back(row, g.index(c.ix + 1, c.iy + 1), c.u * c.v);
    b(row) = points[i].z;
  }
  SpMat A(points.size(), n);
  A.setFromTriplets(a_trips.begin(), a_trips.end());

  std::vector<Trip> l_trips;
  int lrow = 0;
  const double sqrt2 = std::sqrt(2.0);
  for (int iy = 0; iy < g.ny_; ++iy) {
    for (int ix = 1; ix + 1 < g.nx_; ++ix, ++lrow) {
      l_trips.emplace_back(lrow, g.index(ix - 1, iy), 1.0);
      l_trips.emplace_back(lrow, g.index(ix, iy), -2.0);
      l_trips.emplace_back(lrow, g.index(ix + 1, iy), 1.0);
    }
  }
  for (int ix = 0; ix < g.nx_; ++ix) {
    for (int iy = 1; iy + 1 < g.ny_; ++iy, ++lrow) {
      l_trips.emplace_back(lrow, g.index(ix, iy - 1), 1.0);
      l_trips.emplace_back(lrow, g.index(ix, iy), -2.0);
      l_trips.emplace_back(lrow, g.index(ix, iy + 1), 1.0);
    }
  }
  for (int ix = 0; ix + 1 < g.nx_; ++ix) {
    for (int iy = 0; iy + 1 < g.ny_; ++iy, ++lrow) {
      l_trips.emplace_back(lrow, g.index(ix, iy), sqrt2);
      l_trips.emplace_back(lrow, g.index(ix + 1, iy), -sqrt2);
      l_trips.emplace_back(lrow, g.index(ix, iy + 1), -sqrt2);
      l_trips.emplace_back(lrow, g.index(ix + 1, iy + 1), sqrt2);
    }
  }
  SpMat L(lrow, n);
  L.setFromTriplets(l_trips.begin(), l_trips.end());

  // gridfit-style balance: the penalty block is scaled relative to the data
  // block so `smoothness` stays dimensionless across grid sizes.
  const double na = sparse_one_norm(A);
  const double nl = std::max(sparse_one_norm(L), 1e-300);
  const double mu = smoothness * na / nl;

  SpMat M = SpMat(A.transpose()) * A;
  M += mu * mu * (SpMat(L.transpose()) * L);
  const Eigen::VectorXd rhs = A.transpose() * b;

  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(10 * n);
  cg.compute(M);
  Eigen::VectorXd z = cg.solve(rhs);
  if (cg.info() != Eigen::Success && cg.error() > 1e-8)
    throw NumericalError("fit_grid: conjugate gradient failed to converge");

  g.z_.assign(z.data(), z.data() + n);
  return g;
}

void HeightGrid::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("heightgrid: cannot write " + path);
  out << "# heightgrid,1\n";
  out << "# smoothness," << format_sig9(smoothness_) << '\n';
  out << "# x_nodes";
  for (double v : x_) out << ',' << format_sig9(v);
  out << '\n';
  out << "# y_nodes";
  for (double v : y_) out << ',' << format_sig9(v);
  out << '\n';
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (ix) out << ',';
      out << format_sig9(z_[index(ix, iy)]);
    }
    out << '\n';
  }
}

HeightGrid HeightGrid::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("heightgrid: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# heightgrid,1", 0) != 0)
    throw ConfigError("heightgrid: bad magic line in " + path);

  HeightGrid g;
  auto parse_list = [&](const std::string& l,
                        const std::string& tag) -> std::vector<double> {
    std::stringstream ss(l);
    std::string cell;
    std::getline(ss, cell, ',');  // "# tag"
    if (cell != "# " + tag)
      throw ConfigError("heightgrid: expected '# " + tag + "' in " + path);
    std::vector<double> out;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
  };

  if (!std::getline(in, line)) throw ConfigError("heightgrid: truncated file");
  g.smoothness_ = parse_list(line, "smoothness").at(0);
  if (!std::getline(in, line)) throw ConfigError("heightgrid: truncated file");
  g.x_ = parse_list(line, "x_nodes");
  if (!std::getline(in, line)) throw ConfigError("heightgrid: truncated file");
  g.y_ = parse_list(line, "y_nodes");
  g.nx_ = static_cast<int>(g.x_.size());
  g.ny_ = static_cast<int>(g.y_.size());
  g.z_.reserve(static_cast<std::size_t>(g.nx_) * g.ny_);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) g.z_.push_back(std::stod(cell));
  }
  if (static_cast<int>(g.z_.size()) != g.nx_ * g.ny_)
    throw ConfigError("heightgrid: node matrix size mismatch in " + path);
  return g;
}

}  // namespace vicscan
