#include "vicscan/gpr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace vicscan {

void GprHyperparams::validate() const {
  if (!(signal_variance > 0.0))
    throw ConfigError("gpr.signal_variance: must be > 0");
  if (!(length_x > 0.0)) throw ConfigError("gpr.length_x: must be > 0");
  if (!(length_y > 0.0)) throw ConfigError("gpr.length_y: must be > 0");
  if (!(noise_variance > 0.0))
    throw ConfigError("gpr.noise_variance: must be > 0");
}

namespace {

double kernel(const GprHyperparams& hp, const Vec2& a, const Vec2& b) {
  const double dx = (a.x() - b.x()) / hp.length_x;
  const double dy = (a.y() - b.y()) / hp.length_y;
  return hp.signal_variance * std::exp(-0.5 * (dx * dx + dy * dy));
}

// Cholesky of K + sn2 I with jitter escalation. Returns false when even the
// largest jitter cannot make the matrix positive definite.
bool factorize(const std::vector<Vec2>& x, const GprHyperparams& hp,
               Eigen::MatrixXd& lower) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = kernel(hp, x[i], x[j]);
      K(i, j) = v;
      K(j, i) = v;
    }
    K(i, i) += hp.noise_variance;
  }
  for (double jitter = 0.0; jitter <= 1e-6;
       jitter = (jitter == 0.0 ? 1e-12 : jitter * 10.0)) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        K + jitter * hp.signal_variance *
                Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      return true;
    }
  }
  return false;
}

}  // namespace

GprModel GprModel::fit(const std::vector<Vec2>& inputs,
                       const std::vector<double>& targets,
                       const GprHyperparams& hp) {
  if (inputs.empty())
    throw PreconditionError("gpr: need at least 1 training point");
  if (inputs.size() != targets.size())
    throw PreconditionError("gpr: inputs/targets size mismatch");
  hp.validate();

  GprModel m;
  m.x_ = inputs;
  m.y_ = targets;
  m.hp_ = hp;
  const int n = static_cast<int>(inputs.size());
  m.mean_ = 0.0;
  for (double v : targets) m.mean_ += v;
  m.mean_ /= n;

  if (!factorize(inputs, hp, m.chol_))
    throw NumericalError(
        "gpr: kernel matrix not positive definite after jitter escalation");

  Eigen::VectorXd y0(n);
  for (int i = 0; i < n; ++i) y0(i) = targets[i] - m.mean_;
  m.alpha_ = m.chol_.triangularView<Eigen::Lower>().solve(y0);
  m.alpha_ = m.chol_.transpose().triangularView<Eigen::Upper>().solve(m.alpha_);

  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(m.chol_(i, i));
  m.lml_ = -0.5 * y0.dot(m.alpha_) - logdet - 0.5 * n * std::log(2.0 * M_PI);
  return m;
}

GprPrediction GprModel::predict(double x, double y) const {
  const Vec2 p(x, y);
  const int n = static_cast<int>(x_.size());
  Eigen::VectorXd ks(n);
  double min_scaled_dist2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    ks(i) = kernel(hp_, p, x_[i]);
    const double dx = (x - x_[i].x()) / hp_.length_x;
    const double dy = (y - x_[i].y()) / hp_.length_y;
    min_scaled_dist2 = std::min(min_scaled_dist2, dx * dx + dy * dy);
  }
  GprPrediction out;
  out.extrapolation = min_scaled_dist2 > 9.0;
  out.mean = mean_ + ks.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  out.variance = std::max(0.0, hp_.signal_variance - v.squaredNorm());
  return out;
}

GprModel GprModel::fit_auto(const std::vector<Vec2>& inputs,
                            const std::vector<double>& targets,
                            double typical_spacing) {
  if (inputs.empty())
    throw PreconditionError("gpr: need at least 1 training point");
  if (typical_spacing <= 0.0)
    throw PreconditionError("gpr: typical_spacing must be > 0");

  double mean = 0.0;
  for (double v : targets) mean += v;
  mean /= targets.size();
  double var = 0.0;
  for (double v : targets) var += (v - mean) * (v - mean);
  var = targets.size() > 1 ? var / (targets.size() - 1) : 1.0;
  if (var <= 0.0) var = 1.0;

  GprHyperparams best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool has_best = false;

  auto consider = [&](const GprHyperparams& hp) {
    try {
      const GprModel m = fit(inputs, targets, hp);
      if (m.log_marginal_likelihood() > best_lml) {
        best_lml = m.log_marginal_likelihood();
        best = hp;
        has_best = true;
      }
    } catch (const NumericalError&) {
      // candidate rejected
    }
  };

  const double l0 = 2.0 * typical_spacing;
  const std::vector<double> length_grid = {0.5 * l0, l0, 2.0 * l0, 4.0 * l0};
  const std::vector<double> noise_grid = {1e-4, 1e-3, 1e-2, 5e-2};
  for (double lx : length_grid)
    for (double ly : length_grid)
      for (double nf : noise_grid)
        consider({var, lx, ly, nf * var});

  if (!has_best) return fit(inputs, targets, {var, l0, l0, 0.01 * var});

  // Coordinate hill climb around the best grid cell (log steps).
  const double step = 1.4;
  for (int pass = 0; pass < 3; ++pass) {
    const GprHyperparams pivot = best;
    for (int dim = 0; dim < 3; ++dim) {
      for (double f : {1.0 / step, step}) {
        GprHyperparams hp = pivot;
        if (dim == 0) hp.length_x = pivot.length_x * f;
        if (dim == 1) hp.length_y = pivot.length_y * f;
        if (dim == 2) hp.noise_variance = pivot.noise_variance * f;
        consider(hp);
      }
    }
  }
  return fit(inputs, targets, best);
}

}  // namespace vicscan
