#pragma once

#include <optional>
#include <vector>

#include "vicscan/common.hpp"

namespace vicscan {

/// Squared-exponential kernel with independent per-axis length scales:
///   k(p,q) = sf2 · exp(-(dx²/2lx² + dy²/2ly²))
struct GprHyperparams {
  double signal_variance = 1.0;  // sf2
  double length_x = 0.02;
  double length_y = 0.02;
  double noise_variance = 0.01;  // sn2

  void validate() const;  // all strictly positive
};

struct GprPrediction {
  double mean = 0.0;
  double variance = 0.0;       // latent-function posterior variance
  bool extrapolation = false;  // beyond 3 length scales from every input
};

/// Exact Gaussian-process regression over R², constant prior mean equal to
/// the training-target average. Cholesky factorization with jitter
/// escalation (1e-12..1e-6 relative to the signal variance). Immutable
/// after fit; predict is const and reentrant.
class GprModel {
 public:
  static GprModel fit(const std::vector<Vec2>& inputs,
                      const std::vector<double>& targets,
                      const GprHyperparams& hp);

  /// Hyperparameters picked by maximizing the log marginal likelihood with a
  /// multi-start gradient-free search over a log-grid seeded at
  /// (2·typical_spacing) length scales and variance-of-targets signal power.
  static GprModel fit_auto(const std::vector<Vec2>& inputs,
                           const std::vector<double>& targets,
                           double typical_spacing);

  GprPrediction predict(double x, double y) const;

  double log_marginal_likelihood() const { return lml_; }
  const GprHyperparams& hyperparams() const { return hp_; }
  const std::vector<Vec2>& inputs() const { return x_; }
  const std::vector<double>& targets() const { return y_; }
  double prior_mean() const { return mean_; }

 private:
  GprModel() = default;

  std::vector<Vec2> x_;
  std::vector<double> y_;
  GprHyperparams hp_;
  double mean_ = 0.0;
  double lml_ = 0.0;
  Eigen::MatrixXd chol_;     // lower factor of K + sn2·I (after jitter)
  Eigen::VectorXd alpha_;    // (K + sn2 I)^-1 (y - mean)
};

}  // namespace vicscan
