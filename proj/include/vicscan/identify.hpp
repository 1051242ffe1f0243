#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vicscan/palpation.hpp"

namespace vicscan {

/// Outcome of a per-point least-squares identification.
/// residual is the relative residual ‖r‖₂/√n in N.
struct FitResult {
  ViscoelasticParams params;
  double residual = 0.0;
  long n_samples = 0;
  double condition_estimate = 1.0;  // of the column-scaled normal equations
  bool lambda_unidentifiable = false;

  bool ok() const {
    return std::isfinite(params.kappa) && std::isfinite(params.lambda);
  }
};

/// Hunt-Crossley identification at fixed beta: linear least squares in
/// (kappa, lambda) with regressand f_sensor + m_I·zdd_ee and regressors
/// eps^beta and -zd_ee·eps^beta, eps = surface_z - z_ee.
/// Solved by column-scaled normal equations. When the damping column is
/// numerically zero (static data) lambda is reported unidentifiable and
/// kappa is still fit. Throws PreconditionError with < 2 contact samples.
FitResult fit_hc(const ProbeRecord& samples, double surface_z, double beta,
                 double indenter_mass);

/// Kelvin-Voigt baseline: regressors eps and -zd_ee.
FitResult fit_kv(const ProbeRecord& samples, double surface_z,
                 double indenter_mass);

/// One fit per candidate beta; the caller picks the argmin residual.
std::vector<std::pair<double, FitResult>> beta_sweep(
    const ProbeRecord& samples, double surface_z, double indenter_mass,
    const std::vector<double>& betas);

/// Mean held-out residual versus palpation duration. For each duration the
/// fit is trained on a fresh noisy palpation and its prediction error is
/// evaluated on one fixed reference palpation of `reference_duration`
/// (shared across durations, noise from a seed derived once per point), so
/// the curve isolates how estimate quality improves with observation time.
std::vector<std::pair<double, double>> residual_vs_duration(
    const Phantom& ph, double x, double y, const PalpationProtocol& proto,
    const std::vector<double>& durations, std::uint64_t seed,
    int repeats = 20, double reference_duration = 10.0);

/// Prediction residual ‖f_model - f_sensor‖₂/√n of a fitted model on an
/// independent record.
double holdout_residual(const FitResult& fit, const ProbeRecord& holdout,
                        double surface_z, double indenter_mass);

/// Sensitivity of the recovered parameters to indenter-mass error: refits at
/// m_I ± delta_m and reports the parameter spread. Diagnostic only.
struct MassSensitivity {
  double kappa_spread = 0.0;   // max |kappa(m±δ) - kappa(m)|
  double lambda_spread = 0.0;
};
MassSensitivity mass_sensitivity(const ProbeRecord& samples, double surface_z,
                                 double beta, double indenter_mass,
                                 double delta_m);

/// Node flags in survey results (bitmask).
enum SurveyFlag : int {
  kSurveyOk = 0,
  kSurveyLambdaUnidentifiable = 1,
  kSurveyNoContact = 2,
  kSurveyFitFailed = 4,
};

struct PointEstimate {
  double x = 0.0;
  double y = 0.0;
  double surface_z = 0.0;  // detected from the simulated approach
  FitResult fit;
  int flag = kSurveyOk;
};

/// Palpates every grid node inside the phantom bounds with the given
/// spacing; per-node failures are flagged, never abort the survey.
/// Deterministic for a fixed seed (per-node sub-seeds derived from it).
std::vector<PointEstimate> survey_grid(const Phantom& ph, double spacing,
                                       const PalpationProtocol& proto,
                                       std::uint64_t seed);

/// Survey CSV: `x,y,s,kappa,lambda,residual,flag`.
void save_survey_csv(const std::vector<PointEstimate>& survey,
                     const std::string& path);
std::vector<PointEstimate> load_survey_csv(const std::string& path);

}  // namespace vicscan
