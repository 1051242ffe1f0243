#include "vicscan/identify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "vicscan/csv.hpp"
#include "vicscan/rng.hpp"

namespace vicscan {

namespace {

struct Regression {
  Eigen::MatrixXd A;  // n x 2
  Eigen::VectorXd y;  // regressand
};

// Shared assembly for the HC and KV fits. beta <= 0 selects the KV basis.
Regression build_regression(const ProbeRecord& samples, double surface_z,
                            double beta, double indenter_mass) {
  std::vector<int> in_contact;
  in_contact.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (surface_z - samples[i].z_ee >= 0.0)
      in_contact.push_back(static_cast<int>(i));
  }
  if (in_contact.size() < 2)
    throw PreconditionError("fit: need at least 2 samples in contact");
  Regression r;
  const long n = static_cast<long>(in_contact.size());
  r.A.resize(n, 2);
  r.y.resize(n);
  for (long k = 0; k < n; ++k) {
    const ProbeSample& s = samples[static_cast<std::size_t>(in_contact[k])];
    const double eps = surface_z - s.z_ee;
    const double basis = beta > 0.0 ? std::pow(eps, beta) : eps;
    r.A(k, 0) = basis;
    r.A(k, 1) = -s.zd_ee * (beta > 0.0 ? basis : 1.0);
    r.y(k) = s.f_sensor + indenter_mass * s.zdd_ee;
  }
  return r;
}

FitResult solve_scaled_normal_equations(const Regression& r, double beta) {
  FitResult out;
  out.n_samples = r.A.rows();
  out.params.beta = beta > 0.0 ? beta : 1.0;

  const double n0 = r.A.col(0).norm();
  const double n1 = r.A.col(1).norm();
  const double scale_floor = 1e-12 * std::max(1.0, n0);

  if (n0 <= 0.0) {
    // No elastic information at all (all eps == 0): both parameters zero.
    out.params.kappa = 0.0;
    out.params.lambda = 0.0;
    out.lambda_unidentifiable = n1 <= scale_floor;
    out.residual = r.y.norm() / std::sqrt(static_cast<double>(r.y.size()));
    out.condition_estimate = std::numeric_limits<double>::infinity();
    return out;
  }

  if (n1 <= scale_floor) {
    // Static data: damping column vanishes, fit kappa alone.
    out.lambda_unidentifiable = true;
    out.params.lambda = 0.0;
    out.params.kappa = r.A.col(0).dot(r.y) / (n0 * n0);
    const Eigen::VectorXd res = r.y - out.params.kappa * r.A.col(0);
    out.residual = res.norm() / std::sqrt(static_cast<double>(res.size()));
    out.condition_estimate = std::numeric_limits<double>::infinity();
    return out;
  }

  // Column scaling makes the 2x2 Gram matrix unit-diagonal; its condition
  // number is then (1+|rho|)/(1-|rho|) with rho the column correlation.
  const Eigen::VectorXd c0 = r.A.col(0) / n0;
  const Eigen::VectorXd c1 = r.A.col(1) / n1;
  const double rho = c0.dot(c1);
  const double denom = std::max(1.0 - std::abs(rho), 1e-300);
  out.condition_estimate = (1.0 + std::abs(rho)) / denom;

  Eigen::Matrix2d G;
  G << 1.0, rho, rho, 1.0;
  Eigen::Vector2d b(c0.dot(r.y), c1.dot(r.y));
  const Eigen::Vector2d theta_scaled = G.ldlt().solve(b);
  out.params.kappa = theta_scaled(0) / n0;
  out.params.lambda = theta_scaled(1) / n1;

  const Eigen::VectorXd res =
      r.y - r.A.col(0) * out.params.kappa - r.A.col(1) * out.params.lambda;
  out.residual = res.norm() / std::sqrt(static_cast<double>(res.size()));
  return out;
}

}  // namespace

FitResult fit_hc(const ProbeRecord& samples, double surface_z, double beta,
                 double indenter_mass) {
  if (!(beta >= 1.0 && beta <= 1.5))
    throw PreconditionError("fit_hc: beta must lie in [1.0, 1.5]");
  return solve_scaled_normal_equations(
      build_regression(samples, surface_z, beta, indenter_mass), beta);
}

FitResult fit_kv(const ProbeRecord& samples, double surface_z,
                 double indenter_mass) {
  return solve_scaled_normal_equations(
      build_regression(samples, surface_z, -1.0, indenter_mass), -1.0);
}

std::vector<std::pair<double, FitResult>> beta_sweep(
    const ProbeRecord& samples, double surface_z, double indenter_mass,
    const std::vector<double>& betas) {
  if (betas.empty()) throw PreconditionError("beta_sweep: empty beta list");
  std::vector<std::pair<double, FitResult>> out;
  out.reserve(betas.size());
  for (double beta : betas)
    out.emplace_back(beta, fit_hc(samples, surface_z, beta, indenter_mass));
  return out;
}

double holdout_residual(const FitResult& fit, const ProbeRecord& holdout,
                        double surface_z, double indenter_mass) {
  double ss = 0.0;
  long n = 0;
  for (const ProbeSample& s : holdout) {
    const double eps = surface_z - s.z_ee;
    if (eps < 0.0) continue;
    const double f_model =
        hc_force(ViscoelasticParams{fit.params.kappa,
                                    fit.lambda_unidentifiable
                                        ? 0.0
                                        : fit.params.lambda,
                                    fit.params.beta},
                 {eps, -s.zd_ee}) -
        indenter_mass * s.zdd_ee;
    const double r = f_model - s.f_sensor;
    ss += r * r;
    ++n;
  }
  if (n == 0) return 0.0;
  return std::sqrt(ss / static_cast<double>(n));
}

std::vector<std::pair<double, double>> residual_vs_duration(
    const Phantom& ph, double x, double y, const PalpationProtocol& proto,
    const std::vector<double>& durations, std::uint64_t seed, int repeats,
    double reference_duration) {
  for (std::size_t i = 1; i < durations.size(); ++i) {
    if (durations[i] <= durations[i - 1])
      throw PreconditionError("residual_vs_duration: durations must increase");
  }
  const double surface_z = ph.query(x, y).surface;

  PalpationProtocol ref_proto = proto;
  ref_proto.duration = reference_duration;
  const ProbeRecord reference =
      generate_palpation(ph, x, y, ref_proto, mix_seed(seed, 0xA11CE));

  std::vector<std::pair<double, double>> curve;
  curve.reserve(durations.size());
  for (std::size_t di = 0; di < durations.size(); ++di) {
    PalpationProtocol p = proto;
    p.duration = durations[di];
    double acc = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      const ProbeRecord train = generate_palpation(
          ph, x, y, p, mix_seed(seed, 1000 * (di + 1) + rep));
      const FitResult fit =
          fit_hc(train, surface_z, ph.beta(), ph.indenter_mass());
      acc += holdout_residual(fit, reference, surface_z, ph.indenter_mass());
    }
    curve.emplace_back(durations[di], acc / repeats);
  }
  return curve;
}

MassSensitivity mass_sensitivity(const ProbeRecord& samples, double surface_z,
                                 double beta, double indenter_mass,
                                 double delta_m) {
  const FitResult nominal = fit_hc(samples, surface_z, beta, indenter_mass);
  const FitResult lo = fit_hc(samples, surface_z, beta, indenter_mass - delta_m);
  const FitResult hi = fit_hc(samples, surface_z, beta, indenter_mass + delta_m);
  MassSensitivity s;
  s.kappa_spread = std::max(std::abs(lo.params.kappa - nominal.params.kappa),
                            std::abs(hi.params.kappa - nominal.params.kappa));
  s.lambda_spread =
      std::max(std::abs(lo.params.lambda - nominal.params.lambda),
               std::abs(hi.params.lambda - nominal.params.lambda));
  return s;
}

std::vector<PointEstimate> survey_grid(const Phantom& ph, double spacing,
                                       const PalpationProtocol& proto,
                                       std::uint64_t seed) {
  if (spacing <= 0.0) throw PreconditionError("survey_grid: spacing must be > 0");
  const auto& cfg = ph.config();
  std::vector<PointEstimate> out;
  int node_id = 0;
  for (double y = cfg.y_bounds[0]; y <= cfg.y_bounds[1] + 1e-12;
       y += spacing) {
    for (double x = cfg.x_bounds[0]; x <= cfg.x_bounds[1] + 1e-12;
         x += spacing, ++node_id) {
      PointEstimate pe;
      pe.x = x;
      pe.y = y;
      const std::uint64_t node_seed = mix_seed(seed, node_id);
      try {
        const ContactDetection det = detect_surface(
            ph, x, y, proto.noise_sigma, mix_seed(node_seed, 1));
        if (!det.detected) {
          pe.flag |= kSurveyNoContact;
          out.push_back(pe);
          continue;
        }
        pe.surface_z = det.surface_z;
        const ProbeRecord rec =
            generate_palpation(ph, x, y, proto, mix_seed(node_seed, 2));
        pe.fit = fit_hc(rec, pe.surface_z, ph.beta(), ph.indenter_mass());
        if (pe.fit.lambda_unidentifiable)
          pe.flag |= kSurveyLambdaUnidentifiable;
        if (!pe.fit.ok()) pe.flag |= kSurveyFitFailed;
      } catch (const Error&) {
        pe.flag |= kSurveyFitFailed;
      }
      out.push_back(pe);
    }
  }
  return out;
}

void save_survey_csv(const std::vector<PointEstimate>& survey,
                     const std::string& path) {
  CsvWriter w(path, {"x", "y", "s", "kappa", "lambda", "residual", "flag"});
  for (const PointEstimate& p : survey) {
    w.row({p.x, p.y, p.surface_z, p.fit.params.kappa, p.fit.params.lambda,
           p.fit.residual, static_cast<double>(p.flag)});
  }
}

std::vector<PointEstimate> load_survey_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> want = {"x",      "y",        "s",   "kappa",
                                         "lambda", "residual", "flag"};
  if (t.header != want)
    throw ConfigError("survey CSV header mismatch in " + path);
  std::vector<PointEstimate> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    PointEstimate p;
    p.x = r[0];
    p.y = r[1];
    p.surface_z = r[2];
    p.fit.params.kappa = r[3];
    p.fit.params.lambda = r[4];
    p.fit.residual = r[5];
    p.flag = static_cast<int>(r[6]);
    out.push_back(p);
  }
  return out;
}

}  // namespace vicscan
