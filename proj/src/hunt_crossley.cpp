#include "vicscan/hunt_crossley.hpp"

#include <cmath>

namespace vicscan {

void ViscoelasticParams::validate() const {
  if (!(kappa >= 0.0) || !std::isfinite(kappa))
    throw ConfigError("ViscoelasticParams.kappa: must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ConfigError("ViscoelasticParams.lambda: must be finite and >= 0");
  if (!(beta >= 1.0 && beta <= 1.5))
    throw ConfigError("ViscoelasticParams.beta: must lie in [1.0, 1.5]");
}

double hc_force(const ViscoelasticParams& p, const ContactState& c) {
  if (c.penetration < 0.0) return 0.0;
  const double eb = std::pow(c.penetration, p.beta);
  return p.kappa * eb + p.lambda * eb * c.penetration_rate;
}

double kv_force(double k, double d, const ContactState& c) {
  if (c.penetration < 0.0) return 0.0;
  return k * c.penetration + d * c.penetration_rate;
}

std::vector<double> PenetrationTrajectory::rates() const {
  const std::size_t n = penetration.size();
  std::vector<double> r(n, 0.0);
  if (n < 2 || dt <= 0.0) return r;
  r[0] = (penetration[1] - penetration[0]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i)
    r[i] = (penetration[i + 1] - penetration[i - 1]) / (2.0 * dt);
  r[n - 1] = (penetration[n - 1] - penetration[n - 2]) / dt;
  return r;
}

namespace {

void check_closed(const PenetrationTrajectory& traj) {
  if (traj.penetration.size() < 3)
    throw PreconditionError("hysteresis_energy: need at least 3 samples");
  if (traj.dt <= 0.0)
    throw PreconditionError("hysteresis_energy: dt must be positive");
  if (traj.penetration.front() > 0.0 || traj.penetration.back() > 0.0)
    throw PreconditionError(
        "hysteresis_energy: trajectory must start and end out of contact "
        "(penetration <= 0)");
}

}  // namespace

double hysteresis_energy(
    const std::function<double(const ContactState&)>& law,
    const PenetrationTrajectory& traj) {
  check_closed(traj);
  const auto rate = traj.rates();
  double energy = 0.0;
  double f_prev = law({traj.penetration[0], rate[0]});
  for (std::size_t i = 1; i < traj.penetration.size(); ++i) {
    const double f = law({traj.penetration[i], rate[i]});
    energy += 0.5 * (f + f_prev) * (traj.penetration[i] - traj.penetration[i - 1]);
    f_prev = f;
  }
  return energy;
}

double hysteresis_energy(const ViscoelasticParams& p,
                         const PenetrationTrajectory& traj) {
  p.validate();
  return hysteresis_energy(
      [&p](const ContactState& c) { return hc_force(p, c); }, traj);
}

double contact_discontinuity(
    const std::function<double(const ContactState&)>& law,
    const PenetrationTrajectory& traj) {
  const auto rate = traj.rates();
  double max_jump = 0.0;
  for (std::size_t i = 1; i < traj.penetration.size(); ++i) {
    const bool was_in = traj.penetration[i - 1] >= 0.0;
    const bool now_in = traj.penetration[i] >= 0.0;
    if (was_in == now_in) continue;
    const double f0 = law({traj.penetration[i - 1], rate[i - 1]});
    const double f1 = law({traj.penetration[i], rate[i]});
    max_jump = std::max(max_jump, std::abs(f1 - f0));
  }
  return max_jump;
}

}  // namespace vicscan
