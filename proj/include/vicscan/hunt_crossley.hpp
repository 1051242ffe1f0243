#pragma once

#include <functional>
#include <vector>

#include "vicscan/common.hpp"

namespace vicscan {

/// One Hunt-Crossley material point.
/// kappa [N·m^-beta], lambda [N·s·m^-(beta+1)], beta dimensionless.
struct ViscoelasticParams {
  double kappa = 0.0;
  double lambda = 0.0;
  double beta = 1.35;

  void validate() const;  // kappa,lambda >= 0; beta in [1.0, 1.5]
};

/// Instantaneous contact kinematics. penetration < 0 means no contact.
struct ContactState {
  double penetration = 0.0;       // m
  double penetration_rate = 0.0;  // m/s
};

/// Hunt-Crossley contact force: kappa·eps^beta + lambda·eps^beta·eps_dot for
/// eps >= 0, exactly 0 otherwise. Total function, continuous at eps = 0.
double hc_force(const ViscoelasticParams& p, const ContactState& c);

/// Kelvin-Voigt contact force: k·eps + d·eps_dot for eps >= 0, else 0.
double kv_force(double k, double d, const ContactState& c);

/// Uniformly sampled penetration trajectory, fixed time step dt.
struct PenetrationTrajectory {
  double dt = 0.0;
  std::vector<double> penetration;

  /// Central-difference rates (one-sided at the ends).
  std::vector<double> rates() const;
};

/// Net work done by the contact force over a trajectory that starts and ends
/// out of contact: loop integral of F deps by the trapezoidal rule.
/// Non-negative for Hunt-Crossley materials on any closed contact cycle.
/// Throws PreconditionError when the trajectory does not start/end with
/// penetration <= 0.
double hysteresis_energy(const ViscoelasticParams& p,
                         const PenetrationTrajectory& traj);

/// Same integral for an arbitrary force law (used to contrast models).
double hysteresis_energy(const std::function<double(const ContactState&)>& law,
                         const PenetrationTrajectory& traj);

/// Largest force jump across a contact entry/exit of the trajectory.
/// Near zero for Hunt-Crossley; approximately d·|eps_dot| for a Kelvin-Voigt
/// law entering contact at speed, which is why its loop fails to close.
double contact_discontinuity(
    const std::function<double(const ContactState&)>& law,
    const PenetrationTrajectory& traj);

}  // namespace vicscan
