#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace vicscan {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Base type for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Query outside the phantom / grid workspace.
struct WorkspaceError : Error {
  using Error::Error;
};

/// A documented operation precondition was violated by the caller.
struct PreconditionError : Error {
  using Error::Error;
};

/// Malformed or inconsistent configuration (file or programmatic).
/// The message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

/// Numerical guard tripped (e.g. tank state collapsed, factorization failed).
struct NumericalError : Error {
  using Error::Error;
};

/// Simulation diverged; carries the control-cycle index for diagnostics.
struct SimulationError : Error {
  SimulationError(const std::string& what, long cycle)
      : Error(what), cycle_index(cycle) {}
  long cycle_index = -1;
};

}  // namespace vicscan
