#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vicscan/phantom.hpp"

namespace vicscan {

/// One vertical probe sample. Positions in m, SI throughout.
struct ProbeSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z_ee = 0.0;
  double zd_ee = 0.0;   // vertical velocity
  double zdd_ee = 0.0;  // vertical acceleration
  double f_sensor = 0.0;
};

using ProbeRecord = std::vector<ProbeSample>;

/// Sinusoidal vertical palpation at a fixed (x, y).
/// contact_bias is the mean penetration; it must exceed the amplitude so the
/// probe never leaves contact during the test.
struct PalpationProtocol {
  double amplitude = 0.005;     // m
  double frequency = 1.0;       // Hz
  double duration = 5.0;        // s
  double sample_rate = 500.0;   // Hz
  double contact_bias = 0.008;  // m
  double noise_sigma = 0.02;    // N, additive Gaussian on the sensed force

  void validate() const;
};

/// Simulates the sinusoidal indentation measurement at (x, y):
///   z_ee(t) = s(x,y) - contact_bias + amplitude·cos(2π f t)
/// with analytic velocity/acceleration and
///   f_sensor = F_tissue - m_I·zdd_ee + noise.
/// Throws PreconditionError if the protocol would break contact and
/// WorkspaceError outside the phantom bounds.
ProbeRecord generate_palpation(const Phantom& ph, double x, double y,
                               const PalpationProtocol& proto,
                               std::uint64_t seed);

/// Constant-velocity load / hold / unload cycle used for model validation:
/// loads at load_speed for load_time, holds, then unloads at unload_speed
/// until the probe leaves the surface. Pure forward model at the given
/// material point (surface height surface_z).
struct LoadUnloadProtocol {
  double load_speed = 0.03;     // m/s
  double load_time = 0.75;      // s
  double hold_time = 10.0;      // s
  double unload_speed = 0.015;  // m/s
  double unload_time = 1.5;     // s
  double sample_rate = 500.0;   // Hz
  double noise_sigma = 0.0;     // N
};

ProbeRecord generate_load_unload(const ViscoelasticParams& params,
                                 double surface_z, double indenter_mass,
                                 const LoadUnloadProtocol& proto,
                                 std::uint64_t seed, double x = 0.0,
                                 double y = 0.0);

/// Simulated approach pass: descends at constant speed from `clearance`
/// above the true surface and reports the height of the first sample whose
/// sensed force exceeds `threshold` on `consecutive` consecutive samples
/// (the run requirement rejects isolated noise spikes).
struct ContactDetection {
  bool detected = false;
  double surface_z = 0.0;  // z_ee at contact onset
};

ContactDetection detect_surface(const Phantom& ph, double x, double y,
                                double noise_sigma, std::uint64_t seed,
                                double threshold = 0.1,
                                double approach_speed = 0.002,
                                double clearance = 0.003,
                                double sample_rate = 500.0,
                                int consecutive = 5);

/// Palpation record CSV: header `t,x,y,z_ee,zd_ee,zdd_ee,f_sensor`,
/// SI units, 9 significant digits.
void save_record_csv(const ProbeRecord& rec, const std::string& path);
ProbeRecord load_record_csv(const std::string& path);

}  // namespace vicscan
