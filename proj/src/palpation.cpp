#include "vicscan/palpation.hpp"

#include <cmath>

#include "vicscan/csv.hpp"
#include "vicscan/rng.hpp"

namespace vicscan {

void PalpationProtocol::validate() const {
  if (amplitude < 0.0) throw ConfigError("protocol.amplitude: must be >= 0");
  if (frequency <= 0.0) throw ConfigError("protocol.frequency: must be > 0");
  if (sample_rate <= 0.0)
    throw ConfigError("protocol.sample_rate: must be > 0");
  if (noise_sigma < 0.0)
    throw ConfigError("protocol.noise_sigma: must be >= 0");
  if (contact_bias <= amplitude)
    throw PreconditionError(
        "protocol.contact_bias: must exceed amplitude so the probe stays in "
        "contact");
  if (duration * sample_rate < 10.0)
    throw ConfigError("protocol.duration: need at least 10 samples");
}

ProbeRecord generate_palpation(const Phantom& ph, double x, double y,
                               const PalpationProtocol& proto,
                               std::uint64_t seed) {
  proto.validate();
  const auto truth = ph.query(x, y);  // bounds-checked
  const ViscoelasticParams params = ph.params_at(x, y);
  const double omega = 2.0 * M_PI * proto.frequency;
  const double dt = 1.0 / proto.sample_rate;
  const long n = std::lround(proto.duration * proto.sample_rate);
  GaussianNoise noise(seed, proto.noise_sigma);

  ProbeRecord rec;
  rec.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    ProbeSample s;
    s.t = t;
    s.x = x;
    s.y = y;
    s.z_ee = truth.surface - proto.contact_bias +
             proto.amplitude * std::cos(omega * t);
    s.zd_ee = -proto.amplitude * omega * std::sin(omega * t);
    s.zdd_ee = -proto.amplitude * omega * omega * std::cos(omega * t);
    const double eps = truth.surface - s.z_ee;
    const double f_tissue = hc_force(params, {eps, -s.zd_ee});
    s.f_sensor = f_tissue - ph.indenter_mass() * s.zdd_ee + noise();
    rec.push_back(s);
  }
  return rec;
}

ProbeRecord generate_load_unload(const ViscoelasticParams& params,
                                 double surface_z, double indenter_mass,
                                 const LoadUnloadProtocol& proto,
                                 std::uint64_t seed, double x, double y) {
  params.validate();
  const double dt = 1.0 / proto.sample_rate;
  const double t1 = proto.load_time;
  const double t2 = t1 + proto.hold_time;
  const double t3 = t2 + proto.unload_time;
  const long n = std::lround(t3 * proto.sample_rate) + 1;
  const double depth = proto.load_speed * proto.load_time;
  GaussianNoise noise(seed, proto.noise_sigma);

  ProbeRecord rec;
  rec.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double eps, rate;
    if (t <= t1) {
      eps = proto.load_speed * t;
      rate = proto.load_speed;
    } else if (t <= t2) {
      eps = depth;
      rate = 0.0;
    } else {
      eps = depth - proto.unload_speed * (t - t2);
      rate = -proto.unload_speed;
    }
    ProbeSample s;
    s.t = t;
    s.x = x;
    s.y = y;
    s.z_ee = surface_z - eps;
    s.zd_ee = -rate;
    s.zdd_ee = 0.0;  // piecewise constant velocity
    const double f_tissue = hc_force(params, {eps, rate});
    s.f_sensor = f_tissue - indenter_mass * s.zdd_ee + noise();
    rec.push_back(s);
  }
  return rec;
}

ContactDetection detect_surface(const Phantom& ph, double x, double y,
                                double noise_sigma, std::uint64_t seed,
                                double threshold, double approach_speed,
                                double clearance, double sample_rate,
                                int consecutive) {
  const auto truth = ph.query(x, y);
  const ViscoelasticParams params = ph.params_at(x, y);
  const double dt = 1.0 / sample_rate;
  const double z_start = truth.surface + clearance;
  const double z_stop = truth.surface - 0.006;  // descend at most 6 mm deep
  GaussianNoise noise(seed, noise_sigma);

  const long n = std::lround((z_start - z_stop) / (approach_speed * dt));
  std::vector<double> z(n), f(n);
  for (long i = 0; i < n; ++i) {
    z[i] = z_start - approach_speed * dt * static_cast<double>(i);
    const double eps = truth.surface - z[i];
    // constant descent: zdd = 0, eps_dot = +approach_speed
    f[i] = hc_force(params, {eps, approach_speed}) + noise();
  }
  for (long i = 0; i + consecutive <= n; ++i) {
    bool all_above = true;
    for (int k = 0; k < consecutive; ++k) {
      if (f[i + k] <= threshold) {
        all_above = false;
        break;
      }
    }
    if (all_above) return {true, z[i]};
  }
  return {false, 0.0};
}

void save_record_csv(const ProbeRecord& rec, const std::string& path) {
  CsvWriter w(path, {"t", "x", "y", "z_ee", "zd_ee", "zdd_ee", "f_sensor"});
  for (const ProbeSample& s : rec)
    w.row({s.t, s.x, s.y, s.z_ee, s.zd_ee, s.zdd_ee, s.f_sensor});
}

ProbeRecord load_record_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> want = {"t",      "x",      "y",       "z_ee",
                                         "zd_ee",  "zdd_ee", "f_sensor"};
  if (t.header != want)
    throw ConfigError("palpation record header mismatch in " + path);
  ProbeRecord rec;
  rec.reserve(t.rows.size());
  for (const auto& r : t.rows)
    rec.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6]});
  return rec;
}

}  // namespace vicscan
