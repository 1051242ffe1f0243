#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "vicscan/hunt_crossley.hpp"

using namespace vicscan;

namespace {

// Independent high-precision evaluation of the contact law.
long double hc_oracle(long double kappa, long double lambda, long double beta,
                      long double eps, long double rate) {
  if (eps < 0.0L) return 0.0L;
  const long double eb = powl(eps, beta);
  return kappa * eb + lambda * eb * rate;
}

PenetrationTrajectory sine_cycle(double bias, double amp, double freq,
                                 double duration, double rate_hz) {
  // bias < 0 keeps the endpoints out of contact.
  PenetrationTrajectory traj;
  traj.dt = 1.0 / rate_hz;
  const long n = std::lround(duration * rate_hz);
  for (long i = 0; i <= n; ++i) {
    const double t = i * traj.dt;
    traj.penetration.push_back(bias - amp * std::cos(2.0 * M_PI * freq * t));
  }
  return traj;
}

}  // namespace

TEST_CASE("hc_force matches the scalar oracle and clamps out of contact") {
  ViscoelasticParams p{1000.0, 0.0, 1.35};
  CHECK(hc_force(p, {-0.01, 0.0}) == 0.0);
  CHECK(hc_force(p, {0.0, 123.0}) == 0.0);

  const double f = hc_force(p, {0.01, 0.0});
  CHECK(f == doctest::Approx(1.9953).epsilon(1e-4));
  CHECK(f == doctest::Approx(static_cast<double>(
                 hc_oracle(1000.0L, 0.0L, 1.35L, 0.01L, 0.0L)))
                 .epsilon(1e-12));

  ViscoelasticParams pv{1200.0, 300.0, 1.35};
  const double fv = hc_force(pv, {0.008, 0.02});
  CHECK(fv == doctest::Approx(static_cast<double>(hc_oracle(
                  1200.0L, 300.0L, 1.35L, 0.008L, 0.02L)))
                  .epsilon(1e-12));
}

TEST_CASE("hc_force is zero for every negative penetration") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ViscoelasticParams p{u(gen) * 5e4, u(gen) * 3000.0, 1.0 + 0.5 * u(gen)};
    CHECK(hc_force(p, {-1e-9 - u(gen), (u(gen) - 0.5) * 2.0}) == 0.0);
  }
}

TEST_CASE("hc_force is monotone in penetration for non-negative rate") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    ViscoelasticParams p{u(gen) * 5e4, u(gen) * 3000.0, 1.0 + 0.5 * u(gen)};
    const double rate = u(gen) * 0.05;
    double prev = -1.0;
    for (double eps = 0.0; eps <= 0.02; eps += 0.001) {
      const double f = hc_force(p, {eps, rate});
      CHECK(f >= prev);
      prev = f;
    }
  }
}

TEST_CASE("kv_force examples") {
  CHECK(kv_force(500.0, 0.0, {0.01, 0.0}) == doctest::Approx(5.0));
  CHECK(kv_force(500.0, 20.0, {-0.001, 0.5}) == 0.0);
  CHECK(kv_force(500.0, 20.0, {0.01, 0.05}) == doctest::Approx(6.0));
}

TEST_CASE("hc with beta=1 and lambda=0 equals kv with d=0 exactly") {
  ViscoelasticParams p{750.0, 0.0, 1.0};
  for (double eps : {1e-5, 0.003, 0.0123, 0.02}) {
    CHECK(hc_force(p, {eps, 0.33}) == kv_force(750.0, 0.0, {eps, 0.33}));
  }
}

TEST_CASE("hysteresis: pure elasticity stores no net energy") {
  ViscoelasticParams p{2000.0, 0.0, 1.35};
  const auto traj = sine_cycle(-0.001, 0.006, 1.0, 1.0, 2000.0);
  const double e = hysteresis_energy(p, traj);
  const double tol = 1e-9 * static_cast<double>(traj.penetration.size());
  CHECK(std::abs(e) <= tol);
}

TEST_CASE("hysteresis: viscous HC cycle dissipates, matches fine quadrature") {
  ViscoelasticParams p{2000.0, 600.0, 1.35};
  const auto traj = sine_cycle(-0.001, 0.006, 1.0, 1.0, 2000.0);
  const double e = hysteresis_energy(p, traj);
  CHECK(e > 0.0);

  // Oracle: same loop integral from a 50x finer trajectory in long double
  // (analytic rates), Simpson-free but resolution-dominated.
  const double rate_hz = 100000.0;
  long double acc = 0.0L;
  const long n = std::lround(1.0 * rate_hz);
  long double f_prev = 0.0L, eps_prev = 0.0L;
  for (long i = 0; i <= n; ++i) {
    const long double t = i / static_cast<long double>(rate_hz);
    const long double eps =
        -0.001L - 0.006L * cosl(2.0L * M_PIl * t);
    const long double rate = 0.006L * 2.0L * M_PIl * sinl(2.0L * M_PIl * t);
    const long double f = hc_oracle(2000.0L, 600.0L, 1.35L, eps, rate);
    if (i > 0) acc += 0.5L * (f + f_prev) * (eps - eps_prev);
    f_prev = f;
    eps_prev = eps;
  }
  CHECK(e == doctest::Approx(static_cast<double>(acc)).epsilon(2e-3));
}

TEST_CASE("hysteresis: random closed HC cycles never generate energy") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    ViscoelasticParams p{500.0 + u(gen) * 4e4, u(gen) * 2000.0,
                         1.0 + 0.5 * u(gen)};
    const auto traj = sine_cycle(-0.002 - 0.004 * u(gen),
                                 0.004 + 0.008 * u(gen), 0.5 + 2.0 * u(gen),
                                 2.0, 1000.0);
    const double e = hysteresis_energy(p, traj);
    const double tol = 1e-9 * static_cast<double>(traj.penetration.size());
    CHECK(e >= -tol);
  }
}

TEST_CASE("hysteresis precondition: trajectory must start/end out of contact") {
  ViscoelasticParams p{1000.0, 100.0, 1.35};
  PenetrationTrajectory traj;
  traj.dt = 0.001;
  traj.penetration = {0.001, 0.002, 0.001};  // never leaves contact
  CHECK_THROWS_AS(hysteresis_energy(p, traj), PreconditionError);
}

TEST_CASE("kv force is discontinuous at contact entry, hc is not") {
  const auto traj = sine_cycle(-0.002, 0.006, 1.0, 1.0, 2000.0);
  const double d = 50.0;
  const auto kv_law = [d](const ContactState& c) {
    return kv_force(3000.0, d, c);
  };
  ViscoelasticParams hp{3000.0, 800.0, 1.35};
  const auto hc_law = [&hp](const ContactState& c) { return hc_force(hp, c); };

  const double kv_jump = contact_discontinuity(kv_law, traj);
  const double hc_jump = contact_discontinuity(hc_law, traj);
  // Entry speed of this cycle is about 23 mm/s: the KV damper injects a
  // step of roughly d·eps_dot at the boundary.
  CHECK(kv_jump > 0.5);
  CHECK(hc_jump < 0.05);
  CHECK(kv_jump > 20.0 * hc_jump);
}
