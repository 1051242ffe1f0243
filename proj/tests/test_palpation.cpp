#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "vicscan/palpation.hpp"

using namespace vicscan;

namespace {
PalpationProtocol default_proto() { return PalpationProtocol{}; }
}

TEST_CASE("static indentation gives the constant force kappa*bias^beta") {
  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto = default_proto();
  proto.amplitude = 0.0;
  proto.noise_sigma = 0.0;
  const double x = 0.04, y = 0.03;
  const auto rec = generate_palpation(ph, x, y, proto, 1);
  const auto truth = ph.query(x, y);
  const double expected =
      truth.kappa * std::pow(proto.contact_bias, ph.beta());
  for (const auto& s : rec) {
    CHECK(s.f_sensor == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s.zd_ee == 0.0);
    CHECK(s.zdd_ee == 0.0);
  }
}

TEST_CASE("same seed reproduces the identical record") {
  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto = default_proto();
  proto.noise_sigma = 0.05;
  const auto a = generate_palpation(ph, 0.05, 0.05, proto, 42);
  const auto b = generate_palpation(ph, 0.05, 0.05, proto, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].f_sensor == b[i].f_sensor);
    CHECK(a[i].z_ee == b[i].z_ee);
  }
}

TEST_CASE("default protocol keeps the probe in contact throughout") {
  const Phantom ph = Phantom::default_phantom();
  const auto rec = generate_palpation(ph, 0.04, 0.03, default_proto(), 3);
  const double surface = ph.query(0.04, 0.03).surface;
  double min_eps = 1.0;
  for (const auto& s : rec) min_eps = std::min(min_eps, surface - s.z_ee);
  CHECK(min_eps > 0.0);
  CHECK(rec.size() == 2500);
  // fixed, strictly increasing time steps
  for (std::size_t i = 1; i < rec.size(); ++i)
    CHECK(rec[i].t - rec[i - 1].t == doctest::Approx(0.002).epsilon(1e-12));
}

TEST_CASE("protocol that would break contact is rejected") {
  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto = default_proto();
  proto.amplitude = 0.010;
  proto.contact_bias = 0.008;
  CHECK_THROWS_AS(generate_palpation(ph, 0.05, 0.05, proto, 1),
                  PreconditionError);
}

TEST_CASE("sensor force includes the indenter inertia term") {
  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto = default_proto();
  proto.noise_sigma = 0.0;
  const double x = 0.08, y = 0.02;
  const auto rec = generate_palpation(ph, x, y, proto, 5);
  const auto truth = ph.query(x, y);
  const ViscoelasticParams params{truth.kappa, truth.lambda, ph.beta()};
  for (std::size_t i = 0; i < rec.size(); i += 137) {
    const auto& s = rec[i];
    const double eps = truth.surface - s.z_ee;
    const double f_tissue = hc_force(params, {eps, -s.zd_ee});
    CHECK(s.f_sensor ==
          doctest::Approx(f_tissue - ph.indenter_mass() * s.zdd_ee)
              .epsilon(1e-12));
  }
}

TEST_CASE("surface detection bias stays small at the default stiffness") {
  const Phantom ph = Phantom::default_phantom();
  const double x = 0.04, y = 0.03;
  const double true_surface = ph.query(x, y).surface;

  SUBCASE("noiseless") {
    const auto det = detect_surface(ph, x, y, 0.0, 9);
    REQUIRE(det.detected);
    CHECK(true_surface - det.surface_z > 0.0);    // onset is below the surface
    CHECK(true_surface - det.surface_z < 4e-4);   // but within 0.4 mm
  }
  SUBCASE("noisy") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
      const auto det = detect_surface(ph, x, y, 0.05, seed);
      REQUIRE(det.detected);
      CHECK(std::abs(true_surface - det.surface_z) < 6e-4);
    }
  }
}

TEST_CASE("load/unload record closes the penetration loop") {
  ViscoelasticParams p{10000.0, 1500.0, 1.35};
  LoadUnloadProtocol proto;
  const auto rec = generate_load_unload(p, 0.05, 0.2, proto, 1);
  CHECK(rec.front().z_ee == doctest::Approx(0.05));
  CHECK(rec.back().z_ee == doctest::Approx(0.05).epsilon(1e-6));
  double max_eps = 0.0;
  for (const auto& s : rec) max_eps = std::max(max_eps, 0.05 - s.z_ee);
  CHECK(max_eps == doctest::Approx(0.0225).epsilon(1e-9));
}

TEST_CASE("record csv round trip") {
  const Phantom ph = Phantom::default_phantom();
  PalpationProtocol proto = default_proto();
  proto.duration = 0.1;
  proto.noise_sigma = 0.03;
  const auto rec = generate_palpation(ph, 0.03, 0.07, proto, 77);
  const std::string path = "palpation_roundtrip_test.csv";
  save_record_csv(rec, path);
  const auto back = load_record_csv(path);
  REQUIRE(back.size() == rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    CHECK(back[i].t == doctest::Approx(rec[i].t).epsilon(1e-9));
    CHECK(back[i].f_sensor == doctest::Approx(rec[i].f_sensor).epsilon(1e-8));
  }
  std::remove(path.c_str());
}
