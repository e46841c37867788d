#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.h"
#include "qdc/photonics.h"

using namespace qdc;

TEST_CASE("switch insertion loss follows the Benes stage count") {
  CHECK(switch_insertion_loss(2, 0.3) == 0.3);
  CHECK(switch_insertion_loss(4, 0.3) == doctest::Approx(0.9));
  CHECK(switch_insertion_loss(8, 0.3) == doctest::Approx(1.5));
  CHECK(switch_insertion_loss(5, 1.0) == 5.0);  // ceil(log2 5) = 3
  CHECK(switch_insertion_loss(2, 0.0) == 0.0);
  CHECK_THROWS(switch_insertion_loss(1, 0.3));
}

TEST_CASE("path loss") {
  PhysParams p;
  p.alpha_db_per_km = 0.2;
  p.l2x2_db = 0.3;
  const auto sw = switch_centric_path(4, 0.1, 2);
  CHECK(path_loss(sw, p) == doctest::Approx(0.98).epsilon(1e-12));

  PhysParams zero;
  zero.alpha_db_per_km = 0;
  zero.l2x2_db = 0;
  zero.l_mem_db = 0;
  CHECK(path_loss(sw, zero) == 0.0);

  p.l_mem_db = 3.0;
  const auto chain = server_centric_path(2, 0.1, 2);
  const double memory = path_loss(chain, p) - (p.alpha_db_per_km * 0.4 + 2 * 0.3);
  CHECK(memory == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(segment_loss(chain, 0, p) == doctest::Approx(0.04 + 0.3 + 1.5));
  CHECK(segment_loss(chain, 1, p) == doctest::Approx(0.04 + 0.3 + 1.5));

  const auto chain3 = server_centric_path(3, 0.1, 2);
  CHECK(segment_loss(chain3, 1, p) == doctest::Approx(0.04 + 0.3 + 3.0));
  CHECK(path_loss(chain3, p) == doctest::Approx(0.2 * 0.6 + 3 * 0.3 + 2 * 3.0));
  CHECK_THROWS_AS(segment_loss(chain3, 3, p), std::out_of_range);
}

TEST_CASE("transmittance") {
  CHECK(std::abs(transmittance(10.0) - 0.1) <= 1e-12);
  CHECK(transmittance(0.0) == 1.0);
  CHECK(transmittance(3.0) == doctest::Approx(0.5012).epsilon(1e-4));
  CHECK_THROWS(transmittance(-1.0));
  double prev = 1.0;
  for (double l = 0.1; l < 40; l += 0.7) {
    const double t = transmittance(l);
    CHECK(t < prev);
    CHECK(t > 0.0);
    prev = t;
  }
}

TEST_CASE("attempt duration") {
  PhysParams p;
  CHECK(attempt_duration(switch_centric_path(4, 0.1, 2), p) == doctest::Approx(15e-6));
  PhysParams z;
  z.t_src_s = 1e-30;
  z.t_reset_s = 0;
  CHECK(attempt_duration(switch_centric_path(2, 0.0, 2), z) == doctest::Approx(0.0));
  // Server-centric slots come from the slowest segment.
  auto chain = server_centric_path(2, 0.1, 2);
  chain.segments[1].fiber_km = 1.0;
  CHECK(attempt_duration(chain, p) == doctest::Approx(1e-6 + 2.0 / 2e5 + 10e-6));
}

TEST_CASE("closed-form EPR latency") {
  PhysParams p;
  p.alpha_db_per_km = 0;
  p.l2x2_db = 10.0;  // one k=2 switch: 10 dB
  const auto path = switch_centric_path(2, 0.0, 2);
  CHECK(expected_epr_latency_switch(path, p) == doctest::Approx(11e-6 / 0.1));
  p.l2x2_db = 0;
  CHECK(expected_epr_latency_switch(path, p) == doctest::Approx(attempt_duration(path, p)));
  CHECK_THROWS(expected_epr_latency_switch(server_centric_path(2, 0.1, 2), p));

  PhysParams a;
  const auto three = switch_centric_path(4, 0.1, 2);
  a.l2x2_db = 0.4;
  const double base = expected_epr_latency_switch(three, a);
  a.l2x2_db = 0.8;
  CHECK(expected_epr_latency_switch(three, a) / base == doctest::Approx(std::pow(10.0, 3 * 0.4 / 10)));
}

TEST_CASE("closed form matches an independent evaluation on random paths") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    PhysParams p;
    p.alpha_db_per_km = 0.5 * u(rng);
    p.l2x2_db = 1.5 * u(rng);
    p.l_bsm_db = 2.0 * u(rng);
    p.t_src_s = 1e-7 + 5e-6 * u(rng);
    p.t_reset_s = 20e-6 * u(rng);
    p.v_fiber_km_per_s = 1e5 + 2e5 * u(rng);
    PathDescriptor path;
    path.hops = 2 + static_cast<std::size_t>(u(rng) * 6);
    path.fiber_km = 5.0 * u(rng);
    for (std::size_t s = 0; s + 1 < path.hops; ++s) path.switch_radices.push_back(2 + static_cast<int>(u(rng) * 60));
    const double got = expected_epr_latency_switch(path, p);
    const double want = oracle::epr_latency(path.fiber_km, path.switch_radices, p);
    CHECK(std::abs(got - want) <= 1e-12 * want);
  }
}

TEST_CASE("closed form increases in every loss and length term") {
  const PhysParams base;
  const auto path = switch_centric_path(4, 0.1, 8);
  const double e0 = expected_epr_latency_switch(path, base);
  PhysParams a = base;
  a.alpha_db_per_km += 0.05;
  CHECK(expected_epr_latency_switch(path, a) > e0);
  a = base;
  a.l2x2_db += 0.05;
  CHECK(expected_epr_latency_switch(path, a) > e0);
  a = base;
  a.l_bsm_db += 0.05;
  CHECK(expected_epr_latency_switch(path, a) > e0);
  CHECK(expected_epr_latency_switch(switch_centric_path(4, 0.2, 8), base) > e0);
}

TEST_CASE("ratios") {
  PhysParams p;
  CHECK(epr_latency_ratio(150e-6, p) == doctest::Approx(15.0));
  CHECK(epr_latency_ratio(p.t_local_s, p) == 1.0);
  CHECK(epr_latency_ratio(2e-4, p) == doctest::Approx(2 * epr_latency_ratio(1e-4, p)));
  CHECK(loss_ratio(2, p) == doctest::Approx(0.1));
  p.l2x2_db = 0;
  CHECK(loss_ratio(2, p) == 0.0);
  p.l2x2_db = 3;
  CHECK(loss_ratio(2, p) == 1.0);
  p.l_mem_db = 0;
  CHECK_THROWS(loss_ratio(2, p));
}

TEST_CASE("path descriptors") {
  CHECK_THROWS(switch_centric_path(1, 0.1, 2));
  CHECK_THROWS(server_centric_path(0, 0.1, 2));
  const auto single = server_centric_path(1, 0.1, 4);
  CHECK_FALSE(single.server_centric());
  const auto chain = server_centric_path(3, 0.1, 4);
  CHECK(chain.repeaters == 2);
  CHECK(chain.segments.size() == 3);
  CHECK(chain.hops == 6);
}

TEST_CASE("parameter validation") {
  PhysParams p;
  CHECK_NOTHROW(p.validate());
  p.alpha_db_per_km = -1;
  CHECK_THROWS(p.validate());
  p = PhysParams{};
  p.v_fiber_km_per_s = 0;
  CHECK_THROWS(p.validate());
  p = PhysParams{};
  p.t_src_s = 0;
  CHECK_THROWS(p.validate());
}
