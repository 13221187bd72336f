#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fwave/kernel.hpp"
#include "fwave/spectral.hpp"

using namespace fwave;

// reference values from an independent mpmath computation
TEST_CASE("critical speeds") {
  SpeedResult u = critical_speed(Kernel::uniform(1), 1, 1);
  CHECK(u.lambda_crit == doctest::Approx(1.915008048154537).epsilon(1e-9));
  CHECK(u.s_crit == doctest::Approx(0.9052617393690583).epsilon(1e-12));
  SpeedResult l = critical_speed(Kernel::laplace(2), 1, 1);
  CHECK(l.lambda_crit == doctest::Approx(1.1547005383792515).epsilon(1e-9));
  CHECK(l.s_crit == doctest::Approx(1.299038105676658).epsilon(1e-12));
  CHECK_FALSE(u.curve.empty());
  for (const auto& pt : u.curve) CHECK(pt.second >= u.s_crit - 1e-12);
  CHECK_THROWS(critical_speed(Kernel::uniform(1), 1, 0));
}

TEST_CASE("speed_ratio") {
  CHECK(speed_ratio(Kernel::uniform(1), 1, 1, 1) == doctest::Approx(1.1752011936438014));
  CHECK(speed_ratio(Kernel::laplace(2), 2, 0.5, 1) == doctest::Approx(2 * (4.0 / 3 - 1) + 0.5));
}

TEST_CASE("characteristic roots") {
  Kernel k = Kernel::uniform(1);
  CharFunction cf{&k, 1, 1.2, 1};
  auto [a, b] = char_roots(cf);
  CHECK(a == doctest::Approx(0.9704278221473959).epsilon(1e-11));
  CHECK(b == doctest::Approx(3.2090544999007297).epsilon(1e-11));
  CHECK(std::fabs(cf(a)) < 1e-12);
  CHECK(std::fabs(cf(b)) < 1e-11);
  auto [c, d] = char_roots(cf, critical_speed(k, 1, 1));
  CHECK(c == doctest::Approx(a).epsilon(1e-13));
  CHECK(d == doctest::Approx(b).epsilon(1e-13));

  CharFunction slow{&k, 1, 0.8, 1};
  CHECK_THROWS_AS(char_roots(slow), NoRootsError);
  CharFunction tangent{&k, 1, 0.9052617393690583, 1};
  CHECK_THROWS_AS(char_roots(tangent), TangencyError);
}

TEST_CASE("g3 and lambda0") {
  Kernel k = Kernel::uniform(1);
  CharFunction g3{&k, 1, 1, 0};
  CHECK(g3(0.25) == doctest::Approx(-0.23955073276732677).epsilon(1e-13));
  CHECK(g3.derivative(0.25) == doctest::Approx(mgf_derivative(k, 0.25) - 1).epsilon(1e-13));
  double l0 = lambda0_pick(g3, {1.2, 3.0});
  CHECK(l0 == doctest::Approx(0.6));
  CHECK(g3(l0) < 0);
  // for s small g3 turns positive quickly; halving must find a negative value
  CharFunction g3s{&k, 1, 0.05, 0};
  double l1 = lambda0_pick(g3s, {2.0});
  CHECK(g3s(l1) < 0);
  CHECK(l1 < 0.5);
  CHECK_THROWS(lambda0_pick(g3, {}));
}
