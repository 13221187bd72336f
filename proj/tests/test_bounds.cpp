#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fwave/bounds.hpp"
#include "fwave/spectral.hpp"
#include "fwave/wave_solver.hpp"

using namespace fwave;

namespace {

struct Setup {
  double h;
  KernelSet ks;
  Environment env;
  ModelParams p;
  explicit Setup(double h_ = 0.02) : h(h_) {
    Kernel U = Kernel::uniform(1);
    ks = discretize_all({U, U, U}, h, 1e-12);
    env = verify_decay(Environment::tanh_ramp(0, 1, -0.5, 1), 2.0);
    p.a = 2;
    p.b = 0.1;
    p.h = p.k = 0.5;
    p.s = 1.2 * critical_speed(ks.effective[0], 1, 1).s_crit;
  }
};

Profile constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

}  // namespace

TEST_CASE("constant pair passes with the expected margins") {
  Setup S;
  BoundPair P;
  P.regime = Regime::coexistence;
  P.params = S.p;
  P.env = S.env;
  P.upper = {constant(1), constant(1), constant(1)};
  P.lower = {constant(0), constant(0), constant(0)};
  Grid g(20, S.h);
  VerificationReport r = verify_bounds(P, S.ks.stencil, g, 1e-12);
  CHECK(r.pass());
  CHECK(r.checks[0].worst == doctest::Approx(0).epsilon(1e-15));
  CHECK(r.checks[1].worst == doctest::Approx(0).epsilon(1e-15));
  // U3 = r3 (alpha - 1) <= 0, largest at the right edge
  CHECK(r.checks[2].worst <= 0);
  CHECK(r.checks[2].worst > -1e-10);
  for (int i = 3; i < 6; ++i) CHECK(r.checks[static_cast<std::size_t>(i)].worst == 0);
}

TEST_CASE("predator-free pair") {
  Setup S;
  BoundPair P = build_bounds_E1(S.p, S.env, S.ks.effective);
  const ParamRecord& R = P.record;
  double l1 = R.get("lambda1"), l2 = R.get("lambda2"), l0 = R.get("lambda0"), m1 = R.get("mu1"), p1 = R.get("p1");
  // lambda1 is the lower root of d(I-1) - s l + (a-1)
  CharFunction g1{&S.ks.effective[0], 1, P.params.s, 1};
  CHECK(std::fabs(g1(l1)) < 1e-12);
  CHECK(std::fabs(g1(l2)) < 1e-11);
  CHECK(m1 > l1);
  CHECK(m1 < std::min(l2, l1 + l0));
  double z1 = std::log(p1 / (P.params.a - 1)) / (m1 - l1);
  CHECK(R.get("z1") == doctest::Approx(z1).epsilon(1e-12));
  CHECK(z1 > 0);
  REQUIRE(P.kinks.size() == 3);
  CHECK(P.kinks[0] == 0);
  CHECK(P.kinks[1] == doctest::Approx(z1));
  // the lower prey profile
  CHECK(P.lower[2](0) == 0);
  CHECK(P.lower[2](200) == doctest::Approx(1));
  CHECK(P.upper[2](-5) == 1);
  // g3(lambda0) + eps r3 < 0
  CharFunction g3{&S.ks.effective[2], 1, P.params.s, 0};
  CHECK(g3(l0) + R.get("eps") * P.params.r[2] < 0);
  CHECK(P.env.shift() == doctest::Approx(std::log(1.5 / R.get("eps")) / 2).epsilon(1e-12));

  Grid g(60, S.h);
  VerificationReport r = verify_bounds(P, S.ks.stencil, g, 1e-10);
  CHECK(r.pass());
  CHECK(r.ordering);

  // larger constants keep the lower inequalities
  BoundPair Q = P;
  Q.record.set("p1", 2 * p1);
  Q.record.set("p2", 2 * R.get("p2"));
  Q = reassemble(Q);
  CHECK(Q.record.get("z1") > z1);
  CHECK(verify_bounds(Q, S.ks.stencil, g, 1e-10).pass());
}

TEST_CASE("one-predator pair") {
  Setup S;
  ModelParams q = S.p;
  q.b = 0.2;
  q.r[1] = 5;
  SteadyStates st = compute_states(q);
  q.s = 1.2 * critical_speed(S.ks.effective[1], 1, 5 * st.beta2).s_crit;
  BoundPair P = build_bounds_E2(q, S.env, S.ks.effective);
  CHECK(P.record.get("A_gap") == doctest::Approx(0.2857142857142857).epsilon(1e-14));
  CHECK(P.record.get("q") > q.a - 1);
  CHECK(P.upper[2](-1e-9) == doctest::Approx(P.upper[2](1e-9)).epsilon(1e-8));
  CHECK(P.upper[2](0) == doctest::Approx(1).epsilon(1e-14));
  CHECK(P.upper[2](50) == doctest::Approx(st.w_p).epsilon(1e-9));
  CHECK(P.record.get("eps") < q.r[1] * st.beta2 / q.r[2]);
  CHECK(verify_bounds(P, S.ks.stencil, Grid(60, S.h), 1e-10).pass());

  // below s2** the construction refuses
  ModelParams slow = q;
  slow.s = 0.9 * critical_speed(S.ks.effective[1], 1, 5 * st.beta2).s_crit;
  CHECK_THROWS_AS(build_bounds_E2(slow, S.env, S.ks.effective), RegimeError);
}

TEST_CASE("critical pairs") {
  Setup S;
  BoundPair P = build_bounds_critical(S.p, S.env, S.ks.effective, CriticalCase::equal_speeds);
  const ParamRecord& R = P.record;
  double l = R.get("lambda1_star"), B = R.get("B"), z1 = R.get("z1"), z1p = R.get("z1_prime");
  CHECK(P.params.s == doctest::Approx(R.get("s1_star")));
  CHECK(R.get("identity_gap1") <= 1e-8);
  CHECK(z1 - z1p > R.get("S"));
  CHECK(B > l * std::exp(1.0));
  CHECK(B * z1 * std::exp(-l * z1) == doctest::Approx(1).epsilon(1e-10));
  CHECK(B * z1p * std::exp(-l * z1p) == doctest::Approx(1).epsilon(1e-10));
  CHECK(R.get("z3") > R.get("z0"));
  CHECK(verify_bounds(P, S.ks.stencil, Grid(80, S.h), 1e-10).pass());

  ModelParams p1 = S.p;
  p1.r[0] = 2;
  BoundPair Q = build_bounds_critical(p1, S.env, S.ks.effective, CriticalCase::s1_dominant);
  CHECK(Q.params.s > critical_speed(S.ks.effective[1], 1, 1).s_crit);
  CHECK(verify_bounds(Q, S.ks.stencil, Grid(80, S.h), 1e-10).pass());

  // non-compact kernels are refused
  Kernel L = Kernel::laplace(2);
  std::array<Kernel, 3> cont{L, L, L};
  CHECK_THROWS_AS(build_bounds_critical(S.p, S.env, cont, CriticalCase::equal_speeds), RegimeError);
}

TEST_CASE("co-existence pair") {
  Setup S(0.01);
  Grid g(40, S.h);
  WaveProblem prob{S.p, S.env, S.ks.effective, g, 1e-12};
  BoundPair P = build_bounds_E4(S.p, S.env, g, make_scalar_solver(prob));
  CHECK(P.record.get("gamma1") == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(P.record.get("gamma2") == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(P.record.get("gamma3") == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(P.upper[0](3) == doctest::Approx(1));
  CHECK(P.upper[2](3) == doctest::Approx(1));
  for (int i = 0; i < 3; ++i) {
    double gam = P.record.get(i == 0 ? "gamma1" : i == 1 ? "gamma2" : "gamma3");
    CHECK(P.lower[i](-40) <= 1e-3);
    CHECK(std::fabs(P.lower[i](40) - gam) <= 1e-3);
  }
  CHECK(verify_bounds(P, S.ks.stencil, g, 1e-8).pass());
}

TEST_CASE("window_max") {
  CHECK(window_max([](double z) { return z * std::exp(-z); }, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS(window_max([](double z) { return z; }, 1.0));
}
