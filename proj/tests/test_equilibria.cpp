#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "fwave/equilibria.hpp"

using namespace fwave;

namespace {
ModelParams base() {
  ModelParams p;
  p.a = 2;
  p.b = 0.2;
  p.h = p.k = 0.5;
  p.s = 1.2;
  return p;
}
}  // namespace

TEST_CASE("steady states") {
  SteadyStates st = compute_states(base());
  CHECK(st.u_p == doctest::Approx(0.7142857142857143).epsilon(1e-15));
  CHECK(st.w_p == doctest::Approx(0.8571428571428571).epsilon(1e-15));
  CHECK(st.gamma == doctest::Approx(4.0 / 3).epsilon(1e-15));
  CHECK(st.beta2 == doctest::Approx(0.35714285714285715).epsilon(1e-15));
  CHECK(st.u_star == doctest::Approx(0.43478260869565216).epsilon(1e-14));
  CHECK(st.v_star == doctest::Approx(0.43478260869565216).epsilon(1e-14));
  CHECK(st.w_star == doctest::Approx(0.8260869565217391).epsilon(1e-14));
  CHECK(st.E3[1] == st.u_p);
  // every state is a zero of the reactions at alpha = 1
  for (const State& e : {st.E1, st.E2, st.E3, st.E4}) {
    State f = reaction(base(), e[0], e[1], e[2], 1);
    for (double x : f) CHECK(std::fabs(x) < 1e-14);
  }
}

TEST_CASE("asymmetric co-existence state") {
  ModelParams p = base();
  p.h = 0.3;
  p.k = 0.6;
  SteadyStates st = compute_states(p);
  State f = reaction(p, st.u_star, st.v_star, st.w_star, 1);
  for (double x : f) CHECK(std::fabs(x) < 1e-14);
  CHECK(st.u_star != doctest::Approx(st.v_star));
}

TEST_CASE("parameter validation names the condition") {
  ModelParams p = base();
  p.b = 0.6;
  try {
    p.validate();
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("1/(2(a-1))") != std::string::npos);
  }
  p = base();
  p.a = 1;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = base();
  p.h = 1;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = base();
  p.d[1] = 0;
  CHECK_THROWS_AS(p.validate(), ModelError);
}

TEST_CASE("regime gates") {
  Kernel U = Kernel::uniform(1);
  std::array<Kernel, 3> J{U, U, U};
  Environment env = verify_decay(Environment::tanh_ramp(0, 1, -0.5, 1), 2);
  ModelParams p = base();
  RegimeReport r = check_regimes(p, env, J);
  CHECK_FALSE(r.weak_predation);  // 0.2 >= 0.125
  REQUIRE_FALSE(r.failed.empty());
  CHECK(r.failed[0].find("= 0.125") != std::string::npos);
  CHECK(r.s1 == doctest::Approx(0.9052617393690583).epsilon(1e-12));
  CHECK(r.s2 == doctest::Approx(r.s1));
  CHECK(r.equal_speed_branch);
  CHECK(r.critical_equal);
  CHECK(r.predator_free == Tri::yes);
  CHECK(r.critical_one_predator == false);
  CHECK(r.s2_double == doctest::Approx(0.5104541918764405).epsilon(1e-12));
  CHECK(r.lambda2_double == doctest::Approx(1.298704241819333).epsilon(1e-7));
  CHECK(r.R2_at_rho == doctest::Approx(0.5852865305331833).epsilon(1e-12));
  // growth ordering r1 [1 + k(a-1)] <= r2 beta2 fails with equal rates
  CHECK_FALSE(r.one_predator);
  p.r[1] = 5;
  CHECK_FALSE(check_regimes(p, env, J).one_predator);  // s < R2(rho) = 1.29957
  p.s = 1.35;
  RegimeReport r5 = check_regimes(p, env, J);
  CHECK(r5.one_predator);
  CHECK(r5.s2_double == doctest::Approx(1.2748116065103696).epsilon(1e-12));
  CHECK_FALSE(r5.critical_one_predator);  // rho = 2 < lambda** = 2.31695

  p = base();
  p.b = 0.1;
  p.s = 0.9;
  RegimeReport slow = check_regimes(p, env, J);
  CHECK(slow.weak_predation);
  CHECK(slow.predator_free == Tri::no);

  std::array<Kernel, 3> L{Kernel::laplace(2), Kernel::laplace(2), Kernel::laplace(2)};
  p.s = 1.299038105676658;
  CHECK(check_regimes(p, env, L).predator_free == Tri::unknown);
}

TEST_CASE("alpha_plus normalisation") {
  ModelParams p = base();
  Environment e = Environment::tanh_ramp(0, 1, -1, 2);
  Normalized n = normalize_alpha_plus(p, e);
  CHECK(n.params.a == doctest::Approx(4));
  CHECK(n.params.b == doctest::Approx(0.1));
  CHECK(n.params.r[2] == doctest::Approx(2));
  CHECK(n.env.alpha_plus() == doctest::Approx(1));
  // a state (u, v, w) maps to (u, v, w/2) with scaled reactions
  double u = 0.3, v = 0.2, w = 1.4, z = 0.7;
  State f = reaction(p, u, v, w, e(z));
  State g = reaction(n.params, u, v, w / 2, n.env(z));
  CHECK(f[0] == doctest::Approx(g[0]));
  CHECK(f[1] == doctest::Approx(g[1]));
  CHECK(f[2] / 2 == doctest::Approx(g[2]));
}
