#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fwave/bounds.hpp"
#include "fwave/spectral.hpp"
#include "fwave/wave_solver.hpp"

using namespace fwave;

namespace {

ScalarProblem scalar_setup(const Environment& env, double h, double L) {
  ScalarProblem sp;
  sp.grid = Grid(L, h);
  sp.kernel = Kernel::uniform(1);
  sp.stencil = discretize_kernel(sp.kernel, h, 0);
  sp.kernel = effective_kernel(sp.stencil);
  sp.s = 1;
  sp.alpha.resize(sp.grid.n);
  for (std::size_t j = 0; j < sp.grid.n; ++j) sp.alpha[j] = env(sp.grid.z(j));
  sp.alpha_plus = env.alpha_plus();
  sp.decay = *env.decay();
  return sp;
}

}  // namespace

TEST_CASE("half-line operator reproduces constants") {
  // P applied to a constant state of the reaction system returns it when alpha = 1
  ModelParams p;
  p.a = 2;
  p.b = 0.1;
  p.h = p.k = 0.5;
  p.s = 1.3;
  SteadyStates st = compute_states(p);
  Kernel U = Kernel::uniform(1);
  WaveProblem prob{p, Environment::constant(1), {U, U, U}, Grid(10, 0.05), 1e-12};
  SolverContext ctx = make_context(p, 1.0);
  CHECK(ctx.beta > 0);
  for (const State& e : {st.E1, st.E2, st.E4}) {
    Fields phi;
    for (int i = 0; i < 3; ++i) phi[i].assign(prob.grid.n, e[static_cast<std::size_t>(i)]);
    Fields out = apply_P(prob, ctx, phi);
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < prob.grid.n; ++j) CHECK(std::fabs(out[i][j] - phi[i][j]) <= 1e-12);
    CHECK(interior_sup(residual(prob, phi)) <= 1e-14);
  }
}

TEST_CASE("exponential decay fit") {
  Grid g(30, 0.01);
  std::vector<double> v(g.n);
  for (std::size_t j = 0; j < g.n; ++j) v[j] = 3 * std::exp(-1.7 * g.z(j));
  CHECK(tail_decay_rate(g, v, 5, 20) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("scalar forced waves") {
  for (const Environment& e0 : {Environment::step(0, -0.5, 1), Environment::tanh_ramp(0, 1, -0.5, 1)}) {
    Environment env = verify_decay(e0, 1.0);
    ScalarProblem sp = scalar_setup(env, 0.02, 40);
    SolveOptions o;
    o.tol = 1e-11;
    ScalarResult r = solve_scalar(sp, o);
    const auto& phi = r.phi;
    CHECK(phi.front() <= 1e-3);
    CHECK(std::fabs(phi.back() - 1) <= 1e-3);
    CHECK(r.lambda0 > 0);
    CharFunction g{&sp.kernel, sp.d, sp.s, 0};
    CHECK(g(r.lambda0) < 0);
    for (std::size_t j = 0; j < sp.grid.n; ++j) {
      CHECK(phi[j] >= 1 - r.B * std::exp(-r.lambda0 * sp.grid.z(j)) - 1e-12);
      CHECK(phi[j] <= 1 + 1e-15);
    }
  }
}

TEST_CASE("predator-free wave") {
  double h = 0.02;
  Kernel U = Kernel::uniform(1);
  KernelSet ks = discretize_all({U, U, U}, h, 1e-12);
  ModelParams p;
  p.a = 2;
  p.b = 0.1;
  p.h = p.k = 0.5;
  p.s = 1.2 * critical_speed(ks.effective[0], 1, 1).s_crit;
  Environment env = verify_decay(Environment::tanh_ramp(0, 1, -0.5, 1), 2.0);
  BoundPair P = build_bounds_E1(p, env, ks.effective);
  Grid g(60, h);
  WaveProblem prob{P.params, P.env, ks.effective, g, 1e-12};
  SolveOptions o;
  o.tol = 1e-11;
  WaveProfile w = solve_wave(P, prob, o);
  CHECK(w.clips_final == 0);
  CHECK(w.sup_change <= 1e-11);
  CHECK(w.residual_sup <= 1e-6);
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < g.n; j += 7) {
      CHECK(w.phi[i][j] >= P.lower[i](g.z(j)) - 1e-12);
      CHECK(w.phi[i][j] <= P.upper[i](g.z(j)) + 1e-12);
    }
  CHECK(w.phi[0].front() <= 1e-3);
  CHECK(w.phi[2].back() == doctest::Approx(1).epsilon(1e-6));
  // predator tail decays at the lower characteristic root
  double lf = tail_decay_rate(g, w.phi[0], 12, 24);
  CHECK(lf == doctest::Approx(P.record.get("lambda1")).epsilon(1e-5));

  SolveOptions few = o;
  few.max_iter = 5;
  CHECK_THROWS_AS(solve_wave(P, prob, few), SolverError);
}
