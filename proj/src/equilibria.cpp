#include "fwave/equilibria.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fwave/spectral.hpp"

namespace fwave {

void ModelParams::validate() const {
  auto fail = [](const std::string& m) { throw ModelError("parameter condition violated: " + m); };
  for (int i = 0; i < 3; ++i) {
    if (!(d[i] > 0)) fail("d_i > 0");
    if (!(r[i] > 0)) fail("r_i > 0");
  }
  if (!(a > 1)) fail("a > 1");
  if (!(h > 0 && h < 1)) fail("0 < h < 1");
  if (!(k > 0 && k < 1)) fail("0 < k < 1");
  if (!(b > 0 && b < 1 / (2 * (a - 1)))) fail("0 < b < 1/(2(a-1))");
  if (!(s > 0)) fail("s > 0");
}

SteadyStates compute_states(const ModelParams& p) {
  p.validate();
  SteadyStates st;
  double a = p.a, b = p.b, h = p.h, k = p.k;
  st.u_p = (a - 1) / (a * b + 1);
  st.w_p = (b + 1) / (a * b + 1);
  st.gamma = (2 - h - k) / (1 - h * k);
  st.w_star = (1 + b * st.gamma) / (1 + a * b * st.gamma);
  st.v_star = (1 - h) * (a * st.w_star - 1) / (1 - h * k);
  st.u_star = (1 - k) * (a * st.w_star - 1) / (1 - h * k);
  st.beta2 = (a - 1) * (1 - h) / (a * b + 1);
  st.E1 = {0, 0, 1};
  st.E2 = {st.u_p, 0, st.w_p};
  st.E3 = {0, st.u_p, st.w_p};
  st.E4 = {st.u_star, st.v_star, st.w_star};
  if (std::fabs(st.w_p + b * st.u_p - 1) > 1e-12) throw ModelError("w_p + b u_p != 1");
  if (!(st.u_star > 0 && st.v_star > 0 && st.w_star > 0)) throw ModelError("co-existence state not positive");
  return st;
}

std::string to_string(Tri t) {
  switch (t) {
    case Tri::no: return "no";
    case Tri::yes: return "yes";
    case Tri::unknown: return "unknown";
  }
  return "?";
}

RegimeReport check_regimes(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J) {
  RegimeReport rep;
  SteadyStates st = compute_states(p);
  double bound = std::min((1 - p.h) / (2 * p.a), (1 - p.k) / (2 * p.a));
  rep.weak_predation = p.b < bound;
  if (!rep.weak_predation) {
    std::ostringstream m;
    m << "weak predation b < min{(1-h)/(2a),(1-k)/(2a)} = " << bound;
    rep.failed.push_back(m.str());
  }

  SpeedResult q1 = critical_speed(J[0], p.d[0], p.r[0] * (p.a - 1));
  SpeedResult q2 = critical_speed(J[1], p.d[1], p.r[1] * (p.a - 1));
  SpeedResult r2 = critical_speed(J[1], p.d[1], p.r[1] * st.beta2);
  rep.s1 = q1.s_crit;
  rep.s2 = q2.s_crit;
  rep.lambda1_star = q1.lambda_crit;
  rep.lambda2_star = q2.lambda_crit;
  rep.s2_double = r2.s_crit;
  rep.lambda2_double = r2.lambda_crit;
  double smax = std::max(rep.s1, rep.s2);
  rep.equal_speed_branch = std::fabs(rep.s1 - rep.s2) <= kTangencyTol * smax;

  bool compact12 = J[0].compact() && J[1].compact();
  if (p.s > smax * (1 + kTangencyTol)) {
    rep.predator_free = Tri::yes;
  } else if (std::fabs(p.s - smax) <= kTangencyTol * smax && !compact12) {
    rep.predator_free = Tri::unknown;
    rep.failed.push_back("s equals max{s1*, s2*} with non-compact kernels: no result either way");
  } else {
    rep.predator_free = Tri::no;
    rep.failed.push_back("predator-free regime needs s > max{s1*, s2*}");
  }

  rep.rho = env.decay() ? env.decay()->rho : 0.0;
  bool d_order = std::max(p.d[0], p.d[2]) <= p.d[1];
  bool same_kernels = J[0] == J[1] && J[1] == J[2];
  bool growth = p.r[0] * (1 + p.k * (p.a - 1)) <= p.r[1] * st.beta2;
  rep.R2_at_rho = rep.rho > 0 ? speed_ratio(J[1], p.d[1], p.r[1] * st.beta2, rep.rho)
                              : std::numeric_limits<double>::infinity();
  bool above = p.s > rep.s2_double * (1 + kTangencyTol);
  bool rho_ok = p.s >= rep.R2_at_rho;
  rep.one_predator = d_order && same_kernels && growth && above && rho_ok;
  rep.one_predator_rho_equal = rho_ok && std::fabs(p.s - rep.R2_at_rho) <= 1e-12 * p.s;
  if (!d_order) rep.failed.push_back("one-predator regime needs max{d1,d3} <= d2");
  if (!same_kernels) rep.failed.push_back("one-predator regime needs J1 = J2 = J3");
  if (!growth) rep.failed.push_back("one-predator regime needs r1[1+k(a-1)] <= r2 beta2");
  if (!above) rep.failed.push_back("one-predator regime needs s > s2**");
  if (!rho_ok) rep.failed.push_back("one-predator regime needs s >= R2(rho)");

  rep.critical_equal = rep.equal_speed_branch && compact12;
  rep.critical_s1 = rep.s1 > rep.s2 * (1 + kTangencyTol) && J[0].compact();
  bool d_equal = p.d[0] == p.d[1] && p.d[1] == p.d[2];
  rep.critical_one_predator = d_equal && same_kernels && J[0].compact() && growth && rep.rho >= rep.lambda2_double;
  return rep;
}

Normalized normalize_alpha_plus(const ModelParams& p, const Environment& env) {
  Normalized n;
  double c = env.alpha_plus();
  if (!(c > 0)) throw ModelError("alpha(+inf) must be positive");
  n.scale = c;
  n.params = p;
  n.params.a = p.a * c;
  n.params.b = p.b / c;
  n.params.r[2] = p.r[2] * c;
  n.env = env.scaled(1 / c);
  return n;
}

}  // namespace fwave
