#include "fwave/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "fwave/spectral.hpp"

namespace fwave {

namespace {
constexpr double kSafety = 1.1;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

Profile constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

// min{c e^{-l z}, c}
Profile exp_cap(double c, double l) {
  return {[=](double z) { return z <= 0 ? c : c * std::exp(-l * z); },
          [=](double z) { return z <= 0 ? 0.0 : -l * c * std::exp(-l * z); }};
}

// max{c e^{-l z} - p e^{-m z}, 0}, positive exactly for z > zk
Profile exp_diff(double c, double l, double p, double m, double zk) {
  return {[=](double z) { return z <= zk ? 0.0 : std::max(0.0, c * std::exp(-l * z) - p * std::exp(-m * z)); },
          [=](double z) { return z <= zk ? 0.0 : -l * c * std::exp(-l * z) + m * p * std::exp(-m * z); }};
}

// max{c (1 - e^{-l (z - z0)}), 0}
Profile rise(double c, double l, double z0) {
  return {[=](double z) { return z <= z0 ? 0.0 : c * (1 - std::exp(-l * (z - z0))); },
          [=](double z) { return z <= z0 ? 0.0 : c * l * std::exp(-l * (z - z0)); }};
}

// min{base + A e^{-l z}, base + A}
Profile decay_to(double base, double A, double l) {
  return {[=](double z) { return z <= 0 ? base + A : base + A * std::exp(-l * z); },
          [=](double z) { return z <= 0 ? 0.0 : -l * A * std::exp(-l * z); }};
}

// base + coef B z e^{-l z} for z > z1, `left` otherwise
Profile z_exp(double base, double coef, double B, double l, double z1, double left) {
  return {[=](double z) { return z > z1 ? base + coef * B * z * std::exp(-l * z) : left; },
          [=](double z) { return z > z1 ? coef * B * (1 - l * z) * std::exp(-l * z) : 0.0; }};
}

// e^{-l z} (c B z - p sqrt z) for z > zk, 0 otherwise
Profile z_sqrt(double c, double B, double l, double p, double zk) {
  return {[=](double z) { return z > zk ? std::max(0.0, std::exp(-l * z) * (c * B * z - p * std::sqrt(z))) : 0.0; },
          [=](double z) {
            if (z <= zk) return 0.0;
            double e = std::exp(-l * z), q = std::sqrt(z);
            return e * (c * B * (1 - l * z) - p * (0.5 / q - l * q));
          }};
}

double root_bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// roots z' < 1/l < z of z e^{-l z} = 1/B
std::pair<double, double> level_roots(double B, double l) {
  auto f = [=](double z) { return z * std::exp(-l * z) - 1 / B; };
  double peak = 1 / l;
  double inner = root_bisect(f, 0.0, peak);
  double hi = 2 * peak;
  while (f(hi) > 0) hi *= 2;
  double outer = root_bisect(f, peak, hi);
  return {inner, outer};
}

void need_decay(const Environment& env) {
  if (!env.decay()) throw RegimeError("environment decay data not verified");
}

double hat(const Kernel& k) { return k.mgf_domain().hi; }

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::coexistence: return "e4";
    case Regime::predator_free: return "e1";
    case Regime::one_predator: return "e2";
    case Regime::critical_equal: return "critical-equal";
    case Regime::critical_s1: return "critical-s1";
    case Regime::critical_one_predator: return "critical-e2";
  }
  return "?";
}

std::string to_string(CriticalCase c) {
  switch (c) {
    case CriticalCase::equal_speeds: return "equal_speeds";
    case CriticalCase::s1_dominant: return "s1_dominant";
    case CriticalCase::E2_critical: return "E2_critical";
  }
  return "?";
}

void ParamRecord::set(const std::string& name, double v) {
  for (auto& e : e_)
    if (e.first == name) {
      e.second = v;
      return;
    }
  e_.emplace_back(name, v);
}

double ParamRecord::get(const std::string& name) const {
  for (const auto& e : e_)
    if (e.first == name) return e.second;
  throw std::out_of_range("parameter record has no entry " + name);
}

bool ParamRecord::has(const std::string& name) const {
  for (const auto& e : e_)
    if (e.first == name) return true;
  return false;
}

KernelSet discretize_all(const std::array<Kernel, 3>& J, double h, double eps_tail) {
  KernelSet ks{J, {}, J};
  for (int i = 0; i < 3; ++i) {
    // reuse identical stencils so kernel equality survives discretization
    int same = -1;
    for (int j = 0; j < i; ++j)
      if (J[j] == J[i]) same = j;
    if (same >= 0) {
      ks.stencil[i] = ks.stencil[same];
      ks.effective[i] = ks.effective[same];
      continue;
    }
    ks.stencil[i] = discretize_kernel(J[i], h, J[i].compact() ? 0.0 : eps_tail);
    ks.effective[i] = effective_kernel(ks.stencil[i]);
  }
  return ks;
}

double window_max(const std::function<double(double)>& f, double lambda_min) {
  double W = 50 / lambda_min;
  const int n = 20000;
  double best = -kInf;
  int bi = 0;
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n; ++i) {
    v[i] = f(W * i / n);
    if (v[i] > best) {
      best = v[i];
      bi = i;
    }
  }
  for (int i = 3 * n / 4; i < n; ++i)
    if (v[i + 1] > v[i] * (1 + 1e-12) + 1e-300)
      throw std::runtime_error("max-over-z search window too short: integrand still increasing");
  double lo = W * std::max(0, bi - 1) / n, hi = W * std::min(n, bi + 1) / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::max({best, f1, f2});
}

// ---------------------------------------------------------------- assembly

BoundPair reassemble(const BoundPair& in) {
  BoundPair P = in;
  const ParamRecord& R = in.record;
  ParamRecord& W = P.record;
  const ModelParams& m = in.params;
  double a1 = m.a - 1;
  switch (in.regime) {
    case Regime::predator_free: {
      double l1 = R.get("lambda1"), l3 = R.get("lambda3"), l0 = R.get("lambda0");
      double mu1 = R.get("mu1"), mu2 = R.get("mu2"), p1 = R.get("p1"), p2 = R.get("p2");
      double z1 = std::log(p1 / a1) / (mu1 - l1), z2 = std::log(p2 / a1) / (mu2 - l3);
      W.set("z1", z1);
      W.set("z2", z2);
      P.upper = {exp_cap(a1, l1), exp_cap(a1, l3), constant(1.0)};
      P.lower = {exp_diff(a1, l1, p1, mu1, z1), exp_diff(a1, l3, p2, mu2, z2), rise(1.0, l0, 0.0)};
      P.kinks = {0.0, z1, z2};
      break;
    }
    case Regime::one_predator: {
      double l5 = R.get("lambda5"), nu = R.get("nu"), q = R.get("q");
      SteadyStates st = compute_states(m);
      double z1 = std::log(q / a1) / (nu - l5);
      W.set("z1", z1);
      P.upper = {decay_to(st.u_p, a1 - st.u_p, l5), exp_cap(a1, l5), decay_to(st.w_p, m.b * st.u_p, l5)};
      P.lower = {rise(st.u_p, l5, 0.0), exp_diff(a1, l5, q, nu, z1), rise(st.w_p, l5, 0.0)};
      P.kinks = {0.0, z1};
      break;
    }
    case Regime::critical_equal: {
      double B = R.get("B"), l1 = R.get("lambda1_star"), l2 = R.get("lambda2_star"), l0 = R.get("lambda0");
      double z1 = R.get("z1"), z2 = R.get("z2"), z0 = R.get("z0"), p3 = R.get("p3"), p4 = R.get("p4");
      double z3 = std::pow(p3 / (a1 * B), 2), z4 = std::pow(p4 / (a1 * B), 2);
      W.set("z3", z3);
      W.set("z4", z4);
      P.upper = {z_exp(0, a1, B, l1, z1, a1), z_exp(0, a1, B, l2, z2, a1), constant(1.0)};
      P.lower = {z_sqrt(a1, B, l1, p3, z3), z_sqrt(a1, B, l2, p4, z4), rise(1.0, l0, z0)};
      P.kinks = {z1, z2, z0, z3, z4};
      break;
    }
    case Regime::critical_s1: {
      double B = R.get("B"), l1 = R.get("lambda1_star"), l3 = R.get("lambda3"), l0 = R.get("lambda0");
      double z1 = R.get("z1"), z0 = R.get("z0"), p5 = R.get("p5"), p6 = R.get("p6"), mu3 = R.get("mu3");
      double z5 = std::pow(p5 / (a1 * B), 2), z6 = std::log(p6 / a1) / (mu3 - l3);
      W.set("z5", z5);
      W.set("z6", z6);
      P.upper = {z_exp(0, a1, B, l1, z1, a1), exp_cap(a1, l3), constant(1.0)};
      P.lower = {z_sqrt(a1, B, l1, p5, z5), exp_diff(a1, l3, p6, mu3, z6), rise(1.0, l0, z0)};
      P.kinks = {z1, 0.0, z0, z5, z6};
      break;
    }
    case Regime::critical_one_predator: {
      SteadyStates st = compute_states(m);
      double B = R.get("B"), l = R.get("lambda2_double"), z1 = R.get("z1"), qs = R.get("q_star");
      double A = a1 - st.u_p;
      double zs = std::pow(qs / (a1 * B), 2);
      W.set("z_star", zs);
      P.upper = {z_exp(st.u_p, A, B, l, z1, a1), z_exp(0, a1, B, l, z1, a1), z_exp(st.w_p, m.b * st.u_p, B, l, z1, 1.0)};
      P.lower = {z_exp(st.u_p, -st.u_p, B, l, z1, 0.0), z_sqrt(a1, B, l, qs, zs), z_exp(st.w_p, -st.w_p, B, l, z1, 0.0)};
      P.kinks = {z1, zs};
      break;
    }
    case Regime::coexistence:
      break;  // gridded lowers carry no formula
  }
  std::sort(P.kinks.begin(), P.kinks.end());
  return P;
}

namespace {

// shared tail of every builder: epsilon, shift, bookkeeping
void finish(BoundPair& P, const Environment& env, double eps) {
  P.record.set("eps", eps);
  P.env = normalize_shift(env, eps);
  P.record.set("A", P.env.shift());
  P.record.set("rho", env.decay()->rho);
  P.record.set("C", env.decay()->C);
}

}  // namespace

BoundPair build_bounds_E1(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J) {
  p.validate();
  need_decay(env);
  double a1 = p.a - 1;
  SpeedResult c1 = critical_speed(J[0], p.d[0], p.r[0] * a1);
  SpeedResult c2 = critical_speed(J[1], p.d[1], p.r[1] * a1);
  double smax = std::max(c1.s_crit, c2.s_crit);
  if (!(p.s > smax * (1 + kTangencyTol)))
    throw RegimeError("predator-free construction needs s > max{s1*, s2*} = " + fmt(smax));

  BoundPair P;
  P.regime = Regime::predator_free;
  P.params = p;
  auto& R = P.record;
  R.set("s", p.s);
  R.set("s1_star", c1.s_crit);
  R.set("s2_star", c2.s_crit);
  CharFunction g1{&J[0], p.d[0], p.s, p.r[0] * a1};
  CharFunction g2{&J[1], p.d[1], p.s, p.r[1] * a1};
  CharFunction g3{&J[2], p.d[2], p.s, 0.0};
  auto [l1, l2] = char_roots(g1, c1);
  auto [l3, l4] = char_roots(g2, c2);
  R.set("lambda1", l1);
  R.set("lambda2", l2);
  R.set("lambda3", l3);
  R.set("lambda4", l4);
  double rho = env.decay()->rho;
  std::vector<double> uppers{l1, l3, rho};
  if (std::isfinite(hat(J[2]))) uppers.push_back(hat(J[2]));
  double l0 = lambda0_pick(g3, uppers);
  R.set("lambda0", l0);
  double mu1 = std::sqrt(l1 * std::min(l2, l1 + l0));
  double mu2 = std::sqrt(l3 * std::min(l4, l3 + l0));
  R.set("mu1", mu1);
  double p1 = kSafety * std::max(a1, p.r[0] * a1 * (2 * p.a - 1 + p.k * a1) / (-g1(mu1)));
  R.set("p1", p1);
  R.set("mu2", mu2);
  double p2 = kSafety * std::max(a1, p.r[1] * a1 * (2 * p.a - 1 + p.h * a1) / (-g2(mu2)));
  R.set("p2", p2);
  P = reassemble(P);
  finish(P, env, 0.5 * (-g3(l0)) / p.r[2]);
  return P;
}

BoundPair build_bounds_E2(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J) {
  p.validate();
  need_decay(env);
  SteadyStates st = compute_states(p);
  double a1 = p.a - 1;
  if (!(std::max(p.d[0], p.d[2]) <= p.d[1])) throw RegimeError("one-predator construction needs max{d1,d3} <= d2");
  if (!(J[0] == J[1] && J[1] == J[2])) throw RegimeError("one-predator construction needs J1 = J2 = J3");
  if (!(p.r[0] * (1 + p.k * a1) <= p.r[1] * st.beta2))
    throw RegimeError("one-predator construction needs r1[1+k(a-1)] <= r2 beta2");
  SpeedResult c = critical_speed(J[1], p.d[1], p.r[1] * st.beta2);
  if (!(p.s > c.s_crit * (1 + kTangencyTol))) throw RegimeError("one-predator construction needs s > s2** = " + fmt(c.s_crit));
  double rho = env.decay()->rho;
  double R2 = speed_ratio(J[1], p.d[1], p.r[1] * st.beta2, rho);
  if (!(p.s >= R2)) throw RegimeError("one-predator construction needs s >= R2(rho) = " + fmt(R2));

  BoundPair P;
  P.regime = Regime::one_predator;
  P.params = p;
  auto& R = P.record;
  R.set("s", p.s);
  R.set("s2_double_star", c.s_crit);
  R.set("R2_rho", R2);
  CharFunction G2{&J[1], p.d[1], p.s, p.r[1] * st.beta2};
  auto [l5, l6] = char_roots(G2, c);
  R.set("lambda5", l5);
  R.set("lambda6", l6);
  if (std::fabs(rho - l5) <= 1e-12 * rho) P.flags.push_back("rho equals lambda5");
  R.set("A_gap", a1 - st.u_p);
  double nu = std::sqrt(l5 * std::min(l6, 2 * l5));
  R.set("nu", nu);
  double q = kSafety * std::max(a1, p.r[1] * a1 * ((1 + p.h) * a1 + p.a * st.w_p) / (-G2(nu)));
  R.set("q", q);
  P = reassemble(P);
  finish(P, env, 0.5 * p.r[1] * st.beta2 / p.r[2]);
  return P;
}

BoundPair build_bounds_critical(const ModelParams& pin, const Environment& env, const std::array<Kernel, 3>& J,
                                CriticalCase cc) {
  pin.validate();
  need_decay(env);
  ModelParams p = pin;
  double a1 = p.a - 1;
  double rho = env.decay()->rho;
  BoundPair P;
  P.params = p;
  auto& R = P.record;

  // B doubling from lambda e until each pair of level roots is S apart
  auto pick_B = [&](const std::vector<double>& lambdas, double S) {
    double lmax = *std::max_element(lambdas.begin(), lambdas.end());
    double B = lmax * std::exp(1.0);
    for (int it = 0; it < 200; ++it) {
      B *= 2;
      bool ok = true;
      for (double l : lambdas) {
        auto [zi, zo] = level_roots(B, l);
        if (!(zo - zi > S)) ok = false;
      }
      if (ok) return B;
    }
    throw std::runtime_error("B search did not separate the level roots");
  };

  // smallest z0 >= start with D(z0) <= 1, D decreasing beyond start
  auto pick_z0 = [&](const std::function<double(double)>& D, double start) {
    if (D(start) <= 1) return start;
    double hi = 2 * start + 1;
    while (D(hi) > 1) hi *= 2;
    return root_bisect([&](double z) { return D(z) - 1; }, start, hi) * (1 + 1e-12);
  };

  if (cc == CriticalCase::equal_speeds || cc == CriticalCase::s1_dominant) {
    if (!J[0].compact()) throw RegimeError("critical construction needs a compactly supported J1");
    SpeedResult c1 = critical_speed(J[0], p.d[0], p.r[0] * a1);
    SpeedResult c2 = critical_speed(J[1], p.d[1], p.r[1] * a1);
    R.set("s1_star", c1.s_crit);
    R.set("s2_star", c2.s_crit);
    double S = J[0].support_bound();
    double l1 = c1.lambda_crit;
    if (cc == CriticalCase::equal_speeds) {
      if (!J[1].compact()) throw RegimeError("equal-speed critical construction needs a compactly supported J2");
      if (std::fabs(c1.s_crit - c2.s_crit) > kTangencyTol * c1.s_crit)
        throw RegimeError("equal-speed critical construction needs s1* = s2*");
      S = std::max(S, J[1].support_bound());
    } else if (!(c1.s_crit > c2.s_crit * (1 + kTangencyTol))) {
      throw RegimeError("s1-dominant critical construction needs s1* > s2*");
    }
    p.s = c1.s_crit;
    P.params = p;
    R.set("s", p.s);
    R.set("S", S);
    R.set("lambda1_star", l1);
    R.set("identity_gap1", std::fabs(p.s - p.d[0] * mgf_derivative(J[0], l1)));
    CharFunction g3{&J[2], p.d[2], p.s, 0.0};
    std::vector<double> uppers{l1, rho};
    if (std::isfinite(hat(J[2]))) uppers.push_back(hat(J[2]));

    if (cc == CriticalCase::equal_speeds) {
      P.regime = Regime::critical_equal;
      double l2 = c2.lambda_crit;
      R.set("lambda2_star", l2);
      R.set("identity_gap2", std::fabs(p.s - p.d[1] * mgf_derivative(J[1], l2)));
      uppers.push_back(l2);
      double l0 = lambda0_pick(g3, uppers);
      R.set("lambda0", l0);
      double B = pick_B({l1, l2}, S);
      R.set("B", B);
      auto [z1p, z1] = level_roots(B, l1);
      auto [z2p, z2] = level_roots(B, l2);
      R.set("z1_prime", z1p);
      R.set("z1", z1);
      R.set("z2_prime", z2p);
      R.set("z2", z2);
      double lmin = std::min(l1, l2);
      double start = std::max({1 / (lmin - l0), z1 * (1 + 1e-9), z2 * (1 + 1e-9)});
      double b = p.b;
      double z0 = pick_z0([&](double z) { return b * a1 * B * z * (std::exp(-l1 * z) + std::exp(-l2 * z)); }, start);
      R.set("z0", z0);
      double m1 = window_max([&](double z) {
        return std::pow(z + S, 1.5) * (a1 * B * z * z * (std::exp(-l1 * z) + p.k * std::exp(-l2 * z)) +
                                       p.a * z * std::exp(-l0 * (z - z0)));
      }, std::min(lmin, l0));
      double p3 = kSafety * std::max(8 * p.r[0] * B * a1 * m1 / (p.d[0] * mgf_second_moment(J[0], l1)),
                                     a1 * B * std::sqrt(z0));
      R.set("p3", p3);
      double m2 = window_max([&](double z) {
        return std::pow(z + S, 1.5) * (a1 * B * z * z * (std::exp(-l2 * z) + p.h * std::exp(-l1 * z)) +
                                       p.a * z * std::exp(-l0 * (z - z0)));
      }, std::min(lmin, l0));
      double p4 = kSafety * std::max(8 * p.r[1] * B * a1 * m2 / (p.d[1] * mgf_second_moment(J[1], l2)),
                                     a1 * B * std::sqrt(z0));
      R.set("p4", p4);
      P = reassemble(P);
      finish(P, env, 0.5 * std::exp(l0 * z0) * (-g3(l0)) / p.r[2]);
      return P;
    }

    P.regime = Regime::critical_s1;
    CharFunction g2{&J[1], p.d[1], p.s, p.r[1] * a1};
    auto [l3, l4] = char_roots(g2, c2);
    R.set("lambda3", l3);
    R.set("lambda4", l4);
    uppers.push_back(l3);
    double l0 = lambda0_pick(g3, uppers);
    R.set("lambda0", l0);
    double mu3 = std::sqrt(l3 * std::min(l4, l3 + l0));
    R.set("mu3", mu3);
    double B = pick_B({l1}, S);
    R.set("B", B);
    auto [z1p, z1] = level_roots(B, l1);
    R.set("z1_prime", z1p);
    R.set("z1", z1);
    double b = p.b;
    double start = std::max(1 / (l1 - l0), z1 * (1 + 1e-9));
    double z0 = pick_z0([&](double z) { return b * a1 * B * z * std::exp(-l1 * z) + b * a1 * std::exp(-l3 * z); }, start);
    R.set("z0", z0);
    double lmin = std::min({l1, l3, l0});
    double m5 = window_max([&](double z) {
      return std::pow(z + S, 1.5) * (a1 * B * z * z * std::exp(-l1 * z) + p.k * a1 * z * std::exp(-l3 * z) +
                                     p.a * z * std::exp(-l0 * (z - z0)));
    }, lmin);
    double p5 = kSafety * std::max(8 * p.r[0] * a1 * B * m5 / (p.d[0] * mgf_second_moment(J[0], l1)),
                                   a1 * B * std::sqrt(z0));
    R.set("p5", p5);
    double P6 = window_max([&](double z) {
      return p.h * a1 * B * z * std::exp(-(l1 + l3 - mu3) * z) + a1 * std::exp(-(2 * l3 - mu3) * z) +
             p.a * std::exp(-l3 * z - l0 * (z - z0) + mu3 * z);
    }, std::min({l1 + l3 - mu3, 2 * l3 - mu3, l3 + l0 - mu3}));
    R.set("P6", P6);
    double p6 = kSafety * std::max({a1, p.r[1] * a1 * P6 / (-g2(mu3)), a1 * std::exp((mu3 - l3) * z0)});
    R.set("p6", p6);
    P = reassemble(P);
    finish(P, env, 0.5 * std::exp(l0 * z0) * (-g3(l0)) / p.r[2]);
    return P;
  }

  // one-predator state at s = s2**
  P.regime = Regime::critical_one_predator;
  SteadyStates st = compute_states(p);
  if (!(p.d[0] == p.d[1] && p.d[1] == p.d[2])) throw RegimeError("critical one-predator construction needs d1 = d2 = d3");
  if (!(J[0] == J[1] && J[1] == J[2])) throw RegimeError("critical one-predator construction needs J1 = J2 = J3");
  if (!J[0].compact()) throw RegimeError("critical one-predator construction needs a compact kernel");
  if (!(p.r[0] * (1 + p.k * a1) <= p.r[1] * st.beta2))
    throw RegimeError("critical one-predator construction needs r1[1+k(a-1)] <= r2 beta2");
  SpeedResult c = critical_speed(J[1], p.d[1], p.r[1] * st.beta2);
  double l = c.lambda_crit;
  if (!(rho >= l)) throw RegimeError("critical one-predator construction needs rho >= lambda2** = " + fmt(l));
  p.s = c.s_crit;
  P.params = p;
  double S = J[0].support_bound();
  R.set("s", p.s);
  R.set("S", S);
  R.set("lambda2_double", l);
  R.set("identity_gap", std::fabs(p.s - p.d[1] * mgf_derivative(J[1], l)));
  double B = pick_B({l}, S);
  R.set("B", B);
  auto [z2, z1] = level_roots(B, l);
  R.set("z2", z2);
  R.set("z1", z1);
  double m = window_max([&](double z) { return std::pow(z + S, 1.5) * z * z * std::exp(-l * z); }, l);
  double qs = kSafety * std::max(8 * p.r[1] * a1 * (2 * p.a - 1) * B * B * m / (p.d[1] * mgf_second_moment(J[1], l)),
                                 a1 * B * std::sqrt(z1));
  R.set("q_star", qs);
  P = reassemble(P);
  finish(P, env, 0.5 * p.r[1] * st.beta2 * std::exp(1.0) / p.r[2]);
  return P;
}

// ---------------------------------------------------------------- E4

BoundPair build_bounds_E4(const ModelParams& p, const Environment& env, const Grid& grid, const ScalarSolverFn& solve) {
  p.validate();
  need_decay(env);
  double bound = std::min((1 - p.h) / (2 * p.a), (1 - p.k) / (2 * p.a));
  if (!(p.b < bound))
    throw RegimeError("co-existence construction needs b < min{(1-h)/(2a),(1-k)/(2a)} = " + fmt(bound));
  double a1 = p.a - 1;
  BoundPair P;
  P.regime = Regime::coexistence;
  P.params = p;
  P.env = env;
  auto& R = P.record;
  double g3 = 1 - 2 * p.b * a1, g2 = (1 - p.h - 2 * p.a * p.b) * a1, g1 = (1 - p.k - 2 * p.a * p.b) * a1;
  R.set("s", p.s);
  R.set("gamma3", g3);
  R.set("gamma2", g2);
  R.set("gamma1", g1);

  std::size_t n = grid.n;
  const DecayData& dd = *env.decay();
  ScalarRequest q3;
  q3.species = 2;
  q3.alpha_plus = g3;
  q3.alpha.resize(n);
  for (std::size_t j = 0; j < n; ++j) q3.alpha[j] = env(grid.z(j)) - 2 * p.b * a1;
  q3.decay = {dd.C * std::exp(-dd.rho * env.shift()), dd.rho};
  ScalarResult w3 = solve(q3);
  R.set("lambda0_3", w3.lambda0);
  R.set("B3", w3.B);
  R.set("eps3", w3.eps);
  R.set("A3", w3.A);

  auto cascade = [&](std::size_t species, double comp, double gamma) {
    ScalarRequest q;
    q.species = species;
    q.alpha_plus = gamma;
    q.alpha.resize(n);
    double fit = 0;
    for (std::size_t j = 0; j < n; ++j) {
      q.alpha[j] = p.a * w3.phi[j] - 1 - comp * a1;
      fit = std::max(fit, (gamma - q.alpha[j]) * std::exp(w3.lambda0 * grid.z(j)));
    }
    q.decay = {std::max(p.a * w3.B, fit * (1 + 1e-12)), w3.lambda0};
    return solve(q);
  };
  ScalarResult w2 = cascade(1, p.h, g2);
  R.set("lambda0_2", w2.lambda0);
  R.set("B2", w2.B);
  ScalarResult w1 = cascade(0, p.k, g1);
  R.set("lambda0_1", w1.lambda0);
  R.set("B1", w1.B);
  R.set("scalar_residual", std::max({w1.residual, w2.residual, w3.residual}));

  P.upper = {constant(a1), constant(a1), constant(1.0)};
  auto gridded = [grid](std::vector<double> v) {
    auto data = std::make_shared<std::vector<double>>(std::move(v));
    return Profile{[grid, data](double z) { return interpolate(grid, *data, z); },
                   [grid, data](double z) {
                     // fourth-order difference at the nodes themselves
                     const auto& v = *data;
                     double x = (z + grid.L) / grid.h;
                     double jr = std::round(x);
                     if (std::fabs(x - jr) < 1e-6 && jr >= 2 && jr + 2 < static_cast<double>(v.size())) {
                       auto j = static_cast<std::size_t>(jr);
                       return (-v[j + 2] + 8 * v[j + 1] - 8 * v[j - 1] + v[j - 2]) / (12 * grid.h);
                     }
                     return interpolate_slope(grid, v, z);
                   }};
  };
  P.lower = {gridded(w1.phi), gridded(w2.phi), gridded(w3.phi)};
  return P;
}

// ---------------------------------------------------------------- verify

bool VerificationReport::pass() const {
  if (!ordering) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

VerificationReport verify_bounds(const BoundPair& pair, const std::array<DiscreteKernel, 3>& stencils, const Grid& grid,
                                 double tol, int kink_halfwidth) {
  const ModelParams& p = pair.params;
  std::size_t n = grid.n;
  int R = 0;
  for (const auto& dk : stencils) {
    if (dk.alignment != StencilAlignment::nodes || std::fabs(dk.h - grid.h) > 1e-12 * grid.h)
      throw std::invalid_argument("verify_bounds needs node-aligned stencils on the grid step");
    R = std::max(R, dk.radius());
  }
  // sample every profile on the grid extended by the stencil radius
  std::size_t ne = n + 2 * static_cast<std::size_t>(R);
  std::array<std::vector<double>, 3> U, Lw;
  for (int i = 0; i < 3; ++i) {
    U[i].resize(ne);
    Lw[i].resize(ne);
    for (std::size_t k = 0; k < ne; ++k) {
      double z = -grid.L + (static_cast<double>(k) - R) * grid.h;
      U[i][k] = pair.upper[i](z);
      Lw[i][k] = pair.lower[i](z);
    }
  }
  auto N = [&](const std::vector<double>& v, const DiscreteKernel& dk, std::size_t j) {
    std::size_t c = j + static_cast<std::size_t>(R);
    double acc = 0;
    for (std::size_t m = 0; m < dk.size(); ++m) acc += dk.weights[m] * v[c - static_cast<long>(dk.first + static_cast<int>(m))];
    return acc - v[c];
  };

  VerificationReport rep;
  rep.tol = tol;
  const char* names[6] = {"U1", "U2", "U3", "L1", "L2", "L3"};
  for (int i = 0; i < 6; ++i) {
    rep.checks[i].name = names[i];
    rep.checks[i].worst = i < 3 ? -kInf : kInf;
    rep.checks[i].pass = true;
  }
  double excl = kink_halfwidth * grid.h * (1 + 1e-9);
  for (std::size_t j = 0; j < n; ++j) {
    double z = grid.z(j);
    std::size_t c = j + static_cast<std::size_t>(R);
    double u1 = U[0][c], u2 = U[1][c], u3 = U[2][c], l1 = Lw[0][c], l2 = Lw[1][c], l3 = Lw[2][c];
    for (int i = 0; i < 3; ++i) {
      double gap = Lw[i][c] - U[i][c];
      double neg = -Lw[i][c];
      double bad = std::max(gap, neg);
      if (bad > rep.ordering_worst) {
        rep.ordering_worst = bad;
        rep.ordering_z = z;
      }
    }
    bool near_kink = false;
    for (double k : pair.kinks)
      if (std::fabs(z - k) <= excl) near_kink = true;
    if (near_kink) continue;
    double al = pair.env(z);
    double v[6];
    v[0] = p.d[0] * N(U[0], stencils[0], j) + p.s * pair.upper[0].slope(z) + p.r[0] * u1 * (-1 - u1 - p.k * l2 + p.a * u3);
    v[1] = p.d[1] * N(U[1], stencils[1], j) + p.s * pair.upper[1].slope(z) + p.r[1] * u2 * (-1 - p.h * l1 - u2 + p.a * u3);
    v[2] = p.d[2] * N(U[2], stencils[2], j) + p.s * pair.upper[2].slope(z) + p.r[2] * u3 * (al - p.b * l1 - p.b * l2 - u3);
    v[3] = p.d[0] * N(Lw[0], stencils[0], j) + p.s * pair.lower[0].slope(z) + p.r[0] * l1 * (-1 - l1 - p.k * u2 + p.a * l3);
    v[4] = p.d[1] * N(Lw[1], stencils[1], j) + p.s * pair.lower[1].slope(z) + p.r[1] * l2 * (-1 - p.h * u1 - l2 + p.a * l3);
    v[5] = p.d[2] * N(Lw[2], stencils[2], j) + p.s * pair.lower[2].slope(z) + p.r[2] * l3 * (al - p.b * u1 - p.b * u2 - l3);
    for (int i = 0; i < 6; ++i) {
      auto& ch = rep.checks[i];
      bool worse = i < 3 ? v[i] > ch.worst : v[i] < ch.worst;
      if (worse) {
        ch.worst = v[i];
        ch.z = z;
      }
    }
  }
  for (int i = 0; i < 6; ++i) rep.checks[i].pass = i < 3 ? rep.checks[i].worst <= tol : rep.checks[i].worst >= -tol;
  rep.ordering = rep.ordering_worst <= 0;
  return rep;
}

}  // namespace fwave
