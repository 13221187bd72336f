#include "fwave/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fwave {

double CharFunction::operator()(double lambda) const {
  double I = mgf(*kernel, lambda);
  if (!std::isfinite(I)) return std::numeric_limits<double>::infinity();
  return d * (I - 1) - s * lambda + rc;
}

double CharFunction::derivative(double lambda) const { return d * mgf_derivative(*kernel, lambda) - s; }

double speed_ratio(const Kernel& k, double d, double rc, double lambda) {
  double I = mgf(k, lambda);
  if (!std::isfinite(I)) return std::numeric_limits<double>::infinity();
  return (d * (I - 1) + rc) / lambda;
}

SpeedResult critical_speed(const Kernel& k, double d, double rc) {
  if (!(d > 0) || !(rc > 0)) throw std::invalid_argument("critical_speed needs d > 0 and rc > 0");
  double hat = k.mgf_domain().hi;
  auto Q = [&](double l) { return speed_ratio(k, d, rc, l); };

  // bracket a < m < b with Q(m) below both ends
  double a = 1e-6, b = std::isfinite(hat) ? std::min(1.0, 0.5 * hat) : 1.0;
  double m = std::sqrt(a * b);
  int guard = 0;
  while (!(Q(m) < Q(b))) {
    a = m;
    m = b;
    b = std::isfinite(hat) ? 0.5 * (b + hat) : 2 * b;
    if (++guard > 200) throw BracketError("could not bracket the minimum of Q from the right");
  }
  guard = 0;
  while (!(Q(m) < Q(a))) {
    b = m;
    m = std::sqrt(a * m);
    a *= 1e-3;
    if (++guard > 200) throw BracketError("could not bracket the minimum of Q from the left");
  }

  // golden section
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double lo = a, hi = b;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = Q(x1), f2 = Q(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = Q(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = Q(x2);
    }
  }
  double lam = 0.5 * (lo + hi);

  // polish on the stationarity condition lambda d I' - d(I - 1) - rc = 0,
  // which is increasing in lambda; safeguarded Newton inside a bracket
  auto H = [&](double l) { return l * d * mgf_derivative(k, l) - d * (mgf(k, l) - 1) - rc; };
  // golden section only pins lambda to ~sqrt(eps) on the flat minimum, so
  // the bracket is opened well past [lo, hi]
  double blo = std::max(a, lam * (1 - 1e-3)), bhi = std::min(b, lam * (1 + 1e-3));
  if (!(H(blo) < 0 && H(bhi) > 0)) {
    blo = a;
    bhi = b;
  }
  if (H(blo) < 0 && H(bhi) > 0) {
    for (int it = 0; it < 100; ++it) {
      double hv = H(lam);
      if (hv == 0) break;
      if (hv < 0) blo = lam; else bhi = lam;
      double dh = lam * d * mgf_second_moment(k, lam);
      double next = lam - hv / dh;
      if (!(next > blo && next < bhi)) next = 0.5 * (blo + bhi);
      if (std::fabs(next - lam) <= 1e-16 * lam) {
        lam = next;
        break;
      }
      lam = next;
    }
  }

  SpeedResult r;
  r.lambda_crit = lam;
  r.s_crit = Q(lam);
  double top = std::isfinite(hat) ? std::min(20 * lam, 0.999 * hat) : 20 * lam;
  double bot = lam / 20;
  for (int i = 0; i < 200; ++i) {
    double l = bot * std::pow(top / bot, i / 199.0);
    r.curve.emplace_back(l, Q(l));
  }
  return r;
}

namespace {
double bisect(const CharFunction& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  // return the endpoint with the smaller residual
  return std::fabs(g(lo)) <= std::fabs(g(hi)) ? lo : hi;
}
}  // namespace

std::pair<double, double> char_roots(const CharFunction& cf) {
  return char_roots(cf, critical_speed(*cf.kernel, cf.d, cf.rc));
}

std::pair<double, double> char_roots(const CharFunction& cf, const SpeedResult& crit) {
  double sc = crit.s_crit, lc = crit.lambda_crit;
  if (std::fabs(cf.s - sc) <= kTangencyTol * sc)
    throw TangencyError("speed equals the critical speed; double root", lc);
  if (cf.s < sc) throw NoRootsError("speed below the critical speed; no real roots");
  double hat = cf.kernel->mgf_domain().hi;
  double low = bisect(cf, 0.0, lc);
  double up = std::isfinite(hat) ? 0.5 * (lc + hat) : 2 * lc;
  int guard = 0;
  while (!(cf(up) > 0)) {
    up = std::isfinite(hat) ? 0.5 * (up + hat) : 2 * up;
    if (++guard > 200) throw BracketError("could not bracket the upper root");
  }
  double high = bisect(cf, lc, up);
  return {low, high};
}

double lambda0_pick(const CharFunction& g3, const std::vector<double>& uppers, double theta) {
  if (uppers.empty()) throw std::invalid_argument("lambda0_pick needs at least one upper bound");
  double m = std::numeric_limits<double>::infinity();
  for (double u : uppers) {
    if (!(u > 0)) throw std::invalid_argument("lambda0_pick bounds must be positive");
    m = std::min(m, u);
  }
  if (!std::isfinite(m)) m = 1.0;
  double l = theta * m;
  while (l >= 1e-12) {
    if (g3(l) < 0) return l;
    l *= 0.5;
  }
  throw std::runtime_error("no lambda0 with g3(lambda0) < 0 above 1e-12");
}

}  // namespace fwave
