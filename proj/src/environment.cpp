#include "fwave/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fwave {

std::string to_string(EnvFamily f) {
  switch (f) {
    case EnvFamily::tanh_ramp: return "tanh_ramp";
    case EnvFamily::step: return "step";
    case EnvFamily::piecewise_linear: return "piecewise_linear";
    case EnvFamily::tabulated: return "tabulated";
    case EnvFamily::constant: return "constant";
  }
  return "?";
}

namespace {
void check_levels(double am, double ap) {
  if (!(am < 0 && ap > 0)) throw std::invalid_argument("environment needs alpha_minus < 0 < alpha_plus");
}
}  // namespace

Environment Environment::tanh_ramp(double center, double steepness, double alpha_minus, double alpha_plus) {
  check_levels(alpha_minus, alpha_plus);
  if (!(steepness > 0)) throw std::invalid_argument("tanh_ramp needs steepness > 0");
  Environment e;
  e.family_ = EnvFamily::tanh_ramp;
  e.params_ = {center, steepness};
  e.am_ = alpha_minus;
  e.ap_ = alpha_plus;
  return e;
}

Environment Environment::step(double center, double alpha_minus, double alpha_plus) {
  check_levels(alpha_minus, alpha_plus);
  Environment e;
  e.family_ = EnvFamily::step;
  e.params_ = {center};
  e.am_ = alpha_minus;
  e.ap_ = alpha_plus;
  return e;
}

Environment Environment::piecewise_linear(std::vector<double> z, std::vector<double> alpha) {
  if (z.size() != alpha.size() || z.size() < 2) throw std::invalid_argument("need at least two knots");
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1])) throw std::invalid_argument("knots must be strictly increasing");
  check_levels(alpha.front(), alpha.back());
  Environment e;
  e.family_ = EnvFamily::piecewise_linear;
  e.kz_ = std::move(z);
  e.ka_ = std::move(alpha);
  e.am_ = e.ka_.front();
  e.ap_ = e.ka_.back();
  return e;
}

Environment Environment::tabulated(std::vector<double> z, std::vector<double> alpha) {
  Environment e = piecewise_linear(std::move(z), std::move(alpha));
  e.family_ = EnvFamily::tabulated;
  return e;
}

Environment Environment::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open environment table " + path);
  std::vector<double> z, a;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) continue;
    z.push_back(x);
    a.push_back(y);
  }
  return tabulated(std::move(z), std::move(a));
}

Environment Environment::constant(double value) {
  Environment e;
  e.family_ = EnvFamily::constant;
  e.am_ = value;
  e.ap_ = value;
  return e;
}

double Environment::base(double z) const {
  switch (family_) {
    case EnvFamily::tanh_ramp:
      return 0.5 * (am_ + ap_) + 0.5 * (ap_ - am_) * std::tanh(params_[1] * (z - params_[0]));
    case EnvFamily::step:
      return z < params_[0] ? am_ : ap_;
    case EnvFamily::piecewise_linear:
    case EnvFamily::tabulated: {
      if (z <= kz_.front()) return ka_.front();
      if (z >= kz_.back()) return ka_.back();
      auto it = std::upper_bound(kz_.begin(), kz_.end(), z);
      std::size_t i = static_cast<std::size_t>(it - kz_.begin());
      double t = (z - kz_[i - 1]) / (kz_[i] - kz_[i - 1]);
      return ka_[i - 1] + t * (ka_[i] - ka_[i - 1]);
    }
    case EnvFamily::constant:
      return ap_;
  }
  return ap_;
}

double Environment::gap(double z) const {
  if (family_ == EnvFamily::tanh_ramp) return (ap_ - am_) / (1 + std::exp(2 * params_[1] * (z - params_[0])));
  return ap_ - base(z);
}

Environment Environment::with_shift(double A) const {
  Environment e = *this;
  e.shift_ = A;
  return e;
}

Environment Environment::with_decay(DecayData d) const {
  Environment e = *this;
  e.decay_ = d;
  return e;
}

Environment Environment::scaled(double c) const {
  if (!(c > 0)) throw std::invalid_argument("scale must be positive");
  Environment e = *this;
  e.am_ *= c;
  e.ap_ *= c;
  for (double& a : e.ka_) a *= c;
  if (e.decay_) e.decay_->C *= c;
  return e;
}

double evaluate_env(const Environment& env, double z) { return env(z); }

EnvReport check_env_conditions(const Environment& env, double rho) {
  EnvReport r;
  r.rho = rho;
  if (env.family() == EnvFamily::constant) {
    r.alpha1 = true;
    r.alpha2 = rho > 0;
    r.C = 0;
    if (!r.alpha2) r.failures.push_back("decay rate must be positive");
    return r;
  }
  double am = env.alpha_minus(), ap = env.alpha_plus();
  r.alpha1 = am < 0 && ap > 0;
  if (!(rho > 0)) {
    r.failures.push_back("decay rate must be positive");
    return r;
  }
  // geometric grid in both directions up to 200/rho, plus a uniform core
  double zmax = 200 / rho;
  std::vector<double> zs;
  for (int i = -4000; i <= 4000; ++i) zs.push_back(i * 0.0025 * zmax / 100);
  for (double z = 0.1 * zmax / 100; z <= zmax; z *= 1.01) {
    zs.push_back(z);
    zs.push_back(-z);
  }
  if (env.family() == EnvFamily::piecewise_linear || env.family() == EnvFamily::tabulated)
    for (double k : env.knots_z()) zs.push_back(k);
  std::sort(zs.begin(), zs.end());

  double prev = env.base(zs.front());
  int sign_changes = 0, last_sign = 0;
  double best = -1, best_z = 0;
  for (double z : zs) {
    double a = env.base(z);
    r.max_excess = std::max(r.max_excess, a - ap);
    double d = a - prev;
    int sg = d > 1e-14 ? 1 : (d < -1e-14 ? -1 : 0);
    if (sg != 0) {
      if (last_sign != 0 && sg != last_sign) ++sign_changes;
      last_sign = sg;
    }
    prev = a;
    double v = env.gap(z) * std::exp(rho * z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  r.monotone = sign_changes == 0;
  if (r.max_excess > 1e-12) r.alpha1 = false;

  // the step profile's supremum is the left limit at the jump
  if (env.family() == EnvFamily::step) {
    double c = env.params()[0];
    double v = (ap - am) * std::exp(rho * c);
    if (v > best) {
      best = v;
      best_z = c;
    }
  } else {
    // golden refinement around the best grid point
    auto it = std::lower_bound(zs.begin(), zs.end(), best_z);
    std::size_t i = static_cast<std::size_t>(it - zs.begin());
    double lo = zs[i > 0 ? i - 1 : 0], hi = zs[std::min(i + 1, zs.size() - 1)];
    auto f = [&](double z) { return env.gap(z) * std::exp(rho * z); };
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < 100 && hi - lo > 1e-14 * (1 + std::fabs(lo)); ++k) {
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
    double v = std::max(f1, f2);
    if (v > best) {
      best = v;
      best_z = f1 > f2 ? x1 : x2;
    }
  }
  // a tiny relative margin absorbs rounding in the refined maximum
  r.C = best * (1 + 1e-12);
  r.worst_z = best_z;

  // the weighted gap must not keep growing at the far end
  double mid = env.gap(zmax / 2) * std::exp(rho * zmax / 2);
  double end = env.gap(zmax) * std::exp(rho * zmax);
  r.alpha2 = std::isfinite(best) && best > 0 && !(end > mid * (1 + 1e-6) && end > 1e-300);
  if (env.family() == EnvFamily::step) r.alpha2 = true;
  if (!r.alpha1) r.failures.push_back("alpha exceeds alpha_plus or levels have wrong signs");
  if (!r.alpha2) r.failures.push_back("decay bound fails for the declared rho");
  return r;
}

Environment verify_decay(const Environment& env, double rho) {
  EnvReport r = check_env_conditions(env, rho);
  if (!r.alpha2) throw std::invalid_argument("environment decay check failed for rho = " + std::to_string(rho));
  return env.with_decay({r.C, rho});
}

Environment normalize_shift(const Environment& env, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("normalize_shift needs eps > 0");
  if (!env.decay()) throw std::logic_error("normalize_shift needs verified decay data");
  const DecayData& d = *env.decay();
  if (d.C <= 0) return env.with_shift(0.0);
  return env.with_shift(std::log(d.C / eps) / d.rho);
}

}  // namespace fwave
