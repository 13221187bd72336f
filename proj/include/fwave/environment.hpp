#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fwave {

enum class EnvFamily { tanh_ramp, step, piecewise_linear, tabulated, constant };

std::string to_string(EnvFamily f);

struct DecayData {
  double C = 0;
  double rho = 0;
};

class Environment {
 public:
  static Environment tanh_ramp(double center, double steepness, double alpha_minus, double alpha_plus);
  static Environment step(double center, double alpha_minus, double alpha_plus);
  // knots (z, alpha); held constant outside the knot range
  static Environment piecewise_linear(std::vector<double> z, std::vector<double> alpha);
  static Environment tabulated(std::vector<double> z, std::vector<double> alpha);
  static Environment from_csv(const std::string& path);
  // alpha identically equal to `value`; used for equilibrium test runs
  static Environment constant(double value = 1.0);

  EnvFamily family() const { return family_; }
  double alpha_minus() const { return am_; }
  double alpha_plus() const { return ap_; }
  double shift() const { return shift_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& knots_z() const { return kz_; }
  const std::vector<double>& knots_alpha() const { return ka_; }
  const std::optional<DecayData>& decay() const { return decay_; }

  // alpha(z + A)
  double operator()(double z) const { return base(z + shift_); }
  // unshifted profile
  double base(double z) const;
  // alpha_plus - base(z), without the cancellation in the right tail
  double gap(double z) const;

  Environment with_shift(double A) const;
  Environment with_decay(DecayData d) const;
  // multiply every level by c (c > 0)
  Environment scaled(double c) const;

 private:
  EnvFamily family_ = EnvFamily::constant;
  std::vector<double> params_;
  std::vector<double> kz_, ka_;
  double am_ = 0, ap_ = 1;
  double shift_ = 0;
  std::optional<DecayData> decay_;
};

double evaluate_env(const Environment& env, double z);

struct EnvReport {
  bool alpha1 = false;      // alpha <= alpha_plus on the grid, alpha_minus < 0 < alpha_plus
  bool alpha2 = false;      // decay bound holds with a finite C for the declared rho
  bool monotone = true;     // informational only
  double rho = 0;
  double C = 0;             // minimal C on the checking grid (unshifted profile)
  double worst_z = 0;       // where (alpha_plus - alpha) e^{rho z} peaks
  double max_excess = 0;    // max(alpha - alpha_plus) seen
  std::vector<std::string> failures;
};

// Checks the sign/limit condition and fits C for the declared rho on the
// unshifted profile. Returns a report; never throws.
EnvReport check_env_conditions(const Environment& env, double rho);

// Convenience: check and attach the fitted decay data; throws if the decay
// bound fails.
Environment verify_decay(const Environment& env, double rho);

// Shift so that alpha(z) >= alpha_plus - eps e^{-rho z}.
Environment normalize_shift(const Environment& env, double eps);

}  // namespace fwave
