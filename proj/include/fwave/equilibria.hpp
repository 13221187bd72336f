#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwave/environment.hpp"
#include "fwave/kernel.hpp"

namespace fwave {

struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModelParams {
  std::array<double, 3> d{1, 1, 1};
  std::array<double, 3> r{1, 1, 1};
  double a = 2, b = 0.1, h = 0.5, k = 0.5;
  double s = 1;

  // throws ModelError naming the first violated inequality
  void validate() const;
};

using State = std::array<double, 3>;

struct SteadyStates {
  State E1, E2, E3, E4;
  double u_p, w_p, gamma, beta2;
  double u_star, v_star, w_star;
};

SteadyStates compute_states(const ModelParams& p);

// Reaction terms of the three equations at (u, v, w) with heterogeneity alpha.
inline State reaction(const ModelParams& p, double u, double v, double w, double alpha) {
  return {p.r[0] * u * (-1 - u - p.k * v + p.a * w),
          p.r[1] * v * (-1 - p.h * u - v + p.a * w),
          p.r[2] * w * (alpha - p.b * u - p.b * v - w)};
}

enum class Tri { no, yes, unknown };
std::string to_string(Tri t);

struct RegimeReport {
  bool weak_predation = false;     // b < min{(1-h)/(2a), (1-k)/(2a)}
  Tri predator_free = Tri::no;     // s > max{s1*, s2*}
  bool one_predator = false;       // d-ordering, growth ordering, s > s2**, s >= R2(rho)
  bool one_predator_rho_equal = false;
  bool critical_equal = false;     // s1* = s2*, J1, J2 compact
  bool critical_s1 = false;        // s1* > s2*, J1 compact
  bool critical_one_predator = false;
  bool equal_speed_branch = false; // s1* == s2* (up to 1e-9)
  double s1 = 0, s2 = 0, s2_double = 0, lambda1_star = 0, lambda2_star = 0, lambda2_double = 0;
  double R2_at_rho = 0;
  double rho = 0;
  std::vector<std::string> failed;
};

// rho is taken from the environment's decay data when present.
RegimeReport check_regimes(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J);

// alpha(+inf) = 1 normalisation: w -> w / c with c = alpha_plus.
struct Normalized {
  ModelParams params;
  Environment env;
  double scale = 1;
};
Normalized normalize_alpha_plus(const ModelParams& p, const Environment& env);

}  // namespace fwave
