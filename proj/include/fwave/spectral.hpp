#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "fwave/kernel.hpp"

namespace fwave {

struct NoRootsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TangencyError : std::runtime_error {
  double lambda;
  TangencyError(const std::string& m, double l) : std::runtime_error(m), lambda(l) {}
};
struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// g(lambda) = d [I(lambda) - 1] - s lambda + rc
struct CharFunction {
  const Kernel* kernel = nullptr;
  double d = 1, s = 1, rc = 0;

  double operator()(double lambda) const;
  double derivative(double lambda) const;
};

struct SpeedResult {
  double s_crit = 0;
  double lambda_crit = 0;
  std::vector<std::pair<double, double>> curve;  // (lambda, Q(lambda))
};

// Q(lambda) = (d [I(lambda) - 1] + rc) / lambda
double speed_ratio(const Kernel& k, double d, double rc, double lambda);

SpeedResult critical_speed(const Kernel& k, double d, double rc);

constexpr double kTangencyTol = 1e-9;

std::pair<double, double> char_roots(const CharFunction& cf);
// same, reusing a known minimiser of Q for (d, rc)
std::pair<double, double> char_roots(const CharFunction& cf, const SpeedResult& crit);

double lambda0_pick(const CharFunction& g3, const std::vector<double>& uppers, double theta = 0.5);

}  // namespace fwave
