#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fwave/environment.hpp"
#include "fwave/equilibria.hpp"
#include "fwave/grid.hpp"
#include "fwave/kernel.hpp"

namespace fwave {

struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Regime { coexistence, predator_free, one_predator, critical_equal, critical_s1, critical_one_predator };
std::string to_string(Regime r);

// Ordered name/value record; insertion order is the order parameters were chosen.
class ParamRecord {
 public:
  void set(const std::string& name, double v);
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, double>>& entries() const { return e_; }

 private:
  std::vector<std::pair<std::string, double>> e_;
};

struct Profile {
  std::function<double(double)> value;
  std::function<double(double)> slope;
  double operator()(double z) const { return value(z); }
};

struct BoundPair {
  Regime regime = Regime::predator_free;
  ModelParams params;  // s is the speed the pair was built for
  Environment env;     // shifted as required by the construction
  std::array<Profile, 3> upper, lower;
  std::vector<double> kinks;
  ParamRecord record;
  std::vector<std::string> flags;
};

// Kernels in every stage of the pipeline: the continuous ones, their
// stencils on the working grid, and the stencils viewed as kernels. The
// bounds are built from the last so the inequalities hold for the discrete
// operator that is actually solved.
struct KernelSet {
  std::array<Kernel, 3> continuous;
  std::array<DiscreteKernel, 3> stencil;
  std::array<Kernel, 3> effective;
};
KernelSet discretize_all(const std::array<Kernel, 3>& J, double h, double eps_tail);

BoundPair build_bounds_E1(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J);
BoundPair build_bounds_E2(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J);

enum class CriticalCase { equal_speeds, s1_dominant, E2_critical };
std::string to_string(CriticalCase c);
// p.s is ignored and replaced by the critical speed
BoundPair build_bounds_critical(const ModelParams& p, const Environment& env, const std::array<Kernel, 3>& J,
                                CriticalCase c);

// Rebuild the profiles of a pair from its (possibly edited) record; used to
// perturb constants such as p1 after construction.
BoundPair reassemble(const BoundPair& pair);

// Scalar forced-wave solve on a grid; injected into the E4 builder.
struct ScalarRequest {
  std::vector<double> alpha;  // effective heterogeneity at the grid nodes
  double alpha_plus = 1;
  DecayData decay;            // alpha_plus - alpha <= C e^{-rho z} at the nodes
  std::size_t species = 0;    // selects kernel, d, r
};
struct ScalarResult {
  std::vector<double> phi;
  double lambda0 = 0, B = 0, eps = 0, A = 0;
  int iterations = 0;
  double residual = 0;
};
using ScalarSolverFn = std::function<ScalarResult(const ScalarRequest&)>;

BoundPair build_bounds_E4(const ModelParams& p, const Environment& env, const Grid& grid, const ScalarSolverFn& solve);

struct InequalityCheck {
  std::string name;
  double worst = 0;
  double z = 0;
  bool pass = false;
};
struct VerificationReport {
  std::array<InequalityCheck, 6> checks;  // U1 U2 U3 L1 L2 L3
  bool ordering = true;
  double ordering_worst = 0;
  double ordering_z = 0;
  double tol = 0;
  bool pass() const;
};

VerificationReport verify_bounds(const BoundPair& pair, const std::array<DiscreteKernel, 3>& stencils, const Grid& grid,
                                 double tol, int kink_halfwidth = 2);

// max over [0, W] of f, with W = 50 / lambda_min; throws if f is still
// increasing in the last quarter of the window
double window_max(const std::function<double(double)>& f, double lambda_min);

}  // namespace fwave
