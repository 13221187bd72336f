#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwave/bounds.hpp"
#include "fwave/environment.hpp"
#include "fwave/equilibria.hpp"
#include "fwave/grid.hpp"
#include "fwave/kernel.hpp"

namespace fwave {

struct SolverError : std::runtime_error {
  double last_change;
  SolverError(const std::string& m, double c) : std::runtime_error(m), last_change(c) {}
};

using Fields = std::array<std::vector<double>, 3>;

struct SolverContext {
  double beta = 0;
  double M = 1;
  std::array<double, 3> sigma{};
  // truncation of the half-line integral: e^{-beta U / s} <= 1e-14
  double truncation = 0;
  std::string closure = "hold F at the right edge";
};

// beta = beta_scale * max sigma_i
SolverContext make_context(const ModelParams& p, double M, double beta_scale = 1.0);

// Everything that defines the discrete wave problem. Kernels are
// discretized at grid.h when the problem is set up.
struct WaveProblem {
  ModelParams params;
  Environment env;
  std::array<Kernel, 3> kernels;
  Grid grid;
  double eps_tail = 1e-12;
};

struct WaveProfile {
  Grid grid;
  Fields phi, residual;
  int iterations = 0;
  double beta = 0;
  double sup_change = 0;
  long clips_total = 0;   // nontrivial clips over all sweeps
  long clips_final = 0;   // nontrivial clips in the last sweep
  double clip_max_final = 0;
  bool refined = false;   // stall rule halved h
  double residual_sup = 0;
};

Fields apply_P(const WaveProblem& prob, const SolverContext& ctx, const Fields& phi);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200000;
  double clip_tol = 1e-9;
  double beta_scale = 1.0;
  bool allow_refine = true;
};

WaveProfile solve_wave(const BoundPair& pair, const WaveProblem& prob, const SolveOptions& opt = {});

// Residual of the wave system at the nodes; 5 nodes at each edge are zeroed.
Fields residual(const WaveProblem& prob, const Fields& phi);
double interior_sup(const Fields& r);

// Scalar forced wave: -s phi' = d (J*phi - phi) + r phi (alpha - phi).
struct ScalarProblem {
  std::vector<double> alpha;  // at the grid nodes
  double alpha_plus = 1;
  DecayData decay;            // alpha_plus - alpha <= C e^{-rho z}
  DiscreteKernel stencil;
  Kernel kernel;              // for the MGF used by lambda0 and eps
  double d = 1, r = 1, s = 1;
  Grid grid;
};

ScalarResult solve_scalar(const ScalarProblem& sp, const SolveOptions& opt = {});
std::vector<double> scalar_residual(const ScalarProblem& sp, const std::vector<double>& phi);

// Scalar solver bound to the species data of a wave problem, for the E4 cascade.
ScalarSolverFn make_scalar_solver(const WaveProblem& prob, const SolveOptions& opt = {});

// Least-squares decay rate of log(v) over nodes with z in [lo, hi].
double tail_decay_rate(const Grid& g, const std::vector<double>& v, double lo, double hi);

}  // namespace fwave
