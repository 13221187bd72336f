#pragma once

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwave/equilibria.hpp"
#include "fwave/grid.hpp"
#include "fwave/wave_solver.hpp"

namespace fwave {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Frame { fixed, moving };
// euler_upwind1: forward Euler, first-order upwind drift.
// rk2_upwind3: two-stage SSP Runge-Kutta, third-order upwind-biased drift.
enum class Scheme { euler_upwind1, rk2_upwind3 };
std::string to_string(Scheme s);

struct SimState {
  Frame frame = Frame::moving;
  Grid grid;
  double t = 0;
  Fields U;  // u, v, w
  double dt = 0;
  long clips = 0;  // negative values below -1e-12 set to zero
};

// Convolvers and cached environment for one (problem, frame) pair.
class SimSystem {
 public:
  SimSystem(const WaveProblem& prob, Frame frame, Scheme scheme = Scheme::euler_upwind1);
  ~SimSystem();
  SimSystem(const SimSystem&) = delete;
  SimSystem& operator=(const SimSystem&) = delete;

  const WaveProblem& problem() const { return prob_; }
  Frame frame() const { return frame_; }
  Scheme scheme() const { return scheme_; }

  // Far-field state fed in through the right edge of the drift stencil.
  // Without it the edge value is held, which lets an unstable edge mode
  // (e.g. predators at E1) grow in place and invade the domain.
  void set_inflow(const State& s) { inflow_ = s; }

  // time derivative at time t
  void rhs(const Fields& U, double t, Fields& out) const;

 private:
  std::optional<State> inflow_;
  WaveProblem prob_;
  Frame frame_;
  Scheme scheme_;
  std::vector<double> alpha_;  // moving frame only
  struct Conv;
  std::unique_ptr<Conv> conv_;
};

// 0.9 / (max d + reaction Lipschitz bound + s/h); s/h only in the moving frame
double stability_bound(const ModelParams& p, const Grid& g, double M, double alpha_abs_max, Frame frame);

SimState step_ide(const SimState& st, const SimSystem& sys);

struct SimOptions {
  double T = 100;
  double dt = 0;            // 0 picks dt_fraction * stability bound
  double dt_fraction = 0.5;
  double snapshot_every = 0;  // 0 disables snapshots
  double freeze_tol = 1e-6;
  bool abort_on_boundary = true;
  double boundary_tol = 1e-3;
  std::optional<State> inflow;  // moving frame: state at +infinity
};

struct SimResult {
  SimState final;
  long steps = 0;
  double freeze_metric = 0;  // sup |U(T) - U(0.9 T)|
  bool frozen = false;
  double residual_sup = 0;   // wave-system residual of the final profile
  double boundary_variation = 0;
  std::vector<std::pair<double, Fields>> snapshots;
};

// initial data on prob.grid; integrates in the frame of sys
SimResult run_simulation(const Fields& initial, const SimSystem& sys, const SimOptions& opt);
SimResult run_moving_frame(const Fields& initial, const WaveProblem& prob, const SimOptions& opt,
                           Scheme scheme = Scheme::euler_upwind1);

// fixed-frame state sampled at x = z + s t on the grid of `moving`
Fields to_moving_frame(const SimState& fixed, double s, const Grid& moving);

enum class LimitClass { E1, E2, E3, E4, trivial, unclassified };
std::string to_string(LimitClass c);

struct Classification {
  LimitClass cls = LimitClass::unclassified;
  State left{}, right{};
  double distance = 0;
};

Classification classify_limit(const Fields& profile, const SteadyStates& st, double tol);

}  // namespace fwave
