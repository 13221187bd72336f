#include "fwave/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fwave {

std::string to_string(Scheme s) { return s == Scheme::euler_upwind1 ? "euler_upwind1" : "rk2_upwind3"; }

struct SimSystem::Conv {
  std::array<std::unique_ptr<Convolver>, 3> c;
};

SimSystem::SimSystem(const WaveProblem& prob, Frame frame, Scheme scheme)
    : prob_(prob), frame_(frame), scheme_(scheme), conv_(std::make_unique<Conv>()) {
  const Grid& g = prob_.grid;
  for (int i = 0; i < 3; ++i) {
    const Kernel& k = prob_.kernels[i];
    conv_->c[i] = std::make_unique<Convolver>(discretize_kernel(k, g.h, k.compact() ? 0.0 : prob_.eps_tail), g.n);
  }
  if (frame_ == Frame::moving) {
    alpha_.resize(g.n);
    for (std::size_t j = 0; j < g.n; ++j) alpha_[j] = prob_.env(g.z(j));
  }
}

SimSystem::~SimSystem() = default;

void SimSystem::rhs(const Fields& U, double t, Fields& out) const {
  const Grid& g = prob_.grid;
  const ModelParams& p = prob_.params;
  std::size_t n = g.n;
  for (int i = 0; i < 3; ++i) {
    out[i].resize(n);
    conv_->c[i]->apply(U[i].data(), out[i].data());
  }
  for (std::size_t j = 0; j < n; ++j) {
    double al = frame_ == Frame::moving ? alpha_[j] : prob_.env(g.z(j) - p.s * t);
    State f = reaction(p, U[0][j], U[1][j], U[2][j], al);
    for (int i = 0; i < 3; ++i) out[i][j] = p.d[i] * (out[i][j] - U[i][j]) + f[i];
  }
  if (frame_ == Frame::fixed) return;
  // drift s U_z; information arrives from the right
  double c = p.s / g.h;
  for (int i = 0; i < 3; ++i) {
    const auto& u = U[i];
    auto at = [&](long j) {
      if (inflow_ && j >= static_cast<long>(n)) return (*inflow_)[i];
      return u[static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(n) - 1))];
    };
    for (std::size_t jj = 0; jj < n; ++jj) {
      long j = static_cast<long>(jj);
      double dz = scheme_ == Scheme::euler_upwind1
                      ? at(j + 1) - at(j)
                      : (-2 * at(j - 1) - 3 * at(j) + 6 * at(j + 1) - at(j + 2)) / 6;
      out[i][jj] += c * dz;
    }
  }
}

double stability_bound(const ModelParams& p, const Grid& g, double M, double amax, Frame frame) {
  double row1 = p.r[0] * (1 + (2 + p.k + p.a) * M) + p.r[0] * M * (p.k + p.a);
  double row2 = p.r[1] * (1 + (2 + p.h + p.a) * M) + p.r[1] * M * (p.h + p.a);
  double row3 = p.r[2] * (amax + (2 * p.b + 2) * M) + 2 * p.r[2] * p.b * M;
  double lip = std::max({row1, row2, row3});
  double dmax = std::max({p.d[0], p.d[1], p.d[2]});
  double adv = frame == Frame::moving ? p.s / g.h : 0.0;
  return 0.9 / (dmax + lip + adv);
}

namespace {

long clip_negative(Fields& U) {
  long c = 0;
  for (auto& comp : U)
    for (double& x : comp) {
      if (!std::isfinite(x) || x > 1e6) throw SimError("blow-up detected");
      if (x < 0) {
        if (x < -1e-12) ++c;
        x = 0;
      }
    }
  return c;
}

}  // namespace

SimState step_ide(const SimState& st, const SimSystem& sys) {
  SimState nx = st;
  Fields k1;
  sys.rhs(st.U, st.t, k1);
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < st.U[i].size(); ++j) nx.U[i][j] = st.U[i][j] + st.dt * k1[i][j];
  if (sys.scheme() == Scheme::rk2_upwind3) {
    Fields k2;
    sys.rhs(nx.U, st.t + st.dt, k2);
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < st.U[i].size(); ++j)
        nx.U[i][j] = 0.5 * st.U[i][j] + 0.5 * (nx.U[i][j] + st.dt * k2[i][j]);
  }
  nx.clips += clip_negative(nx.U);
  nx.t = st.t + st.dt;
  return nx;
}

SimResult run_simulation(const Fields& initial, const SimSystem& sys, const SimOptions& opt) {
  const WaveProblem& prob = sys.problem();
  const Grid& g = prob.grid;
  for (const auto& c : initial)
    if (c.size() != g.n) throw std::invalid_argument("initial data size differs from grid");
  double M = std::max(1.0, prob.params.a - 1), amax = 0;
  for (const auto& c : initial)
    for (double x : c) M = std::max(M, x);
  for (std::size_t j = 0; j < g.n; ++j) amax = std::max(amax, std::fabs(prob.env(g.z(j))));
  amax = std::max({amax, std::fabs(prob.env.alpha_minus()), std::fabs(prob.env.alpha_plus())});
  double dt = opt.dt > 0 ? opt.dt : opt.dt_fraction * stability_bound(prob.params, g, M, amax, sys.frame());
  long steps = static_cast<long>(std::ceil(opt.T / dt - 1e-12));
  dt = opt.T / static_cast<double>(steps);

  SimResult res;
  SimState st;
  st.frame = sys.frame();
  st.grid = g;
  st.U = initial;
  st.dt = dt;
  Fields at90;
  bool have90 = false;
  double next_snap = opt.snapshot_every > 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (long n = 0; n < steps; ++n) {
    if (!have90 && st.t >= 0.9 * opt.T - 0.5 * dt) {
      at90 = st.U;
      have90 = true;
    }
    if (st.t >= next_snap - 0.5 * dt) {
      res.snapshots.emplace_back(st.t, st.U);
      next_snap += opt.snapshot_every;
    }
    st = step_ide(st, sys);
  }
  st.t = opt.T;
  if (opt.snapshot_every > 0) res.snapshots.emplace_back(st.t, st.U);
  res.steps = steps;
  if (!have90) at90 = initial;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < g.n; ++j) res.freeze_metric = std::max(res.freeze_metric, std::fabs(st.U[i][j] - at90[i][j]));
  res.frozen = res.freeze_metric <= opt.freeze_tol;

  std::size_t edge = std::max<std::size_t>(1, g.n / 10);
  for (const auto& c : st.U) {
    auto lo = std::minmax_element(c.begin(), c.begin() + static_cast<long>(edge));
    auto hi = std::minmax_element(c.end() - static_cast<long>(edge), c.end());
    res.boundary_variation = std::max({res.boundary_variation, *lo.second - *lo.first, *hi.second - *hi.first});
  }
  if (sys.frame() == Frame::moving) res.residual_sup = interior_sup(residual(prob, st.U));
  res.final = std::move(st);
  if (opt.abort_on_boundary && res.boundary_variation > opt.boundary_tol)
    throw SimError("front within 10% of the domain edge: grow the domain");
  return res;
}

SimResult run_moving_frame(const Fields& initial, const WaveProblem& prob, const SimOptions& opt, Scheme scheme) {
  SimSystem sys(prob, Frame::moving, scheme);
  if (opt.inflow) sys.set_inflow(*opt.inflow);
  return run_simulation(initial, sys, opt);
}

Fields to_moving_frame(const SimState& fixed, double s, const Grid& moving) {
  Fields out;
  for (int i = 0; i < 3; ++i) {
    out[i].resize(moving.n);
    for (std::size_t j = 0; j < moving.n; ++j) out[i][j] = interpolate(fixed.grid, fixed.U[i], moving.z(j) + s * fixed.t);
  }
  return out;
}

std::string to_string(LimitClass c) {
  switch (c) {
    case LimitClass::E1: return "E1";
    case LimitClass::E2: return "E2";
    case LimitClass::E3: return "E3";
    case LimitClass::E4: return "E4";
    case LimitClass::trivial: return "trivial";
    case LimitClass::unclassified: return "unclassified";
  }
  return "?";
}

Classification classify_limit(const Fields& profile, const SteadyStates& st, double tol) {
  Classification out;
  std::size_t n = profile[0].size();
  std::size_t m = std::max<std::size_t>(1, n / 20);
  for (int i = 0; i < 3; ++i) {
    double l = 0, r = 0;
    for (std::size_t j = 0; j < m; ++j) {
      l += profile[i][j];
      r += profile[i][n - 1 - j];
    }
    out.left[i] = l / static_cast<double>(m);
    out.right[i] = r / static_cast<double>(m);
  }
  for (double x : out.left)
    if (std::fabs(x) > tol) return out;

  const std::pair<LimitClass, State> cand[] = {{LimitClass::E1, st.E1},
                                               {LimitClass::E2, st.E2},
                                               {LimitClass::E3, st.E3},
                                               {LimitClass::E4, st.E4},
                                               {LimitClass::trivial, {0, 0, 0}}};
  // relative distance; unit floor for zero components
  double best = std::numeric_limits<double>::infinity(), second = best;
  LimitClass bc = LimitClass::unclassified;
  for (const auto& [c, s] : cand) {
    double d = 0;
    for (int i = 0; i < 3; ++i) d = std::max(d, std::fabs(out.right[i] - s[i]) / std::max(1.0, std::fabs(s[i])));
    if (d < best) {
      second = best;
      best = d;
      bc = c;
    } else if (d < second) {
      second = d;
    }
  }
  out.distance = best;
  if (best > tol) return out;
  if (second <= tol && second - best <= 1e-15) return out;
  out.cls = bc;
  return out;
}

}  // namespace fwave
