#include "fwave/wave_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>

#include <boost/math/quadrature/gauss.hpp>

#include "fwave/spectral.hpp"

namespace fwave {

namespace {

// Backward recurrence for psi(z) = (1/s) int_0^inf e^{-beta u/s} F(z+u) du,
// F cubic on each cell through the four surrounding nodes.
struct HalfLine {
  std::size_t n;
  double s, beta, decay;
  double c[4];

  HalfLine(std::size_t n_, double h, double s_, double beta_) : n(n_), s(s_), beta(beta_) {
    decay = std::exp(-beta * h / s);
    const double nodes[4] = {-h, 0, h, 2 * h};
    for (int k = 0; k < 4; ++k) {
      auto ell = [&](double u) {
        double v = 1;
        for (int m = 0; m < 4; ++m)
          if (m != k) v *= (u - nodes[m]) / (nodes[k] - nodes[m]);
        return v * std::exp(-beta * u / s);
      };
      c[k] = boost::math::quadrature::gauss<double, 20>::integrate(ell, 0.0, h) / s;
    }
  }

  void operator()(const double* F, double* out) const {
    out[n - 1] = F[n - 1] / beta;
    for (std::size_t j = n - 1; j-- > 0;) {
      std::size_t jm = j == 0 ? 0 : j - 1;
      std::size_t jp2 = std::min(j + 2, n - 1);
      out[j] = decay * out[j + 1] + c[0] * F[jm] + c[1] * F[j] + c[2] * F[j + 1] + c[3] * F[jp2];
    }
  }
};

struct System {
  Grid grid;
  ModelParams p;
  std::vector<double> alpha;
  std::array<std::unique_ptr<Convolver>, 3> conv;

  System(const WaveProblem& prob, const Grid& g) : grid(g), p(prob.params) {
    alpha.resize(g.n);
    for (std::size_t j = 0; j < g.n; ++j) alpha[j] = prob.env(g.z(j));
    std::array<DiscreteKernel, 3> st;
    for (int i = 0; i < 3; ++i) {
      st[i] = discretize_kernel(prob.kernels[i], g.h, prob.kernels[i].compact() ? 0.0 : prob.eps_tail);
      conv[i] = std::make_unique<Convolver>(st[i], g.n);
    }
  }

  // dispersal + reaction at every node
  Fields rhs(const Fields& phi) const {
    Fields out;
    for (int i = 0; i < 3; ++i) out[i] = conv[i]->apply(phi[i]);
    for (std::size_t j = 0; j < grid.n; ++j) {
      State f = reaction(p, phi[0][j], phi[1][j], phi[2][j], alpha[j]);
      for (int i = 0; i < 3; ++i) out[i][j] = p.d[i] * (out[i][j] - phi[i][j]) + f[i];
    }
    return out;
  }

  Fields apply_P(const Fields& phi, double beta) const {
    Fields F = rhs(phi);
    HalfLine hl(grid.n, grid.h, p.s, beta);
    Fields out;
    for (int i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < grid.n; ++j) F[i][j] += beta * phi[i][j];
      out[i].resize(grid.n);
      hl(F[i].data(), out[i].data());
    }
    return out;
  }
};

double fd_slope(const std::vector<double>& v, std::size_t j, double h) {
  return (-v[j + 2] + 8 * v[j + 1] - 8 * v[j - 1] + v[j - 2]) / (12 * h);
}

constexpr std::size_t kEdge = 5;

// sup-change held within a 1% band for 50 iterations
bool plateau(const std::deque<double>& hist) {
  if (hist.size() < 51) return false;
  auto [lo, hi] = std::minmax_element(hist.begin(), hist.end());
  return *lo >= 0.99 * *hi;
}

std::vector<double> resample(const Grid& from, const std::vector<double>& v, const Grid& to) {
  std::vector<double> out(to.n);
  for (std::size_t j = 0; j < to.n; ++j) out[j] = interpolate(from, v, to.z(j));
  return out;
}

}  // namespace

SolverContext make_context(const ModelParams& p, double M, double beta_scale) {
  SolverContext c;
  c.M = M;
  c.sigma = {p.d[0] + p.r[0] * (2 * M + p.k * M + 1), p.d[1] + p.r[1] * (2 * M + p.h * M + 1),
             p.d[2] + p.r[2] * M * (p.b + 3)};
  c.beta = beta_scale * std::max({c.sigma[0], c.sigma[1], c.sigma[2]});
  c.truncation = 14 * std::log(10.0) * p.s / c.beta;
  return c;
}

Fields apply_P(const WaveProblem& prob, const SolverContext& ctx, const Fields& phi) {
  System sys(prob, prob.grid);
  return sys.apply_P(phi, ctx.beta);
}

Fields residual(const WaveProblem& prob, const Fields& phi) {
  System sys(prob, prob.grid);
  Fields r = sys.rhs(phi);
  std::size_t n = prob.grid.n;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j < kEdge || j + kEdge >= n)
        r[i][j] = 0;
      else
        r[i][j] += prob.params.s * fd_slope(phi[i], j, prob.grid.h);
    }
  return r;
}

double interior_sup(const Fields& r) {
  double m = 0;
  for (const auto& c : r)
    for (double x : c) m = std::max(m, std::fabs(x));
  return m;
}

WaveProfile solve_wave(const BoundPair& pair, const WaveProblem& prob_in, const SolveOptions& opt) {
  WaveProblem prob = prob_in;
  prob.params.s = pair.params.s;
  Grid g = prob.grid;
  auto sample = [&](const Grid& gr, Fields& lo, Fields& up) {
    for (int i = 0; i < 3; ++i) {
      lo[i].resize(gr.n);
      up[i].resize(gr.n);
      for (std::size_t j = 0; j < gr.n; ++j) {
        double z = gr.z(j);
        lo[i][j] = pair.lower[i](z);
        up[i][j] = pair.upper[i](z);
      }
    }
  };
  Fields lo, up;
  sample(g, lo, up);
  double M = 0;
  for (const auto& c : up)
    for (double x : c) M = std::max(M, x);
  SolverContext ctx = make_context(prob.params, M, opt.beta_scale);
  auto sys = std::make_unique<System>(prob, g);

  WaveProfile out;
  out.beta = ctx.beta;
  Fields phi = lo;
  std::deque<double> hist;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Fields next = sys->apply_P(phi, ctx.beta);
    double change = 0;
    long clips = 0;
    double clip_max = 0;
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < g.n; ++j) {
        double x = next[i][j];
        double c = std::min(std::max(x, lo[i][j]), up[i][j]);
        double moved = std::fabs(c - x);
        if (moved > opt.clip_tol) ++clips;
        clip_max = std::max(clip_max, moved);
        change = std::max(change, std::fabs(c - phi[i][j]));
        next[i][j] = c;
      }
    phi = std::move(next);
    out.clips_total += clips;
    out.clips_final = clips;
    out.clip_max_final = clip_max;
    out.iterations = it;
    out.sup_change = change;
    if (change <= opt.tol) break;

    hist.push_back(change);
    if (hist.size() > 51) hist.pop_front();
    if (plateau(hist)) {
      if (!opt.allow_refine || out.refined) throw SolverError("wave iteration stalled", change);
      Grid fine(g.L, 0.5 * g.h);
      for (int i = 0; i < 3; ++i) phi[i] = resample(g, phi[i], fine);
      g = fine;
      prob.grid = g;
      sample(g, lo, up);
      for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < g.n; ++j) phi[i][j] = std::min(std::max(phi[i][j], lo[i][j]), up[i][j]);
      sys = std::make_unique<System>(prob, g);
      out.refined = true;
      hist.clear();
    }
    if (it == opt.max_iter) throw SolverError("wave iteration hit max_iter", change);
  }
  out.grid = g;
  out.phi = phi;
  out.residual = residual(prob, phi);
  out.residual_sup = interior_sup(out.residual);
  return out;
}

// ---------------------------------------------------------------- scalar

std::vector<double> scalar_residual(const ScalarProblem& sp, const std::vector<double>& phi) {
  Convolver conv(sp.stencil, sp.grid.n);
  std::vector<double> r = conv.apply(phi);
  std::size_t n = sp.grid.n;
  for (std::size_t j = 0; j < n; ++j) {
    if (j < kEdge || j + kEdge >= n) {
      r[j] = 0;
      continue;
    }
    r[j] = sp.d * (r[j] - phi[j]) + sp.r * phi[j] * (sp.alpha[j] - phi[j]) + sp.s * fd_slope(phi, j, sp.grid.h);
  }
  return r;
}

ScalarResult solve_scalar(const ScalarProblem& sp, const SolveOptions& opt) {
  if (sp.alpha.size() != sp.grid.n) throw std::invalid_argument("scalar problem: alpha size differs from grid");
  if (!(sp.alpha_plus > 0)) throw std::invalid_argument("scalar problem needs alpha(+inf) > 0");
  if (!(sp.decay.rho > 0 && sp.decay.C > 0)) throw std::invalid_argument("scalar problem needs decay data C, rho > 0");
  double gam = sp.alpha_plus, rho = sp.decay.rho;
  CharFunction g{&sp.kernel, sp.d, sp.s, 0.0};
  std::vector<double> uppers{rho};
  if (std::isfinite(sp.kernel.mgf_domain().hi)) uppers.push_back(sp.kernel.mgf_domain().hi);
  ScalarResult res;
  res.lambda0 = lambda0_pick(g, uppers);
  double l0 = res.lambda0;
  res.eps = 0.5 * (-g(l0)) / (sp.r * std::pow(gam, rho / l0));
  res.A = std::log(sp.decay.C / res.eps) / rho;
  res.B = std::exp(l0 * res.A);

  std::size_t n = sp.grid.n;
  std::vector<double> lo(n);
  double amax = gam;
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = std::max(gam - std::exp(-l0 * (sp.grid.z(j) - res.A)), 0.0);
    amax = std::max(amax, std::fabs(sp.alpha[j]));
  }
  double beta = sp.d + sp.r * (2 * gam + amax);
  Convolver conv(sp.stencil, n);
  HalfLine hl(n, sp.grid.h, sp.s, beta);
  std::vector<double> phi = lo, F(n), next(n);
  std::deque<double> hist;
  for (int it = 1; it <= opt.max_iter; ++it) {
    conv.apply(phi.data(), F.data());
    for (std::size_t j = 0; j < n; ++j)
      F[j] = beta * phi[j] + sp.d * (F[j] - phi[j]) + sp.r * phi[j] * (sp.alpha[j] - phi[j]);
    hl(F.data(), next.data());
    double change = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double c = std::min(std::max(next[j], lo[j]), gam);
      change = std::max(change, std::fabs(c - phi[j]));
      phi[j] = c;
    }
    res.iterations = it;
    if (change <= opt.tol) break;
    hist.push_back(change);
    if (hist.size() > 51) hist.pop_front();
    if (plateau(hist)) throw SolverError("scalar iteration stalled", change);
    if (it == opt.max_iter) throw SolverError("scalar iteration hit max_iter", change);
  }
  res.phi = phi;
  auto r = scalar_residual(sp, phi);
  for (double x : r) res.residual = std::max(res.residual, std::fabs(x));
  return res;
}

ScalarSolverFn make_scalar_solver(const WaveProblem& prob, const SolveOptions& opt) {
  return [prob, opt](const ScalarRequest& q) {
    ScalarProblem sp;
    std::size_t i = q.species;
    sp.alpha = q.alpha;
    sp.alpha_plus = q.alpha_plus;
    sp.decay = q.decay;
    sp.kernel = prob.kernels[i];
    sp.stencil = discretize_kernel(sp.kernel, prob.grid.h, sp.kernel.compact() ? 0.0 : prob.eps_tail);
    sp.d = prob.params.d[i];
    sp.r = prob.params.r[i];
    sp.s = prob.params.s;
    sp.grid = prob.grid;
    return solve_scalar(sp, opt);
  };
}

double tail_decay_rate(const Grid& g, const std::vector<double>& v, double lo, double hi) {
  std::vector<double> zs, ys;
  for (std::size_t j = 0; j < g.n; ++j) {
    double z = g.z(j);
    if (z < lo || z > hi) continue;
    if (!(v[j] > 0)) throw std::domain_error("tail_decay_rate: non-positive value in window");
    zs.push_back(z);
    ys.push_back(std::log(v[j]));
  }
  if (zs.size() < 2) throw std::invalid_argument("tail_decay_rate: window holds fewer than two nodes");
  double zm = 0, ym = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    zm += zs[i];
    ym += ys[i];
  }
  zm /= zs.size();
  ym /= zs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    sxy += (zs[i] - zm) * (ys[i] - ym);
    sxx += (zs[i] - zm) * (zs[i] - zm);
  }
  return -sxy / sxx;
}

}  // namespace fwave
