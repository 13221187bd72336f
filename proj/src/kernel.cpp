#include "fwave/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fwave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// f(x) = sinh(x)/x and its first two derivatives
void sinhc(double x, double& f0, double& f1, double& f2) {
  double ax = std::fabs(x);
  if (ax < 0.1) {
    double x2 = x * x;
    f0 = 1 + x2 / 6 * (1 + x2 / 20 * (1 + x2 / 42 * (1 + x2 / 72)));
    f1 = x * (1.0 / 3 + x2 * (1.0 / 30 + x2 * (1.0 / 840 + x2 / 45360)));
    f2 = 1.0 / 3 + x2 * (1.0 / 10 + x2 * (1.0 / 168 + x2 / 6480));
    return;
  }
  double sh = std::sinh(x), ch = std::cosh(x);
  f0 = sh / x;
  f1 = (x * ch - sh) / (x * x);
  f2 = ((x * x + 2) * sh - 2 * x * ch) / (x * x * x);
}

// k-th lambda-derivative of the MGF of the uniform density on [c-eta, c+eta]
double box_moment(double c, double eta, double lambda, int k) {
  double f0, f1, f2;
  sinhc(eta * lambda, f0, f1, f2);
  double e = std::exp(lambda * c);
  switch (k) {
    case 0: return e * f0;
    case 1: return e * (c * f0 + eta * f1);
    default: return e * (c * c * f0 + 2 * c * eta * f1 + eta * eta * f2);
  }
}

double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

void require(bool c, const std::string& msg) {
  if (!c) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::two_bump: return "two_bump";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::tabulated: return "tabulated";
  }
  return "?";
}

Kernel Kernel::uniform(double half_width) {
  require(half_width > 0, "uniform kernel needs half_width > 0");
  Kernel k;
  k.family_ = KernelFamily::uniform;
  k.params_ = {half_width};
  return k;
}

Kernel Kernel::two_bump(double y_minus, double y_plus, double eta) {
  require(y_minus < 0 && y_plus > 0, "two_bump needs y_minus < 0 < y_plus");
  double wm = y_plus / (y_plus - y_minus);
  return two_bump(y_minus, y_plus, eta, wm, 1 - wm);
}

Kernel Kernel::two_bump(double y_minus, double y_plus, double eta, double w_minus, double w_plus) {
  require(y_minus < 0 && y_plus > 0, "two_bump needs y_minus < 0 < y_plus");
  require(eta > 0, "two_bump needs eta > 0");
  require(w_minus >= 0 && w_plus >= 0 && w_minus + w_plus > 0, "two_bump weights must be nonnegative");
  double s = w_minus + w_plus;
  Kernel k;
  k.family_ = KernelFamily::two_bump;
  k.params_ = {y_minus, y_plus, eta, w_minus / s, w_plus / s};
  return k;
}

Kernel Kernel::laplace(double rate) {
  require(rate > 0, "laplace kernel needs rate > 0");
  Kernel k;
  k.family_ = KernelFamily::laplace;
  k.params_ = {rate};
  return k;
}

Kernel Kernel::gaussian(double sigma) {
  require(sigma > 0, "gaussian kernel needs sigma > 0");
  Kernel k;
  k.family_ = KernelFamily::gaussian;
  k.params_ = {sigma};
  return k;
}

Kernel Kernel::tabulated(std::vector<double> offsets, std::vector<double> densities) {
  require(offsets.size() == densities.size() && offsets.size() >= 2,
          "tabulated kernel needs matching offset/density columns with at least 2 rows");
  for (std::size_t i = 1; i < offsets.size(); ++i)
    require(offsets[i] > offsets[i - 1], "tabulated offsets must be strictly increasing");
  for (double d : densities) require(d >= 0 && std::isfinite(d), "tabulated densities must be nonnegative");
  Kernel k;
  k.family_ = KernelFamily::tabulated;
  std::size_t n = offsets.size();
  k.width_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double left = i > 0 ? 0.5 * (offsets[i] - offsets[i - 1]) : 0.5 * (offsets[1] - offsets[0]);
    double right = i + 1 < n ? 0.5 * (offsets[i + 1] - offsets[i]) : 0.5 * (offsets[n - 1] - offsets[n - 2]);
    k.width_[i] = left + right;
  }
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += densities[i] * k.width_[i];
  require(total > 0, "tabulated kernel has zero mass");
  k.y_ = std::move(offsets);
  k.rho_.resize(n);
  k.m_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.rho_[i] = densities[i] / total;
    k.m_[i] = k.rho_[i] * k.width_[i];
  }
  return k;
}

Kernel Kernel::from_masses(std::vector<double> offsets, std::vector<double> masses, double cell) {
  require(offsets.size() == masses.size() && offsets.size() >= 2 && cell > 0, "bad atom table");
  Kernel k;
  k.family_ = KernelFamily::tabulated;
  k.y_ = std::move(offsets);
  k.m_ = std::move(masses);
  k.width_.assign(k.y_.size(), cell);
  k.rho_.resize(k.y_.size());
  for (std::size_t i = 0; i < k.y_.size(); ++i) k.rho_[i] = k.m_[i] / cell;
  return k;
}

Kernel Kernel::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open kernel table " + path);
  std::vector<double> y, d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a >> b)) continue;  // header
    y.push_back(a);
    d.push_back(b);
  }
  return tabulated(std::move(y), std::move(d));
}

double Kernel::density(double y) const {
  const auto& p = params_;
  switch (family_) {
    case KernelFamily::uniform:
      return std::fabs(y) <= p[0] ? 0.5 / p[0] : 0.0;
    case KernelFamily::two_bump: {
      double v = 0;
      if (std::fabs(y - p[0]) <= p[2]) v += p[3] * 0.5 / p[2];
      if (std::fabs(y - p[1]) <= p[2]) v += p[4] * 0.5 / p[2];
      return v;
    }
    case KernelFamily::laplace:
      return 0.5 * p[0] * std::exp(-p[0] * std::fabs(y));
    case KernelFamily::gaussian:
      return std::exp(-0.5 * y * y / (p[0] * p[0])) / (p[0] * std::sqrt(2 * M_PI));
    case KernelFamily::tabulated: {
      for (std::size_t i = 0; i < y_.size(); ++i)
        if (std::fabs(y - y_[i]) <= 0.5 * width_[i]) return rho_[i];
      return 0.0;
    }
  }
  return 0.0;
}

double Kernel::log_density(double y) const {
  const auto& p = params_;
  if (family_ == KernelFamily::laplace) return std::log(0.5 * p[0]) - p[0] * std::fabs(y);
  if (family_ == KernelFamily::gaussian) return -0.5 * y * y / (p[0] * p[0]) - std::log(p[0] * std::sqrt(2 * M_PI));
  return std::log(density(y));
}

double Kernel::mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  const auto& p = params_;
  switch (family_) {
    case KernelFamily::uniform:
      return overlap(lo, hi, -p[0], p[0]) * 0.5 / p[0];
    case KernelFamily::two_bump:
      return p[3] * overlap(lo, hi, p[0] - p[2], p[0] + p[2]) * 0.5 / p[2] +
             p[4] * overlap(lo, hi, p[1] - p[2], p[1] + p[2]) * 0.5 / p[2];
    case KernelFamily::laplace: {
      double c = p[0];
      auto cdf = [c](double y) { return y <= 0 ? 0.5 * std::exp(c * y) : 1 - 0.5 * std::exp(-c * y); };
      auto ccdf = [c](double y) { return y >= 0 ? 0.5 * std::exp(-c * y) : 1 - 0.5 * std::exp(c * y); };
      if (hi <= 0) return cdf(hi) - cdf(lo);
      if (lo >= 0) return ccdf(lo) - ccdf(hi);
      return 1 - cdf(lo) - ccdf(hi);
    }
    case KernelFamily::gaussian: {
      double q = 1 / (p[0] * std::sqrt(2.0));
      if (hi <= 0) return 0.5 * (std::erfc(-hi * q) - std::erfc(-lo * q));
      if (lo >= 0) return 0.5 * (std::erfc(lo * q) - std::erfc(hi * q));
      return 1 - 0.5 * std::erfc(-lo * q) - 0.5 * std::erfc(hi * q);
    }
    case KernelFamily::tabulated: {
      double m = 0;
      for (std::size_t i = 0; i < y_.size(); ++i)
        m += rho_[i] * overlap(lo, hi, y_[i] - 0.5 * width_[i], y_[i] + 0.5 * width_[i]);
      return m;
    }
  }
  return 0.0;
}

bool Kernel::compact() const {
  return family_ != KernelFamily::laplace && family_ != KernelFamily::gaussian;
}

double Kernel::support_bound() const {
  const auto& p = params_;
  switch (family_) {
    case KernelFamily::uniform: return p[0];
    case KernelFamily::two_bump: return std::max(-p[0], p[1]) + p[2];
    case KernelFamily::tabulated:
      return std::max(-(y_.front() - 0.5 * width_.front()), y_.back() + 0.5 * width_.back());
    default: return kInf;
  }
}

MgfDomain Kernel::mgf_domain() const {
  if (family_ == KernelFamily::laplace) return {-params_[0], params_[0]};
  return {-kInf, kInf};
}

std::vector<double> Kernel::breakpoints() const {
  const auto& p = params_;
  switch (family_) {
    case KernelFamily::uniform: return {-p[0], p[0]};
    case KernelFamily::two_bump: {
      std::vector<double> b{p[0] - p[2], p[0] + p[2], p[1] - p[2], p[1] + p[2]};
      std::sort(b.begin(), b.end());
      return b;
    }
    case KernelFamily::laplace: return {0.0};
    case KernelFamily::gaussian: return {0.0};
    case KernelFamily::tabulated: {
      std::vector<double> b;
      for (std::size_t i = 0; i < y_.size(); ++i) b.push_back(y_[i] - 0.5 * width_[i]);
      b.push_back(y_.back() + 0.5 * width_.back());
      return b;
    }
  }
  return {};
}

bool Kernel::operator==(const Kernel& o) const {
  return family_ == o.family_ && params_ == o.params_ && y_ == o.y_ && rho_ == o.rho_;
}

namespace {

double moment_closed(const Kernel& k, double lambda, int order) {
  if (!k.mgf_domain().contains(lambda)) {
    if (order == 0) return kInf;
    throw DomainError("lambda outside the MGF domain");
  }
  const auto& p = k.params();
  switch (k.family()) {
    case KernelFamily::uniform:
      return box_moment(0.0, p[0], lambda, order);
    case KernelFamily::two_bump:
      return p[3] * box_moment(p[0], p[2], lambda, order) + p[4] * box_moment(p[1], p[2], lambda, order);
    case KernelFamily::laplace: {
      double c2 = p[0] * p[0], l2 = lambda * lambda, den = c2 - l2;
      if (order == 0) return c2 / den;
      if (order == 1) return 2 * lambda * c2 / (den * den);
      return 2 * c2 * (c2 + 3 * l2) / (den * den * den);
    }
    case KernelFamily::gaussian: {
      double s2 = p[0] * p[0];
      double e = std::exp(0.5 * s2 * lambda * lambda);
      if (order == 0) return e;
      if (order == 1) return s2 * lambda * e;
      return (s2 + s2 * s2 * lambda * lambda) * e;
    }
    case KernelFamily::tabulated: {
      double v = 0;
      const auto& y = k.offsets();
      const auto& m = k.masses();
      for (std::size_t i = 0; i < y.size(); ++i) {
        double t = m[i] * std::exp(lambda * y[i]);
        if (order >= 1) t *= y[i];
        if (order >= 2) t *= y[i];
        v += t;
      }
      return v;
    }
  }
  return 0.0;
}

}  // namespace

double mgf(const Kernel& k, double lambda) {
  if (lambda == 0.0 && k.family() != KernelFamily::tabulated) return 1.0;
  return moment_closed(k, lambda, 0);
}

double mgf_derivative(const Kernel& k, double lambda) { return moment_closed(k, lambda, 1); }

double mgf_second_moment(const Kernel& k, double lambda) { return moment_closed(k, lambda, 2); }

double mgf_by_quadrature(const Kernel& k, double lambda, int moment) {
  if (!k.mgf_domain().contains(lambda)) {
    if (moment == 0) return kInf;
    throw DomainError("lambda outside the MGF domain");
  }
  auto f = [&](double y) {
    double ld = k.log_density(y);
    if (ld == -kInf) return 0.0;
    // near the domain edge e^{ly} overflows where the density has underflowed
    double v = std::exp(ld + lambda * y);
    for (int i = 0; i < moment; ++i) v *= y;
    return v;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  std::vector<double> pts = k.breakpoints();
  if (k.family() == KernelFamily::gaussian) {
    double sig = k.params()[0];
    double c = lambda * sig * sig;
    pts = {std::min(0.0, c) - 8 * sig, std::min(0.0, c), std::max(0.0, c), std::max(0.0, c) + 8 * sig};
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += GK::integrate(f, pts[i], pts[i + 1], 12, 1e-13);
  if (!k.compact()) {
    boost::math::quadrature::exp_sinh<double> es;
    double a = pts.front(), b = pts.back();
    // stretch each tail by its exponential decay length; near the domain edge it is long
    MgfDomain dom = k.mgf_domain();
    double sr = std::isfinite(dom.hi) ? 1 / std::min(1.0, dom.hi - lambda) : 1.0;
    double sl = std::isfinite(dom.lo) ? 1 / std::min(1.0, lambda - dom.lo) : 1.0;
    total += sr * es.integrate([&](double t) { return f(b + sr * t); }, 0.0, kInf);
    total += sl * es.integrate([&](double t) { return f(a - sl * t); }, 0.0, kInf);
  }
  return total;
}

KernelReport validate_kernel(const Kernel& k) {
  KernelReport r;
  r.compact = k.compact();
  r.domain = k.mgf_domain();
  if (k.family() == KernelFamily::tabulated) {
    r.mass = 0;
    r.mean = 0;
    for (std::size_t i = 0; i < k.offsets().size(); ++i) {
      r.mass += k.masses()[i];
      r.mean += k.masses()[i] * k.offsets()[i];
    }
  } else {
    r.mass = mgf_by_quadrature(k, 0.0, 0);
    r.mean = mgf_by_quadrature(k, 0.0, 1);
  }
  r.unit_mass = std::fabs(r.mass - 1) <= 1e-12;
  r.zero_mean = std::fabs(r.mean) <= 1e-10;

  switch (k.family()) {
    case KernelFamily::two_bump:
      r.positivity = k.density(k.params()[0]) > 0 && k.density(k.params()[1]) > 0;
      break;
    case KernelFamily::tabulated: {
      bool neg = false, pos = false;
      for (std::size_t i = 0; i < k.offsets().size(); ++i) {
        if (k.masses()[i] <= 0) continue;
        if (k.offsets()[i] < 0) neg = true;
        if (k.offsets()[i] > 0) pos = true;
      }
      r.positivity = neg && pos;
      break;
    }
    default:
      r.positivity = true;
  }

  r.mgf_window = r.domain.lo < 0 && r.domain.hi > 0;
  for (double l : {-0.5, 0.5, -1.0, 1.0}) {
    double lam = std::isfinite(r.domain.hi) && l > 0 ? l * r.domain.hi
                 : std::isfinite(r.domain.lo) && l < 0 ? -l * r.domain.lo
                                                       : l;
    if (!std::isfinite(mgf(k, lam * 0.999))) r.mgf_window = false;
  }
  r.blowup = true;
  for (double end : {r.domain.lo, r.domain.hi}) {
    if (!std::isfinite(end)) continue;
    double prev = 0;
    for (int e = 2; e <= 8; ++e) {
      double v = mgf(k, end * (1 - std::pow(10.0, -e)));
      if (!(v > prev)) r.blowup = false;
      prev = v;
    }
    if (prev < 1e6) r.blowup = false;
  }

  if (!r.unit_mass) r.failures.push_back("unit mass");
  if (!r.zero_mean) r.failures.push_back("zero mean");
  if (!r.positivity) r.failures.push_back("positivity on two intervals around 0");
  if (!r.mgf_window) r.failures.push_back("MGF finite near 0");
  if (!r.blowup) r.failures.push_back("MGF blow-up at finite endpoints");
  return r;
}

int DiscreteKernel::radius() const {
  int last = first + static_cast<int>(weights.size()) - 1;
  return std::max(std::abs(first), std::abs(last));
}

DiscreteKernel discretize_kernel(const Kernel& k, double h, double eps_tail, StencilAlignment align) {
  if (!(h > 0)) throw std::invalid_argument("discretize_kernel needs h > 0");
  if (!(eps_tail >= 0 && eps_tail < 1)) throw std::invalid_argument("discretize_kernel needs 0 <= eps_tail < 1");
  if (!k.compact() && !(eps_tail > 0))
    throw std::invalid_argument("non-compact kernel needs eps_tail > 0");
  double shift = align == StencilAlignment::nodes ? 0.5 : 0.0;
  // cells: index m covers [(m - shift) h, (m - shift + 1) h]
  int lo_idx, hi_idx;
  double discarded = 0;
  if (k.compact()) {
    double S = k.support_bound();
    hi_idx = static_cast<int>(std::ceil(S / h + shift)) + 1;
    lo_idx = -hi_idx;
  } else {
    int K = 0;
    for (;; ++K) {
      double R = (K + 0.5) * h;
      double tail = k.mass(-kInf, -R) + k.mass(R, kInf);
      if (tail <= eps_tail) {
        discarded = tail;
        break;
      }
      if (K > 10000000) throw std::runtime_error("stencil radius diverged");
    }
    if (align == StencilAlignment::nodes) {
      lo_idx = -K;
      hi_idx = K;
    } else {
      lo_idx = -K;
      hi_idx = K - 1;
    }
  }
  std::vector<double> w;
  for (int m = lo_idx; m <= hi_idx; ++m) w.push_back(k.mass((m - shift) * h, (m - shift + 1) * h));
  // drop empty end cells
  std::size_t a = 0, b = w.size();
  while (a < b && w[a] == 0) ++a;
  while (b > a && w[b - 1] == 0) --b;
  DiscreteKernel dk;
  dk.h = h;
  dk.alignment = align;
  dk.first = lo_idx + static_cast<int>(a);
  dk.weights.assign(w.begin() + a, w.begin() + b);
  dk.eps_tail = eps_tail;
  dk.discarded = discarded;
  if (dk.weights.size() < 3) throw std::invalid_argument("stencil has fewer than 3 points; refine h");

  auto normalize = [&dk] {
    double s = std::accumulate(dk.weights.begin(), dk.weights.end(), 0.0);
    for (double& x : dk.weights) x /= s;
  };
  normalize();
  // exponential tilt w e^{theta y} to remove the residual first moment
  auto moments = [&dk](double theta, double& m0, double& m1, double& m2) {
    m0 = m1 = m2 = 0;
    for (std::size_t i = 0; i < dk.size(); ++i) {
      double y = dk.offset(i);
      double t = dk.weights[i] * std::exp(theta * y);
      m0 += t;
      m1 += t * y;
      m2 += t * y * y;
    }
  };
  double m0, m1, m2;
  moments(0, m0, m1, m2);
  if (std::fabs(m1) > 1e-15) {
    double theta = 0;
    for (int it = 0; it < 50 && std::fabs(m1 / m0) > 1e-16; ++it) {
      theta -= m1 / m2;
      moments(theta, m0, m1, m2);
    }
    for (std::size_t i = 0; i < dk.size(); ++i) dk.weights[i] *= std::exp(theta * dk.offset(i));
    normalize();
  }
  return dk;
}

Kernel effective_kernel(const DiscreteKernel& dk) {
  std::vector<double> y(dk.size());
  for (std::size_t i = 0; i < dk.size(); ++i) y[i] = dk.offset(i);
  return Kernel::from_masses(std::move(y), dk.weights, dk.h);
}

}  // namespace fwave
