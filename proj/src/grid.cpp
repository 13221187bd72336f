#include "fwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace fwave {

Grid::Grid(double L_, double h_) : L(L_), h(h_) {
  if (!(L > 0 && h > 0)) throw std::invalid_argument("grid needs L > 0 and h > 0");
  double m = 2 * L / h;
  n = static_cast<std::size_t>(std::llround(m)) + 1;
  if (std::fabs(m - std::round(m)) > 1e-9 * m) throw std::invalid_argument("2L must be a multiple of h");
}

std::vector<double> Grid::nodes() const {
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = this->z(j);
  return z;
}

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
// smallest 7-smooth length >= n; FFTW is fast on these
std::size_t good_size(std::size_t n) {
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}
}  // namespace

struct Convolver::Fft {
  std::size_t N = 0, R = 0;
  double* buf = nullptr;
  fftw_complex* spec = nullptr;
  fftw_complex* kspec = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  ~Fft() {
    std::lock_guard<std::mutex> lk(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    fftw_free(buf);
    fftw_free(spec);
    fftw_free(kspec);
  }
};

Convolver::Convolver(const DiscreteKernel& dk, std::size_t n, Method m)
    : w_(dk.weights), first_(dk.first), n_(n), method_(m) {
  if (dk.alignment != StencilAlignment::nodes) throw std::invalid_argument("convolution needs a node-aligned stencil");
  if (method_ == Method::automatic) method_ = w_.size() > 400 ? Method::fft : Method::direct;
  if (method_ == Method::fft) {
    fft_ = std::make_unique<Fft>();
    std::size_t R = static_cast<std::size_t>(dk.radius());
    fft_->R = R;
    fft_->N = good_size(n + 2 * R + w_.size());
    std::size_t N = fft_->N;
    std::lock_guard<std::mutex> lk(planner_mutex());
    fft_->buf = fftw_alloc_real(N);
    fft_->spec = fftw_alloc_complex(N / 2 + 1);
    fft_->kspec = fftw_alloc_complex(N / 2 + 1);
    fft_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(N), fft_->buf, fft_->spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fft_->bwd = fftw_plan_dft_c2r_1d(static_cast<int>(N), fft_->spec, fft_->buf, FFTW_ESTIMATE | FFTW_UNALIGNED);
    std::fill(fft_->buf, fft_->buf + N, 0.0);
    std::copy(w_.begin(), w_.end(), fft_->buf);
    fftw_execute(fft_->fwd);
    std::memcpy(fft_->kspec, fft_->spec, sizeof(fftw_complex) * (N / 2 + 1));
  }
}

Convolver::~Convolver() = default;

void Convolver::apply(const double* in, double* out) const {
  std::size_t n = n_;
  if (method_ == Method::direct) {
    int R = 0;
    for (std::size_t i = 0; i < w_.size(); ++i) R = std::max(R, std::abs(first_ + static_cast<int>(i)));
    std::vector<double> e(n + 2 * static_cast<std::size_t>(R));
    for (std::size_t k = 0; k < e.size(); ++k) {
      long idx = static_cast<long>(k) - R;
      e[k] = in[std::clamp<long>(idx, 0, static_cast<long>(n) - 1)];
    }
    std::fill(out, out + n, 0.0);
    // blocked so the output chunk stays in L1 across the weight loop
    constexpr std::size_t kBlock = 512;
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
      std::size_t j1 = std::min(n, j0 + kBlock);
      for (std::size_t i = 0; i < w_.size(); ++i) {
        const double wi = w_[i];
        const double* src = e.data() + R - first_ - static_cast<long>(i);
        for (std::size_t j = j0; j < j1; ++j) out[j] += wi * src[j];
      }
    }
    return;
  }
  Fft& f = *fft_;
  std::size_t N = f.N, R = f.R;
  // extended signal e[k] = in[clamp(k - R)], then linear convolution with w
  std::vector<double> buf(N, 0.0);
  for (std::size_t k = 0; k < n + 2 * R; ++k) {
    long idx = static_cast<long>(k) - static_cast<long>(R);
    buf[k] = in[std::clamp<long>(idx, 0, static_cast<long>(n) - 1)];
  }
  std::vector<std::complex<double>> sv(N / 2 + 1);
  auto* spec = reinterpret_cast<fftw_complex*>(sv.data());
  fftw_execute_dft_r2c(f.fwd, buf.data(), spec);
  for (std::size_t q = 0; q <= N / 2; ++q) {
    double re = spec[q][0] * f.kspec[q][0] - spec[q][1] * f.kspec[q][1];
    double im = spec[q][0] * f.kspec[q][1] + spec[q][1] * f.kspec[q][0];
    spec[q][0] = re;
    spec[q][1] = im;
  }
  fftw_execute_dft_c2r(f.bwd, spec, buf.data());
  double scale = 1.0 / static_cast<double>(N);
  for (std::size_t j = 0; j < n; ++j) out[j] = buf[static_cast<std::size_t>(static_cast<long>(j + R) - first_)] * scale;
}

std::vector<double> Convolver::apply(const std::vector<double>& in) const {
  if (in.size() != n_) throw std::invalid_argument("convolver size mismatch");
  std::vector<double> out(n_);
  apply(in.data(), out.data());
  return out;
}

namespace {
void cubic_setup(const Grid& g, const std::vector<double>& v, double z, double& t, double p[4]) {
  double x = (z + g.L) / g.h;
  long n = static_cast<long>(v.size());
  long j = static_cast<long>(std::floor(x));
  if (j < 0) {
    j = 0;
    x = 0;
  }
  if (j > n - 2) {
    j = n - 2;
    x = static_cast<double>(n - 1);
  }
  t = x - static_cast<double>(j);
  for (int q = -1; q <= 2; ++q) p[q + 1] = v[static_cast<std::size_t>(std::clamp<long>(j + q, 0, n - 1))];
}
}  // namespace

double interpolate(const Grid& g, const std::vector<double>& v, double z) {
  double t, p[4];
  cubic_setup(g, v, z, t, p);
  return p[1] + 0.5 * t * (p[2] - p[0] + t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3] + t * (3 * (p[1] - p[2]) + p[3] - p[0])));
}

double interpolate_slope(const Grid& g, const std::vector<double>& v, double z) {
  double x = (z + g.L) / g.h;
  if (x <= 0 || x >= static_cast<double>(v.size() - 1)) return 0.0;
  double t, p[4];
  cubic_setup(g, v, z, t, p);
  double d = 0.5 * (p[2] - p[0] + 2 * t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) + 3 * t * t * (3 * (p[1] - p[2]) + p[3] - p[0]));
  return d / g.h;
}

}  // namespace fwave
