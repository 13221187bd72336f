#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "fwave/grid.hpp"
#include "fwave/kernel.hpp"

using namespace fwave;

// closed forms checked against mpmath
TEST_CASE("mgf closed forms") {
  CHECK(mgf(Kernel::uniform(1), 0) == doctest::Approx(1).epsilon(1e-15));
  CHECK(mgf(Kernel::uniform(1), 1) == doctest::Approx(1.1752011936438014).epsilon(1e-14));
  CHECK(mgf(Kernel::laplace(2), 1) == doctest::Approx(4.0 / 3).epsilon(1e-14));
  CHECK(std::isinf(mgf(Kernel::laplace(2), 2.5)));
  CHECK(mgf_derivative(Kernel::uniform(1), 1) == doctest::Approx(0.36787944117144233).epsilon(1e-13));
  CHECK(mgf_derivative(Kernel::gaussian(1), 1) == doctest::Approx(1.6487212707001282).epsilon(1e-13));
  CHECK_THROWS_AS(mgf_derivative(Kernel::laplace(2), 3), DomainError);
}

TEST_CASE("small-argument series stays accurate") {
  Kernel u = Kernel::uniform(1);
  for (double l : {1e-8, 1e-4, 0.05, 0.099, 0.101}) {
    CHECK(mgf(u, l) == doctest::Approx(std::sinh(l) / l).epsilon(1e-14));
    // I'(l) = l/3 + l^3/30 + l^5/840 + ...
    double d = l / 3 + l * l * l / 30 + std::pow(l, 5) / 840 + std::pow(l, 7) / 45360;
    CHECK(mgf_derivative(u, l) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("quadrature agrees with closed forms") {
  const Kernel ks[] = {Kernel::uniform(1.5), Kernel::two_bump(-2, 1, 0.25), Kernel::laplace(2), Kernel::gaussian(0.7)};
  for (const auto& k : ks) {
    MgfDomain dom = k.mgf_domain();
    double lo = std::isfinite(dom.lo) ? 0.9 * dom.lo : -3, hi = std::isfinite(dom.hi) ? 0.9 * dom.hi : 3;
    for (int i = 0; i < 25; ++i) {
      double l = lo + (hi - lo) * (i + 0.5) / 25;
      for (int m = 0; m < 3; ++m) {
        double c = m == 0 ? mgf(k, l) : m == 1 ? mgf_derivative(k, l) : mgf_second_moment(k, l);
        CHECK(std::fabs(c - mgf_by_quadrature(k, l, m)) <= 1e-8 * (1 + std::fabs(c)));
      }
    }
  }
}

TEST_CASE("quadrature close to the laplace domain edge") {
  // the integrand decays like e^{-0.04|y|}: the density underflows long before it does
  Kernel k = Kernel::laplace(2);
  for (double l : {-1.96, 1.96, 1.99}) CHECK(mgf_by_quadrature(k, l, 0) == doctest::Approx(4 / (4 - l * l)).epsilon(1e-10));
}

TEST_CASE("moments at zero") {
  const Kernel ks[] = {Kernel::uniform(1), Kernel::two_bump(-2, 1, 0.25), Kernel::laplace(2), Kernel::gaussian(1),
                       Kernel::tabulated({-1, 0, 1}, {1, 2, 1})};
  for (const auto& k : ks) {
    CHECK(mgf(k, 0) == doctest::Approx(1).epsilon(1e-12));
    CHECK(std::fabs(mgf_derivative(k, 0)) <= 1e-10);
  }
}

TEST_CASE("strict convexity chord test") {
  std::mt19937_64 rng(7);
  Kernel k = Kernel::laplace(2);
  std::uniform_real_distribution<double> U(-1.9, 1.9);
  for (int t = 0; t < 300; ++t) {
    double a = U(rng), b = U(rng), c = U(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    if (c - a < 1e-6 || b - a < 1e-7 || c - b < 1e-7) continue;
    double chord = mgf(k, a) + (mgf(k, c) - mgf(k, a)) * (b - a) / (c - a);
    CHECK(mgf(k, b) < chord);
  }
}

TEST_CASE("validate_kernel") {
  KernelReport u = validate_kernel(Kernel::uniform(1));
  CHECK(u.ok());
  CHECK(u.compact);
  CHECK(std::isinf(u.domain.hi));
  KernelReport l = validate_kernel(Kernel::laplace(2));
  CHECK(l.ok());
  CHECK_FALSE(l.compact);
  CHECK(l.domain.lo == doctest::Approx(-2));
  CHECK(l.domain.hi == doctest::Approx(2));
  Kernel tb = Kernel::two_bump(-2, 1, 0.25);
  CHECK(validate_kernel(tb).ok());
  CHECK(tb.mass(-3, -1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(tb.mass(0, 2) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  // off-centre weights break the zero-mean condition
  KernelReport bad = validate_kernel(Kernel::two_bump(-2, 1, 0.25, 0.5, 0.5));
  CHECK_FALSE(bad.zero_mean);
  CHECK_FALSE(bad.ok());
}

TEST_CASE("discretize on cells and nodes") {
  DiscreteKernel c = discretize_kernel(Kernel::uniform(1), 0.5, 0, StencilAlignment::cells);
  REQUIRE(c.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.weights[i] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(c.offset(i) == doctest::Approx(-0.75 + 0.5 * i));
  }
  DiscreteKernel n = discretize_kernel(Kernel::uniform(1), 0.5, 0);
  REQUIRE(n.size() == 5);
  CHECK(n.weights[0] == doctest::Approx(0.125));
  CHECK(n.weights[2] == doctest::Approx(0.25));

  // 1 - erfc(r / sqrt 2) = 1 - 1e-10 at r = 6.46695
  DiscreteKernel g = discretize_kernel(Kernel::gaussian(1), 0.1, 1e-10);
  CHECK(g.radius() * 0.1 == doctest::Approx(6.5).epsilon(0.02));
  CHECK(g.discarded <= 1e-10);
  double sum = 0, mom = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum += g.weights[i];
    mom += g.weights[i] * g.offset(i);
  }
  CHECK(std::fabs(sum - 1) <= 1e-14);
  CHECK(std::fabs(mom) <= 1e-12);

  DiscreteKernel a = discretize_kernel(Kernel::two_bump(-2, 1, 0.25), 0.01, 0);
  mom = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mom += a.weights[i] * a.offset(i);
  CHECK(std::fabs(mom) <= 1e-12);
  CHECK_THROWS(discretize_kernel(Kernel::uniform(0.1), 1.0, 0));
}

TEST_CASE("effective kernel reproduces its stencil") {
  DiscreteKernel dk = discretize_kernel(Kernel::laplace(2), 0.05, 1e-12);
  Kernel e = effective_kernel(dk);
  DiscreteKernel again = discretize_kernel(e, 0.05, 0);
  REQUIRE(again.size() == dk.size());
  for (std::size_t i = 0; i < dk.size(); ++i) CHECK(std::fabs(again.weights[i] - dk.weights[i]) <= 1e-15);
  // its mgf is the stencil symbol sum w e^{l y}, so discrete convolution of
  // an exponential is exact
  double l = 0.8, ref = 0;
  for (std::size_t i = 0; i < dk.size(); ++i) ref += dk.weights[i] * std::exp(l * dk.offset(i));
  CHECK(mgf(e, l) == doctest::Approx(ref).epsilon(1e-14));
  // re-discretising on a grid twice as coarse merges cell pairs
  DiscreteKernel coarse = discretize_kernel(e, 0.1, 0);
  double sum = 0;
  for (double w : coarse.weights) sum += w;
  CHECK(sum == doctest::Approx(1).epsilon(1e-13));
}

TEST_CASE("tabulated kernel from csv") {
  auto path = std::filesystem::temp_directory_path() / "fwave_kernel_test.csv";
  {
    std::ofstream f(path);
    f << "offset,density\n-1,0.25\n0,0.5\n1,0.25\n";
  }
  Kernel k = Kernel::from_csv(path.string());
  CHECK(k.family() == KernelFamily::tabulated);
  CHECK(k.mass(-10, 10) == doctest::Approx(1).epsilon(1e-12));
  CHECK(validate_kernel(k).ok());
  std::filesystem::remove(path);
}

TEST_CASE("fft and direct convolution agree") {
  DiscreteKernel dk = discretize_kernel(Kernel::gaussian(1), 0.05, 1e-12);
  Grid g(30, 0.05);
  std::vector<double> x(g.n);
  for (std::size_t j = 0; j < g.n; ++j) x[j] = std::tanh(g.z(j)) + 0.3 * std::sin(2 * g.z(j));
  Convolver d(dk, g.n, Convolver::Method::direct), f(dk, g.n, Convolver::Method::fft);
  auto a = d.apply(x), b = f.apply(x);
  double m = 0;
  for (std::size_t j = 0; j < g.n; ++j) m = std::max(m, std::fabs(a[j] - b[j]));
  CHECK(m <= 1e-12);
}
