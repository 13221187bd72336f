#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwave {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class KernelFamily { uniform, two_bump, laplace, gaussian, tabulated };

std::string to_string(KernelFamily f);

// Interval (lo, hi) on which the MGF is finite; endpoints may be infinite.
struct MgfDomain {
  double lo;
  double hi;
  bool contains(double lambda) const { return lambda > lo && lambda < hi; }
};

class Kernel {
 public:
  static Kernel uniform(double half_width);
  // weights solved so that the first moment vanishes
  static Kernel two_bump(double y_minus, double y_plus, double eta);
  static Kernel two_bump(double y_minus, double y_plus, double eta, double w_minus, double w_plus);
  static Kernel laplace(double rate);
  static Kernel gaussian(double sigma);
  // piecewise-constant density on cells centred at offsets; offsets must be increasing
  static Kernel tabulated(std::vector<double> offsets, std::vector<double> densities);
  static Kernel from_csv(const std::string& path);
  // atoms with the given masses, each spread over a cell of width `cell`
  static Kernel from_masses(std::vector<double> offsets, std::vector<double> masses, double cell);

  KernelFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& offsets() const { return y_; }
  const std::vector<double>& masses() const { return m_; }

  double density(double y) const;
  double log_density(double y) const;  // -inf off the support; no underflow in the tails
  // mass in [lo, hi]
  double mass(double lo, double hi) const;
  bool compact() const;
  // S with J = 0 outside [-S, S]; infinite for non-compact families
  double support_bound() const;
  MgfDomain mgf_domain() const;
  // points where the density is not smooth, used to split quadrature
  std::vector<double> breakpoints() const;

  bool operator==(const Kernel& o) const;

 private:
  KernelFamily family_ = KernelFamily::uniform;
  std::vector<double> params_;
  std::vector<double> y_, rho_, width_, m_;  // tabulated only
};

// I(lambda) and its first two lambda-derivatives.
double mgf(const Kernel& k, double lambda);
double mgf_derivative(const Kernel& k, double lambda);
double mgf_second_moment(const Kernel& k, double lambda);
// independent route: adaptive quadrature of J(y) y^m e^{lambda y}
double mgf_by_quadrature(const Kernel& k, double lambda, int moment = 0);

struct KernelReport {
  bool unit_mass = false;
  bool zero_mean = false;
  bool positivity = false;
  bool mgf_window = false;
  bool blowup = false;
  bool compact = false;
  double mass = 0, mean = 0;
  MgfDomain domain{0, 0};
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

KernelReport validate_kernel(const Kernel& k);

enum class StencilAlignment { nodes, cells };

struct DiscreteKernel {
  double h = 0;
  StencilAlignment alignment = StencilAlignment::nodes;
  int first = 0;  // integer index of the first weight
  std::vector<double> weights;
  double eps_tail = 0;
  double discarded = 0;

  double offset(std::size_t i) const {
    double m = first + static_cast<double>(i);
    return alignment == StencilAlignment::nodes ? m * h : (m + 0.5) * h;
  }
  std::size_t size() const { return weights.size(); }
  int radius() const;
};

DiscreteKernel discretize_kernel(const Kernel& k, double h, double eps_tail,
                                 StencilAlignment align = StencilAlignment::nodes);

// Atoms of a stencil viewed as a kernel: density w/h on cells of width h.
Kernel effective_kernel(const DiscreteKernel& dk);

}  // namespace fwave
