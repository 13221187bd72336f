#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "fwave/kernel.hpp"

namespace fwave {

struct Grid {
  double L = 100;
  double h = 0.01;
  std::size_t n = 0;

  Grid() = default;
  Grid(double L_, double h_);
  double z(std::size_t j) const { return -L + static_cast<double>(j) * h; }
  std::vector<double> nodes() const;
};

// Applies J * phi on a uniform grid, extending phi by its edge values.
// The stencil must be node-aligned with the grid step.
class Convolver {
 public:
  enum class Method { direct, fft, automatic };

  Convolver(const DiscreteKernel& dk, std::size_t n, Method m = Method::automatic);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  void apply(const double* in, double* out) const;
  std::vector<double> apply(const std::vector<double>& in) const;
  Method method() const { return method_; }

 private:
  struct Fft;
  std::vector<double> w_;
  int first_;
  std::size_t n_;
  Method method_;
  std::unique_ptr<Fft> fft_;
};

// value at arbitrary z of a gridded array: Catmull-Rom cubic, edge values held
double interpolate(const Grid& g, const std::vector<double>& v, double z);
double interpolate_slope(const Grid& g, const std::vector<double>& v, double z);

}  // namespace fwave
