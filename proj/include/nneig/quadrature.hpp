#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nneig {

// One-dimensional integration rule on [lo, hi].
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // same length, sum = hi - lo for unit weight
  double lo = 0.0;
  double hi = 0.0;

  std::size_t size() const { return nodes.size(); }
};

// n-point Gauss-Legendre rule on [lo, hi]. Exact for polynomials of degree
// <= 2n-1; all nodes are interior.
QuadratureRule gauss_legendre(int n, double lo, double hi);

// n equidistant points including both endpoints (n >= 2).
std::vector<double> equidistant(int n, double lo, double hi);

// Equidistant nodes with composite trapezoid weights.
QuadratureRule trapezoid_rule(int n, double lo, double hi);

// Throws std::domain_error naming the offending node if f is non-finite there.
double integrate(const QuadratureRule& rule, const std::function<double(double)>& f);

// Tensor product of per-axis 1D rules. Flat enumeration is row-major: axis 0
// is slowest, the last axis fastest, i.e. flat = (i0*n1 + i1)*n2 + i2 for 3D.
class TensorGrid {
public:
  TensorGrid() = default;
  explicit TensorGrid(std::vector<QuadratureRule> axes);

  int dimension() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const QuadratureRule& axis(int k) const { return axes_.at(k); }

  void point(std::size_t flat, std::span<double> out) const;
  double weight(std::size_t flat) const;

private:
  std::vector<QuadratureRule> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

double integrate(const TensorGrid& grid,
                 const std::function<double(std::span<const double>)>& f);

}  // namespace nneig
