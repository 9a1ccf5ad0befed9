#include "nneig/quadrature.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nneig {

namespace {

// Legendre polynomial P_n and its derivative at x via the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  if (!(hi > lo)) throw std::invalid_argument("gauss_legendre: need hi > lo");

  QuadratureRule rule;
  rule.lo = lo;
  rule.hi = hi;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  if (n == 1) {
    rule.nodes[0] = mid;
    rule.weights[0] = hi - lo;
    return rule;
  }

  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess, refined by Newton iteration.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      std::tie(p, dp) = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    std::tie(p, dp) = legendre(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // i counts from the x ~ +1 end; store symmetric pair.
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.nodes[i] = mid - half * x;
    rule.weights[n - 1 - i] = half * w;
    rule.weights[i] = half * w;
  }
  return rule;
}

std::vector<double> equidistant(int n, double lo, double hi) {
  if (n < 2) throw std::invalid_argument("equidistant: need n >= 2");
  if (!(hi > lo)) throw std::invalid_argument("equidistant: need hi > lo");
  std::vector<double> pts(n);
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) pts[i] = lo + i * h;
  pts.back() = hi;
  return pts;
}

QuadratureRule trapezoid_rule(int n, double lo, double hi) {
  QuadratureRule rule;
  rule.lo = lo;
  rule.hi = hi;
  rule.nodes = equidistant(n, lo, hi);
  const double h = (hi - lo) / (n - 1);
  rule.weights.assign(n, h);
  rule.weights.front() = 0.5 * h;
  rule.weights.back() = 0.5 * h;
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "integrate: non-finite integrand at node " << i << " (x = " << rule.nodes[i] << ")";
      throw std::domain_error(msg.str());
    }
    sum += rule.weights[i] * v;
  }
  return sum;
}

TensorGrid::TensorGrid(std::vector<QuadratureRule> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("TensorGrid: need at least one axis");
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (int k = static_cast<int>(axes_.size()) - 1; k >= 0; --k) {
    strides_[k] = size_;
    size_ *= axes_[k].size();
  }
}

void TensorGrid::point(std::size_t flat, std::span<double> out) const {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const std::size_t idx = (flat / strides_[k]) % axes_[k].size();
    out[k] = axes_[k].nodes[idx];
  }
}

double TensorGrid::weight(std::size_t flat) const {
  double w = 1.0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const std::size_t idx = (flat / strides_[k]) % axes_[k].size();
    w *= axes_[k].weights[idx];
  }
  return w;
}

double integrate(const TensorGrid& grid,
                 const std::function<double(std::span<const double>)>& f) {
  std::vector<double> x(grid.dimension());
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x);
    const double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "integrate: non-finite integrand at grid index " << i << " (x =";
      for (double c : x) msg << ' ' << c;
      msg << ")";
      throw std::domain_error(msg.str());
    }
    sum += grid.weight(i) * v;
  }
  return sum;
}

}  // namespace nneig
