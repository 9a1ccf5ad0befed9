#include "nneig/problem.hpp"

#include <stdexcept>

namespace nneig {

double Problem::kernel(double, double) const {
  throw std::logic_error("Problem::kernel: operator has no nonlocal part");
}

double Problem::hamiltonian(const WaveState& psi, std::span<const double> x) const {
  const int d = dimension();
  double lap = 0.0;
  for (int a = 0; a < d; ++a) lap += psi.derivative(x, MultiIndex::axis(d, a, 2));
  double out = -kinetic_coefficient() * lap + potential(x) * psi.value(x);
  if (has_kernel()) {
    const QuadratureRule& q = quadrature_grid().axis(0);
    double acc = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double rp[1] = {q.nodes[j]};
      acc += q.weights[j] * kernel(x[0], q.nodes[j]) * psi.value(rp);
    }
    out += acc;
  }
  return out;
}

double Problem::energy(const WaveState& psi) const {
  const TensorGrid& grid = quadrature_grid();
  const int d = dimension();
  const std::size_t n = grid.size();
  std::vector<double> x(d);
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.point(i, x);
    vals[i] = psi.value(x);
  }

  double num = 0.0, den = 0.0;
  if (!energy_first_derivative_form()) {
    for (std::size_t i = 0; i < n; ++i) {
      grid.point(i, x);
      const double w = grid.weight(i);
      double lap = 0.0;
      for (int a = 0; a < d; ++a) lap += psi.derivative(x, MultiIndex::axis(d, a, 2));
      double h = -kinetic_coefficient() * lap + potential(x) * vals[i];
      if (has_kernel()) {
        const QuadratureRule& q = grid.axis(0);
        for (std::size_t j = 0; j < n; ++j)
          h += q.weights[j] * kernel(x[0], q.nodes[j]) * vals[j];
      }
      num += w * vals[i] * h;
      den += w * vals[i] * vals[i];
    }
  } else {
    const double kappa = kinetic_coefficient();
    for (std::size_t i = 0; i < n; ++i) {
      grid.point(i, x);
      const double w = grid.weight(i);
      double grad2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dv = psi.derivative(x, MultiIndex::axis(d, a, 1));
        grad2 += dv * dv;
      }
      num += w * (kappa * grad2 + potential(x) * vals[i] * vals[i]);
      den += w * vals[i] * vals[i];
    }
    if (has_kernel()) {
      const QuadratureRule& q = grid.axis(0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          num += q.weights[i] * q.weights[j] * kernel(q.nodes[i], q.nodes[j]) * vals[i] * vals[j];
    }
  }
  if (!(den > 0.0)) throw std::runtime_error("Problem::energy: state has zero norm");
  return num / den;
}

}  // namespace nneig
