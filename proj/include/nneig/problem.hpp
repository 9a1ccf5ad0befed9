#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nneig/quadrature.hpp"
#include "nneig/trial.hpp"

namespace nneig {

// A bound-state eigenproblem H psi = eps psi with
//   H = -kinetic_coefficient * laplacian + potential(x)  [+ kernel column].
// Each problem fixes its collocation points, its integration grid, the
// envelope family for the trial function, and the form of its energy
// functional.
class Problem {
public:
  virtual ~Problem() = default;

  virtual const std::string& id() const = 0;
  virtual int dimension() const = 0;
  // 1 for scalar problems, 2 for the coupled first-order radial system.
  virtual int components() const { return 1; }

  virtual const TensorGrid& collocation_grid() const = 0;
  virtual const TensorGrid& quadrature_grid() const = 0;

  virtual Envelope initial_envelope() const = 0;
  virtual int default_hidden_units() const = 0;
  virtual bool optimize_shape() const { return true; }
  virtual bool analytic_gradient_supported() const {
    return !has_kernel() && components() == 1;
  }

  virtual double kinetic_coefficient() const = 0;
  virtual double potential(std::span<const double> x) const = 0;

  // Nonlocal contribution Integral K(r, r') psi(r') dr', evaluated with the
  // quadrature grid (1D problems only).
  virtual bool has_kernel() const { return false; }
  virtual double kernel(double r, double rp) const;

  // True when the kinetic term of the energy functional is integrated by
  // parts (first-derivative form); otherwise the plain quotient
  // <psi|H|psi>/<psi|psi> is used.
  virtual bool energy_first_derivative_form() const { return false; }

  // H applied to the state at x.
  double hamiltonian(const WaveState& psi, std::span<const double> x) const;

  // Energy functional on the quadrature grid.
  double energy(const WaveState& psi) const;
};

}  // namespace nneig
