#include <cmath>

#include "nneig/problems.hpp"

namespace nneig {

double NonlocalParams::reduced_mass() const {
  const double core = 2.0 * constants::neutron_mass + 2.0 * constants::proton_mass;
  return 1.0 / (1.0 / constants::neutron_mass + 1.0 / core);
}

double nonlocal_kernel(const NonlocalParams& p, double r, double rp) {
  // Exponent-combined form of -A exp(-gamma (r^2 + r'^2)) * 2 sinh(2 k r r')
  // so large arguments never overflow through an intermediate sinh.
  const double a = p.strength_sign * p.strength;
  const double q = p.gamma_sign * p.gamma * (r * r + rp * rp);
  const double s = 2.0 * p.k * r * rp;
  return -a * (std::exp(-q + s) - std::exp(-q - s));
}

namespace {

class NonlocalProblem final : public Problem {
public:
  NonlocalProblem(NonlocalParams p, int grid_points) : p_(p) {
    const int n_train = grid_points > 0 ? grid_points : 100;
    colloc_ = TensorGrid({trapezoid_rule(n_train, 0.0, p.r_max)});
    quad_ = TensorGrid({gauss_legendre(80, 0.0, p.r_max)});
  }

  const std::string& id() const override {
    static const std::string name = "n-alpha";
    return name;
  }
  int dimension() const override { return 1; }
  const TensorGrid& collocation_grid() const override { return colloc_; }
  const TensorGrid& quadrature_grid() const override { return quad_; }

  Envelope initial_envelope() const override {
    return Envelope(EnvelopeKind::RadialExp, 1.0, 1);
  }
  int default_hidden_units() const override { return 8; }

  double kinetic_coefficient() const override {
    const double m = p_.reduced_mass();
    return constants::hbar_c * constants::hbar_c / (2.0 * m);
  }
  double potential(std::span<const double> x) const override {
    return -p_.v0 * std::exp(-p_.range * x[0] * x[0]);
  }
  bool has_kernel() const override { return true; }
  double kernel(double r, double rp) const override { return nonlocal_kernel(p_, r, rp); }
  bool energy_first_derivative_form() const override { return true; }

private:
  NonlocalParams p_;
  TensorGrid colloc_, quad_;
};

}  // namespace

std::unique_ptr<Problem> make_nonlocal_problem(const NonlocalParams& params, int grid_points) {
  return std::make_unique<NonlocalProblem>(params, grid_points);
}

std::unique_ptr<Problem> detail_make_nonlocal(int grid_points) {
  return make_nonlocal_problem(NonlocalParams{}, grid_points);
}

}  // namespace nneig
