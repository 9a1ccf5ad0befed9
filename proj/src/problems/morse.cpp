#include <cmath>

#include "nneig/problems.hpp"

namespace nneig {

double morse_potential(const MorseParams& p, double x) {
  const double e = std::exp(-p.alpha * x);
  return p.well_depth * (e * e - 2.0 * e + 1.0);
}

double morse_exact_level(const MorseParams& p, int n) {
  const double nh = n + 0.5;
  return nh * (1.0 - nh / p.zeta) * p.xi;
}

namespace {

class MorseProblem final : public Problem {
public:
  explicit MorseProblem(MorseParams p, int grid_points) : p_(p) {
    const int n_train = grid_points > 0 ? grid_points : 150;
    colloc_ = TensorGrid({trapezoid_rule(n_train, -1.0, 2.0)});
    quad_ = TensorGrid({gauss_legendre(100, -1.0, 2.0)});
  }

  const std::string& id() const override {
    static const std::string name = "morse";
    return name;
  }
  int dimension() const override { return 1; }
  const TensorGrid& collocation_grid() const override { return colloc_; }
  const TensorGrid& quadrature_grid() const override { return quad_; }

  Envelope initial_envelope() const override {
    // Width of the harmonic approximation around the well minimum.
    const double beta = 0.5 * p_.alpha * std::sqrt(2.0 * p_.well_depth * p_.mass);
    return Envelope(EnvelopeKind::Gaussian1D, beta, 1);
  }
  int default_hidden_units() const override { return 8; }

  double kinetic_coefficient() const override { return 0.5 / p_.mass; }
  double potential(std::span<const double> x) const override {
    return morse_potential(p_, x[0]);
  }

private:
  MorseParams p_;
  TensorGrid colloc_, quad_;
};

}  // namespace

std::unique_ptr<Problem> detail_make_morse(int grid_points) {
  return std::make_unique<MorseProblem>(MorseParams{}, grid_points);
}

}  // namespace nneig
