#include <cmath>

#include "nneig/problems.hpp"

namespace nneig {

double henon_heiles_potential(double x, double y) {
  static const double c = 1.0 / (4.0 * std::sqrt(5.0));
  return 0.5 * (x * x + y * y) + c * (x * y * y - x * x * x / 3.0);
}

double sextic_potential(double x, double y, double z) {
  const auto v1 = [](double t) {
    const double t2 = t * t;
    return t2 * (0.5 + t2 * (2.0 + 0.5 * t2));
  };
  return v1(x) + v1(y) + v1(z) + x * y + x * z + y * z;
}

namespace {

TensorGrid cube_grid(int n, double half_width, int dim) {
  std::vector<QuadratureRule> axes(dim, trapezoid_rule(n, -half_width, half_width));
  return TensorGrid(std::move(axes));
}

class HenonHeilesProblem final : public Problem {
public:
  explicit HenonHeilesProblem(int grid_points)
      : grid_(cube_grid(grid_points > 0 ? grid_points : 20, 6.0, 2)) {}

  const std::string& id() const override {
    static const std::string name = "henon-heiles";
    return name;
  }
  int dimension() const override { return 2; }
  const TensorGrid& collocation_grid() const override { return grid_; }
  const TensorGrid& quadrature_grid() const override { return grid_; }

  Envelope initial_envelope() const override {
    return Envelope(EnvelopeKind::GaussianND, 0.5, 2);
  }
  int default_hidden_units() const override { return 8; }

  double kinetic_coefficient() const override { return 0.5; }
  double potential(std::span<const double> x) const override {
    return henon_heiles_potential(x[0], x[1]);
  }

private:
  TensorGrid grid_;
};

class SexticProblem final : public Problem {
public:
  // Quadrature runs on a Gauss-Legendre grid staggered against the
  // equidistant collocation nodes: on the coarse 3D grids a trial spike at a
  // shared node can fake both the norm and the energy, and misaligned grids
  // close that failure mode.
  explicit SexticProblem(int grid_points)
      : n_(grid_points > 0 ? grid_points : 28),
        grid_(cube_grid(n_, 4.0, 3)),
        quad_(TensorGrid(std::vector<QuadratureRule>(3, gauss_legendre(n_, -4.0, 4.0)))) {}

  const std::string& id() const override {
    static const std::string name = "sextic-3d";
    return name;
  }
  int dimension() const override { return 3; }
  const TensorGrid& collocation_grid() const override { return grid_; }
  const TensorGrid& quadrature_grid() const override { return quad_; }

  Envelope initial_envelope() const override {
    return Envelope(EnvelopeKind::GaussianND, 0.7, 3);
  }
  int default_hidden_units() const override { return 25; }

  double kinetic_coefficient() const override { return 0.5; }
  double potential(std::span<const double> x) const override {
    return sextic_potential(x[0], x[1], x[2]);
  }

private:
  int n_;
  TensorGrid grid_, quad_;
};

}  // namespace

std::unique_ptr<Problem> detail_make_henon_heiles(int grid_points) {
  return std::make_unique<HenonHeilesProblem>(grid_points);
}

std::unique_ptr<Problem> detail_make_sextic(int grid_points) {
  return std::make_unique<SexticProblem>(grid_points);
}

}  // namespace nneig
