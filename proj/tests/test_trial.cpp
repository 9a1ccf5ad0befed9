#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nneig/quadrature.hpp"
#include "nneig/trial.hpp"

using namespace nneig;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

Mlp random_net(int n_in, int n_hid, std::uint64_t seed) {
  Rng rng(seed);
  return Mlp::random(n_in, n_hid, rng);
}

// All multi-indices with per-axis order <= 2 and total <= 2 (what the
// residuals need: value, first derivatives, Laplacian terms).
std::vector<MultiIndex> derivative_set(int dim) {
  std::vector<MultiIndex> out;
  out.push_back(MultiIndex::zeros(dim));
  for (int j = 0; j < dim; ++j) {
    out.push_back(MultiIndex::axis(dim, j, 1));
    out.push_back(MultiIndex::axis(dim, j, 2));
  }
  if (dim >= 2) {
    MultiIndex mi = MultiIndex::zeros(dim);
    mi.orders[0] = 1;
    mi.orders[1] = 1;
    out.push_back(mi);
  }
  return out;
}

}  // namespace

TEST_CASE("envelope values") {
  Envelope g1(EnvelopeKind::Gaussian1D, 0.7, 1);
  const double x[1] = {1.3};
  CHECK(g1.value(x) == doctest::Approx(std::exp(-0.7 * 1.69)).epsilon(1e-15));

  Envelope re(EnvelopeKind::RadialExp, 0.4, 1);
  const double r[1] = {2.0};
  CHECK(re.value(r) == doctest::Approx(2.0 * std::exp(-0.8)).epsilon(1e-15));
  CHECK(re.value_over_r(2.0) == doctest::Approx(std::exp(-0.8)).epsilon(1e-15));
  const double r0[1] = {0.0};
  CHECK(re.value(r0) == doctest::Approx(0.0));
  CHECK(re.value_over_r(0.0) == doctest::Approx(1.0));

  Envelope gn(EnvelopeKind::GaussianND, 0.5, 3);
  const double p[3] = {1.0, -1.0, 0.5};
  CHECK(gn.value(p) == doctest::Approx(std::exp(-0.5 * 2.25)).epsilon(1e-15));
}

TEST_CASE("envelope rejects nonpositive shape") {
  CHECK_THROWS_AS(Envelope(EnvelopeKind::Gaussian1D, 0.0, 1), std::invalid_argument);
  Envelope env(EnvelopeKind::Gaussian1D, 1.0, 1);
  CHECK_THROWS_AS(env.set_shape(-1.0), std::invalid_argument);
}

TEST_CASE("envelope spatial derivatives match finite differences") {
  const double h = 1e-5;
  for (auto kind : {EnvelopeKind::Gaussian1D, EnvelopeKind::RadialExp, EnvelopeKind::GaussianND}) {
    const int dim = kind == EnvelopeKind::GaussianND ? 3 : 1;
    Envelope env(kind, 0.6, dim);
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> x(dim);
      for (double& xi : x) xi = kind == EnvelopeKind::RadialExp ? rng.uniform(0.3, 4.0)
                                                                : rng.uniform(-2.0, 2.0);
      for (const MultiIndex& mi : derivative_set(dim)) {
        if (mi.total() == 0) continue;
        // Reduce one order along the first active axis and difference it.
        int axis = 0;
        while (mi.orders[axis] == 0) ++axis;
        MultiIndex lower = mi;
        lower.orders[axis] -= 1;
        auto f = [&](double t2) {
          std::vector<double> y = x;
          y[axis] = t2;
          return env.derivative(y, lower);
        };
        const double want = (f(x[axis] + h) - f(x[axis] - h)) / (2.0 * h);
        CHECK(rel_err(env.derivative(x, mi), want) <= 1e-7);
      }
    }
  }
}

TEST_CASE("envelope shape derivatives match finite differences") {
  const double h = 1e-7;
  for (auto kind : {EnvelopeKind::Gaussian1D, EnvelopeKind::RadialExp, EnvelopeKind::GaussianND}) {
    const int dim = kind == EnvelopeKind::GaussianND ? 2 : 1;
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      const double beta = rng.uniform(0.2, 1.5);
      std::vector<double> x(dim);
      for (double& xi : x) xi = kind == EnvelopeKind::RadialExp ? rng.uniform(0.2, 3.0)
                                                                : rng.uniform(-2.0, 2.0);
      for (const MultiIndex& mi : derivative_set(dim)) {
        Envelope up(kind, beta + h, dim), dn(kind, beta - h, dim), at(kind, beta, dim);
        const double want = (up.derivative(x, mi) - dn.derivative(x, mi)) / (2.0 * h);
        CHECK(rel_err(at.shape_derivative(x, mi), want) <= 1e-6);
      }
    }
  }
}

TEST_CASE("trial value is envelope times network") {
  TrialState trial(Envelope(EnvelopeKind::GaussianND, 0.5, 2), random_net(2, 4, 3));
  const double x[2] = {0.7, -0.4};
  CHECK(trial.value(x) ==
        doctest::Approx(trial.envelope().value(x) * trial.network().forward(x)).epsilon(1e-14));
}

TEST_CASE("trial spatial derivatives match finite differences in every dimension") {
  struct Case {
    EnvelopeKind kind;
    int dim;
  };
  for (auto [kind, dim] : {Case{EnvelopeKind::Gaussian1D, 1}, Case{EnvelopeKind::RadialExp, 1},
                           Case{EnvelopeKind::GaussianND, 2}, Case{EnvelopeKind::GaussianND, 3}}) {
    TrialState trial(Envelope(kind, 0.8, dim), random_net(dim, 5, 17));
    Rng rng(31);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(dim);
      for (double& xi : x) xi = kind == EnvelopeKind::RadialExp ? rng.uniform(0.3, 4.0)
                                                                : rng.uniform(-1.5, 1.5);
      for (const MultiIndex& mi : derivative_set(dim)) {
        if (mi.total() == 0) continue;
        int axis = 0;
        while (mi.orders[axis] == 0) ++axis;
        MultiIndex lower = mi;
        lower.orders[axis] -= 1;
        auto f = [&](double t2) {
          std::vector<double> y = x;
          y[axis] = t2;
          return trial.derivative(y, lower);
        };
        const double want = (f(x[axis] + h) - f(x[axis] - h)) / (2.0 * h);
        CHECK(rel_err(trial.derivative(x, mi), want) <= 1e-6);
      }
    }
  }
}

TEST_CASE("trial parameter gradient matches finite differences, both shape scales") {
  for (auto scale : {ShapeScale::Log, ShapeScale::Direct}) {
    TrialState trial(Envelope(EnvelopeKind::GaussianND, 0.6, 2), random_net(2, 4, 23), true,
                     scale);
    const int np = trial.parameter_count();
    CHECK(np == trial.network().parameter_count() + 1);

    std::vector<double> p(np);
    trial.get_parameters(p);
    Rng rng(3);
    const double x[2] = {0.5, -0.9};
    for (const MultiIndex& mi : derivative_set(2)) {
      std::vector<double> grad(np);
      trial.set_parameters(p);
      trial.parameter_gradient(x, mi, grad);
      for (int k = 0; k < np; ++k) {
        const double h = 1e-6;
        std::vector<double> pert = p;
        pert[k] = p[k] + h;
        trial.set_parameters(pert);
        const double up = trial.derivative(x, mi);
        pert[k] = p[k] - h;
        trial.set_parameters(pert);
        const double dn = trial.derivative(x, mi);
        CHECK(rel_err(grad[k], (up - dn) / (2.0 * h)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("log shape scale stores log(shape) and direct scale stores shape") {
  TrialState log_trial(Envelope(EnvelopeKind::Gaussian1D, 2.0, 1), random_net(1, 3, 1), true,
                       ShapeScale::Log);
  std::vector<double> p(log_trial.parameter_count());
  log_trial.get_parameters(p);
  CHECK(p.back() == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  TrialState dir_trial(Envelope(EnvelopeKind::Gaussian1D, 2.0, 1), random_net(1, 3, 1), true,
                       ShapeScale::Direct);
  dir_trial.get_parameters(p);
  CHECK(p.back() == doctest::Approx(2.0).epsilon(1e-14));

  // Direct scale marks nonpositive shapes invalid instead of throwing.
  p.back() = -0.5;
  dir_trial.set_parameters(p);
  CHECK_FALSE(dir_trial.valid());
  p.back() = 0.5;
  dir_trial.set_parameters(p);
  CHECK(dir_trial.valid());
}

TEST_CASE("frozen shape drops the trailing parameter") {
  TrialState trial(Envelope(EnvelopeKind::Gaussian1D, 1.0, 1), random_net(1, 3, 2), false);
  CHECK(trial.parameter_count() == trial.network().parameter_count());
}

TEST_CASE("basis state evaluates the stored combination") {
  Mlp net_a = random_net(1, 3, 4), net_b = random_net(1, 3, 8);
  Envelope env(EnvelopeKind::Gaussian1D, 0.9, 1);
  BasisState state({TrialTerm{0.7, env, net_a}, TrialTerm{-0.3, env, net_b}}, 1.5);
  const double x[1] = {0.4};
  const double want =
      0.7 * env.value(x) * net_a.forward(x) - 0.3 * env.value(x) * net_b.forward(x);
  CHECK(state.value(x) == doctest::Approx(want).epsilon(1e-14));
  CHECK(state.eigenvalue() == doctest::Approx(1.5));
}

TEST_CASE("deflation produces an orthonormal basis") {
  // Append three random trials in sequence; every pair of stored states must
  // be orthonormal under the quadrature inner product.
  TensorGrid quad({gauss_legendre(60, -6.0, 6.0)});
  DeflationBasis basis;
  for (std::uint64_t s = 0; s < 3; ++s) {
    TrialState raw(Envelope(EnvelopeKind::Gaussian1D, 0.4, 1), random_net(1, 5, 100 + s));
    DeflatedState defl(raw, basis, quad);
    std::vector<double> p(raw.parameter_count());
    raw.get_parameters(p);
    defl.set_parameters(p);  // refresh overlaps
    basis.append_solution(raw, defl.overlaps(), quad, double(s));
  }
  REQUIRE(basis.size() == 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b <= a; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      CHECK(std::abs(basis.overlap(a, b, quad) - want) <= 1e-8);
    }
}

TEST_CASE("deflated state equals raw minus its projection") {
  TensorGrid quad({gauss_legendre(60, -6.0, 6.0)});
  DeflationBasis basis;
  {
    TrialState ground(Envelope(EnvelopeKind::Gaussian1D, 0.5, 1), random_net(1, 4, 51));
    DeflatedState d0(ground, basis, quad);
    std::vector<double> p(ground.parameter_count());
    ground.get_parameters(p);
    d0.set_parameters(p);
    basis.append_solution(ground, d0.overlaps(), quad, 0.0);
  }

  TrialState raw(Envelope(EnvelopeKind::Gaussian1D, 0.7, 1), random_net(1, 4, 52));
  DeflatedState defl(raw, basis, quad);
  std::vector<double> p(raw.parameter_count());
  raw.get_parameters(p);
  defl.set_parameters(p);

  const double c0 = defl.overlaps()[0];
  const double x[1] = {0.8};
  CHECK(defl.value(x) ==
        doctest::Approx(raw.value(x) - c0 * basis.state(0).value(x)).epsilon(1e-12));

  // The deflated state is orthogonal to the basis.
  const double ip = integrate(
      quad, [&](std::span<const double> y) { return defl.value(y) * basis.state(0).value(y); });
  CHECK(std::abs(ip) <= 1e-10);

  // And c0 is the quadrature overlap <state_0 | raw>.
  const double want_c0 = integrate(
      quad, [&](std::span<const double> y) { return raw.value(y) * basis.state(0).value(y); });
  CHECK(c0 == doctest::Approx(want_c0).epsilon(1e-12));
}

TEST_CASE("deflated parameter gradient matches finite differences") {
  TensorGrid quad({gauss_legendre(50, -6.0, 6.0)});
  DeflationBasis basis;
  {
    TrialState ground(Envelope(EnvelopeKind::Gaussian1D, 0.5, 1), random_net(1, 4, 61));
    DeflatedState d0(ground, basis, quad);
    std::vector<double> p(ground.parameter_count());
    ground.get_parameters(p);
    d0.set_parameters(p);
    basis.append_solution(ground, d0.overlaps(), quad, 0.0);
  }

  TrialState raw(Envelope(EnvelopeKind::Gaussian1D, 0.8, 1), random_net(1, 4, 62));
  DeflatedState defl(raw, basis, quad);
  const int np = defl.parameter_count();
  std::vector<double> p(np);
  defl.get_parameters(p);

  const double x[1] = {0.6};
  for (const MultiIndex& mi : derivative_set(1)) {
    defl.set_parameters(p);
    std::vector<double> grad(np);
    defl.parameter_gradient(x, mi, grad);
    for (int k = 0; k < np; ++k) {
      const double h = 1e-6;
      std::vector<double> pert = p;
      pert[k] = p[k] + h;
      defl.set_parameters(pert);
      const double up = defl.derivative(x, mi);
      pert[k] = p[k] - h;
      defl.set_parameters(pert);
      const double dn = defl.derivative(x, mi);
      CHECK(rel_err(grad[k], (up - dn) / (2.0 * h)) <= 1e-5);
    }
  }
}

TEST_CASE("appended solutions reproduce the normalized deflated combination") {
  TensorGrid quad({gauss_legendre(80, -8.0, 8.0)});
  DeflationBasis basis;
  TrialState a(Envelope(EnvelopeKind::Gaussian1D, 0.5, 1), random_net(1, 5, 71));
  {
    DeflatedState d(a, basis, quad);
    std::vector<double> p(a.parameter_count());
    a.get_parameters(p);
    d.set_parameters(p);
    basis.append_solution(a, d.overlaps(), quad, 2.0);
  }
  // Norm of the stored state is 1 under the quadrature product.
  CHECK(basis.overlap(0, 0, quad) == doctest::Approx(1.0).epsilon(1e-12));
  // Stored state is proportional to the raw one (no basis to project out).
  const double x[1] = {0.9};
  const double norm = std::sqrt(
      integrate(quad, [&](std::span<const double> y) { return a.value(y) * a.value(y); }));
  CHECK(basis.state(0).value(x) == doctest::Approx(a.value(x) / norm).epsilon(1e-10));
}
