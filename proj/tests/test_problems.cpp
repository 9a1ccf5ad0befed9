#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "nneig/problems.hpp"
#include "nneig/solver.hpp"

using namespace nneig;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("catalog lists every problem and ids round-trip") {
  const auto ids = problem_ids();
  REQUIRE(ids.size() == 6);
  for (const auto& id : ids) {
    auto prob = make_problem(id);
    REQUIRE(prob != nullptr);
    CHECK(prob->id() == id);
    CHECK(prob->dimension() >= 1);
    CHECK(prob->dimension() <= 3);
    CHECK(prob->collocation_grid().size() > 0);
    CHECK(prob->quadrature_grid().size() > 0);
  }
  CHECK_THROWS(make_problem("no-such-problem"));
}

TEST_CASE("morse potential shape and exact levels") {
  MorseParams p;
  CHECK(morse_potential(p, 0.0) == doctest::Approx(0.0));
  // Dissociation limit equals the well depth.
  CHECK(morse_potential(p, 50.0) == doctest::Approx(p.well_depth).epsilon(1e-10));
  // Repulsive wall on the left.
  CHECK(morse_potential(p, -1.0) > p.well_depth);
  // Direct evaluation of D (e^{-2ax} - 2 e^{-ax} + 1).
  const double x = 0.37;
  const double e = std::exp(-p.alpha * x);
  CHECK(morse_potential(p, x) ==
        doctest::Approx(p.well_depth * (e * e - 2.0 * e + 1.0)).epsilon(1e-15));

  // (n + 1/2)(1 - (n + 1/2)/zeta) xi against the published ground level.
  CHECK(morse_exact_level(p, 0) == doctest::Approx(0.286171979e-3).epsilon(1e-8));
  // Levels increase and stay below the well depth for low n.
  CHECK(morse_exact_level(p, 1) > morse_exact_level(p, 0));
  CHECK(morse_exact_level(p, 1) < p.well_depth);

  auto prob = make_problem("morse");
  CHECK(prob->kinetic_coefficient() == doctest::Approx(0.5 / p.mass).epsilon(1e-15));
  const double q[1] = {x};
  CHECK(prob->potential(q) == doctest::Approx(morse_potential(p, x)).epsilon(1e-15));
  CHECK(prob->collocation_grid().axis(0).size() == 150);
  CHECK(prob->collocation_grid().axis(0).lo == doctest::Approx(-1.0));
  CHECK(prob->collocation_grid().axis(0).hi == doctest::Approx(2.0));
}

TEST_CASE("muonic parameters and reduced mass") {
  MuonicParams p;
  CHECK(p.protons == 82);
  CHECK(p.neutrons == 126);
  // mu = m M / (m + M) with the nucleus built from its nucleons.
  const double nucleus = 82.0 * constants::proton_mass + 126.0 * constants::neutron_mass;
  const double want = constants::muon_mass * nucleus / (constants::muon_mass + nucleus);
  CHECK(p.reduced_mass() == doctest::Approx(want).epsilon(1e-14));
  CHECK(p.reduced_mass() == doctest::Approx(105.601276).epsilon(1e-8));
  CHECK(p.e_squared() == doctest::Approx(constants::hbar_c / 137.037).epsilon(1e-12));
}

TEST_CASE("fermi charge distribution integrates to the proton number") {
  MuonicParams p;
  // Half-density radius and surface softness.
  CHECK(p.density(0.0) == doctest::Approx(p.density_scale).epsilon(1e-5));
  CHECK(p.density(p.radius) == doctest::Approx(0.5 * p.density_scale).epsilon(1e-12));
  CHECK(p.density(20.0) < 1e-10);

  const QuadratureRule rule = gauss_legendre(200, 0.0, p.r_max);
  const double q = 4.0 * kPi *
                   integrate(rule, [&](double r) { return p.density(r) * r * r; });
  CHECK(q == doctest::Approx(82.0).epsilon(2e-3));
}

TEST_CASE("electrostatic potential: independently computed depth and point-charge tail") {
  MuonicParams p;
  // Depth at the origin, frozen from a high-resolution independent
  // integration of the same charge distribution.
  CHECK(electrostatic_potential(p, 0.0) == doctest::Approx(-25.407).epsilon(1e-3));

  // Outside the nucleus the Fermi distribution looks like a point charge.
  const double ze2 = p.protons * p.e_squared();
  for (double r : {30.0, 35.0, 40.0}) {
    const double vp = -ze2 / r;
    CHECK(std::abs(electrostatic_potential(p, r) - vp) <= 0.005 * std::abs(vp));
  }

  // Monotone increase from the well bottom outward.
  double prev = electrostatic_potential(p, 0.0);
  for (double r = 2.0; r <= 40.0; r += 2.0) {
    const double v = electrostatic_potential(p, r);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("vacuum polarization is a small attractive correction") {
  MuonicParams p;
  // Frozen from an independent integration of the two-log moment formula.
  CHECK(vacuum_polarization(p, 0.0) == doctest::Approx(-0.12251).epsilon(5e-3));
  for (double r : {0.5, 2.0, 6.0, 15.0, 30.0}) {
    const double vp = vacuum_polarization(p, r);
    const double ve = electrostatic_potential(p, r);
    CHECK(vp < 0.0);
    CHECK(std::abs(vp) < 0.02 * std::abs(ve) + 0.05);
  }
}

TEST_CASE("muonic potential node cache returns fresh values") {
  MuonicPotential pot(MuonicParams{});
  std::vector<double> nodes = {0.5, 1.0, 7.3, 22.0};
  pot.cache_nodes(nodes);
  for (double r : nodes) CHECK(pot(r) == doctest::Approx(pot.fresh(r)).epsilon(1e-14));
  // Uncached radii fall back to direct evaluation.
  CHECK(pot(3.21) == doctest::Approx(pot.fresh(3.21)).epsilon(1e-14));
}

TEST_CASE("muonic problem wiring") {
  auto prob = make_problem("muonic-schrodinger");
  CHECK(prob->dimension() == 1);
  CHECK(prob->components() == 1);
  const QuadratureRule& ax = prob->quadrature_grid().axis(0);
  CHECK(ax.size() == 80);
  CHECK(ax.lo == doctest::Approx(0.0));
  CHECK(ax.hi == doctest::Approx(40.0));
  MuonicParams p;
  const double kappa = constants::hbar_c * constants::hbar_c / (2.0 * p.reduced_mass());
  CHECK(prob->kinetic_coefficient() == doctest::Approx(kappa).epsilon(1e-12));
  // The problem potential is the cached electrostatic + polarization sum.
  const double r[1] = {ax.nodes[10]};
  MuonicPotential pot(p);
  CHECK(prob->potential(r) == doctest::Approx(pot.fresh(r[0])).epsilon(1e-12));
}

TEST_CASE("nonlocal kernel: axis zeros, symmetry, attraction") {
  NonlocalParams p;
  CHECK(nonlocal_kernel(p, 0.0, 3.0) == doctest::Approx(0.0));
  CHECK(nonlocal_kernel(p, 3.0, 0.0) == doctest::Approx(0.0));
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1.0, 2.0}, {0.3, 7.7}, {4.0, 4.5}})
    CHECK(nonlocal_kernel(p, a, b) == doctest::Approx(nonlocal_kernel(p, b, a)).epsilon(1e-13));

  // Against the plain sinh form where it does not overflow.
  const double r = 1.2, rp = 2.1;
  const double want = -p.strength * std::exp(-p.gamma * (r * r + rp * rp)) *
                      2.0 * std::sinh(2.0 * p.k * r * rp);
  CHECK(nonlocal_kernel(p, r, rp) == doctest::Approx(want).epsilon(1e-12));
  CHECK(nonlocal_kernel(p, r, rp) < 0.0);

  // The resolved sign convention keeps the kernel bounded at large radii.
  CHECK(std::abs(nonlocal_kernel(p, 10.0, 10.0)) < 1e-10);

  auto prob = make_problem("n-alpha");
  CHECK(prob->has_kernel());
  const double m = p.reduced_mass();
  CHECK(m == doctest::Approx(1.0 / (1.0 / constants::neutron_mass +
                                    1.0 / (2.0 * constants::neutron_mass +
                                           2.0 * constants::proton_mass)))
                 .epsilon(1e-14));
  const double x[1] = {1.5};
  CHECK(prob->potential(x) ==
        doctest::Approx(-p.v0 * std::exp(-p.range * 1.5 * 1.5)).epsilon(1e-14));
}

TEST_CASE("oscillator potentials") {
  CHECK(henon_heiles_potential(0.0, 0.0) == doctest::Approx(0.0));
  // y enters squared.
  CHECK(henon_heiles_potential(0.7, 1.3) == doctest::Approx(henon_heiles_potential(0.7, -1.3)));
  const double c = 1.0 / (4.0 * std::sqrt(5.0));
  const double x = 0.9, y = -0.4;
  CHECK(henon_heiles_potential(x, y) ==
        doctest::Approx(0.5 * (x * x + y * y) + c * (x * y * y - x * x * x / 3.0))
            .epsilon(1e-15));

  CHECK(sextic_potential(0.0, 0.0, 0.0) == doctest::Approx(0.0));
  // Symmetric under coordinate permutations.
  CHECK(sextic_potential(0.3, -0.8, 1.1) == doctest::Approx(sextic_potential(1.1, 0.3, -0.8)));
  CHECK(sextic_potential(0.3, -0.8, 1.1) == doctest::Approx(sextic_potential(-0.8, 1.1, 0.3)));
  auto v1 = [](double t) { return 0.5 * t * t + 2.0 * std::pow(t, 4) + 0.5 * std::pow(t, 6); };
  CHECK(sextic_potential(1.0, 2.0, -1.0) ==
        doctest::Approx(v1(1.0) + v1(2.0) + v1(-1.0) + 2.0 - 1.0 - 2.0).epsilon(1e-13));

  auto hh = make_problem("henon-heiles");
  CHECK(hh->dimension() == 2);
  CHECK(hh->collocation_grid().axis(0).size() == 20);
  CHECK(hh->kinetic_coefficient() == doctest::Approx(0.5));

  auto sx = make_problem("sextic-3d");
  CHECK(sx->dimension() == 3);
  CHECK(sx->collocation_grid().axis(0).size() == 28);
  CHECK(sx->default_hidden_units() == 25);
  auto sx16 = make_problem("sextic-3d", 16);
  CHECK(sx16->collocation_grid().axis(0).size() == 16);
}

TEST_CASE("energy functional agrees with the independent rayleigh quotient") {
  // Both assemble <psi|H|psi>/<psi|psi> on the quadrature grid; the energy
  // path may integrate the kinetic term by parts, which for smooth decaying
  // states changes nothing beyond quadrature error.
  for (const auto& id : problem_ids()) {
    auto prob = make_problem(id);
    if (prob->components() != 1) continue;
    Rng rng(2024);
    Mlp net = Mlp::random(prob->dimension(), 5, rng);
    TrialState psi(prob->initial_envelope(), net);
    const double e = prob->energy(psi);
    const double q = rayleigh_quotient(psi, *prob);
    // By-parts energies (muonic, n-alpha) integrate psi'^2 where the quotient
    // integrates -psi psi''; equal functions, different quadrature error.
    const double tol = prob->energy_first_derivative_form() ? 1e-5 : 1e-10;
    CHECK(std::abs(e - q) <= tol * std::max(1.0, std::abs(q)));
  }
}

TEST_CASE("hamiltonian application matches the operator assembled by hand") {
  auto prob = make_problem("henon-heiles");
  Rng rng(7);
  Mlp net = Mlp::random(2, 4, rng);
  TrialState psi(prob->initial_envelope(), net);
  const double x[2] = {0.8, -1.1};
  const double lap = psi.derivative(x, MultiIndex::axis(2, 0, 2)) +
                     psi.derivative(x, MultiIndex::axis(2, 1, 2));
  const double want = -0.5 * lap + henon_heiles_potential(x[0], x[1]) * psi.value(x);
  CHECK(prob->hamiltonian(psi, x) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("kernel column enters the hamiltonian through quadrature") {
  auto prob = make_problem("n-alpha");
  Rng rng(11);
  Mlp net = Mlp::random(1, 4, rng);
  TrialState psi(Envelope(EnvelopeKind::RadialExp, 0.8, 1), net);
  const double r = 2.3;
  const double x[1] = {r};
  const QuadratureRule& q = prob->quadrature_grid().axis(0);
  double column = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double y[1] = {q.nodes[j]};
    column += q.weights[j] * prob->kernel(r, q.nodes[j]) * psi.value(y);
  }
  const double local = -prob->kinetic_coefficient() * psi.derivative(x, MultiIndex::axis(1, 0, 2)) +
                       prob->potential(x) * psi.value(x);
  CHECK(prob->hamiltonian(psi, x) == doctest::Approx(local + column).epsilon(1e-12));
}

namespace {

// DiracState construction leaves the networks zeroed; fill them.
DiracState random_dirac_state(double beta, int hidden, std::uint64_t seed) {
  DiracState s(beta, hidden);
  Rng rng(seed);
  std::vector<double> p(s.parameter_count());
  for (double& v : p) v = rng.uniform(-1.0, 1.0);
  // Keep the lower component dominant so the energy denominator stays away
  // from zero.
  const int nf = s.f_net.parameter_count();
  for (int i = nf - hidden; i < nf; ++i) p[i] *= 0.3;
  p.back() = std::log(beta);
  s.set_parameters(p);
  return s;
}

}  // namespace

TEST_CASE("dirac problem wiring and residual convention") {
  DiracProblem prob;
  CHECK(prob.components() == 2);
  CHECK(prob.dimension() == 1);
  CHECK(prob.mass() == doctest::Approx(MuonicParams{}.reduced_mass()).epsilon(1e-12));

  DiracState s = random_dirac_state(0.05, 4, 99);
  const double r = 5.0;
  const double E = prob.mass() - 10.0;
  const double x[1] = {r};
  const double V = prob.potential(x);
  const auto res = dirac_residuals(prob, s, r, E);
  const double hc = constants::hbar_c;
  CHECK(res[0] == doctest::Approx(s.df(r) + s.f(r) / r -
                                  (prob.mass() - E + V) * s.g(r) / hc)
                      .epsilon(1e-12));
  CHECK(res[1] == doctest::Approx(s.dg(r) - s.g(r) / r +
                                  (-prob.mass() - E + V) * s.f(r) / hc)
                      .epsilon(1e-12));
}

TEST_CASE("dirac state parameter round trip") {
  DiracState s = random_dirac_state(0.07, 5, 12);
  std::vector<double> p(s.parameter_count());
  s.get_parameters(p);
  CHECK(p.back() == doctest::Approx(std::log(0.07)).epsilon(1e-12));
  std::vector<double> q = p;
  for (double& v : q) v += 0.01;
  s.set_parameters(q);
  std::vector<double> back(s.parameter_count());
  s.get_parameters(back);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(back[i] == doctest::Approx(q[i]));
}

TEST_CASE("dirac energy functional is finite for a lower-dominated state") {
  DiracProblem prob;
  DiracState s = random_dirac_state(0.05, 6, 4);
  const double e = dirac_energy(prob, s);
  CHECK(std::isfinite(e));
}
