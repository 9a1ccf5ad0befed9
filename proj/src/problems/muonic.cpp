#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "nneig/problems.hpp"

namespace nneig {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Accumulates rule-weighted f over the reference rule mapped to [lo, hi].
double mapped_integral(const QuadratureRule& ref, double lo, double hi,
                       const std::function<double(double)>& f) {
  if (!(hi > lo)) return 0.0;
  const double span = hi - lo;
  double sum = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    sum += span * ref.weights[i] * f(lo + span * ref.nodes[i]);
  return sum;
}

}  // namespace

double MuonicParams::e_squared() const { return fine_structure * constants::hbar_c; }

double MuonicParams::reduced_mass() const {
  const double nucleus = protons * constants::proton_mass + neutrons * constants::neutron_mass;
  return 1.0 / (1.0 / constants::muon_mass + 1.0 / nucleus);
}

double MuonicParams::density(double r) const {
  return density_scale / (1.0 + std::exp((r - radius) / diffuseness));
}

MuonicPotential::MuonicPotential(MuonicParams p) : p_(p), inner_(gauss_legendre(40, 0.0, 1.0)) {}

double MuonicPotential::electrostatic(double r) const {
  const auto rho_s2 = [this](double s) { return p_.density(s) * s * s; };
  const auto rho_s = [this](double s) { return p_.density(s) * s; };
  if (r <= 0.0) return -4.0 * kPi * p_.e_squared() * mapped_integral(inner_, 0.0, p_.r_max, rho_s);
  const double near = mapped_integral(inner_, 0.0, r, rho_s2) / r;
  const double far = mapped_integral(inner_, r, p_.r_max, rho_s);
  return -4.0 * kPi * p_.e_squared() * (near + far);
}

double MuonicPotential::log_moment(double r) const {
  const double c = p_.log_constant / constants::electron_compton;
  // g(x) = x (ln(C x / lambda_e) - 1), continuous with g(0) = 0.
  const auto g = [c](double x) { return x > 0.0 ? x * (std::log(c * x) - 1.0) : 0.0; };
  if (r <= 0.0) {
    const auto f0 = [&](double s) {
      return s > 0.0 ? p_.density(s) * s * std::log(c * s) : 0.0;
    };
    return 4.0 * kPi * p_.e_squared() * mapped_integral(inner_, 0.0, p_.r_max, f0);
  }
  const auto f = [&](double s) {
    return p_.density(s) * s * (g(std::abs(r - s)) - g(r + s));
  };
  // Split at the kink s = r.
  const double inner_part = mapped_integral(inner_, 0.0, std::min(r, p_.r_max), f);
  const double outer_part = mapped_integral(inner_, std::min(r, p_.r_max), p_.r_max, f);
  return -2.0 * kPi * p_.e_squared() / r * (inner_part + outer_part);
}

double MuonicPotential::vacuum_polarization(double r) const {
  const double pref = 2.0 * p_.fine_structure / (3.0 * kPi);
  return pref * (log_moment(r) - (5.0 / 6.0) * electrostatic(r));
}

double MuonicPotential::fresh(double r) const {
  return electrostatic(r) + vacuum_polarization(r);
}

void MuonicPotential::cache_nodes(const std::vector<double>& rs) {
  cache_r_ = rs;
  cache_v_.resize(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) cache_v_[i] = fresh(rs[i]);
}

double MuonicPotential::operator()(double r) const {
  const auto it = std::lower_bound(cache_r_.begin(), cache_r_.end(), r);
  if (it != cache_r_.end() && *it == r) return cache_v_[it - cache_r_.begin()];
  return fresh(r);
}

double electrostatic_potential(const MuonicParams& p, double r) {
  return MuonicPotential(p).electrostatic(r);
}

double vacuum_polarization(const MuonicParams& p, double r) {
  return MuonicPotential(p).vacuum_polarization(r);
}

namespace {

TensorGrid muonic_grid(const MuonicParams& p, int grid_points) {
  const int n = grid_points > 0 ? grid_points : 80;
  return TensorGrid({gauss_legendre(n, 0.0, p.r_max)});
}

// Decay constant matching a few-MeV radial bound state; refined by the
// optimizer.
constexpr double kMuonicBeta0 = 0.3;

class MuonicSchrodingerProblem final : public Problem {
public:
  MuonicSchrodingerProblem(MuonicParams p, int grid_points)
      : pot_(p), mass_(p.reduced_mass()), grid_(muonic_grid(p, grid_points)) {
    pot_.cache_nodes(grid_.axis(0).nodes);
  }

  const std::string& id() const override {
    static const std::string name = "muonic-schrodinger";
    return name;
  }
  int dimension() const override { return 1; }
  const TensorGrid& collocation_grid() const override { return grid_; }
  const TensorGrid& quadrature_grid() const override { return grid_; }

  Envelope initial_envelope() const override {
    return Envelope(EnvelopeKind::RadialExp, kMuonicBeta0, 1);
  }
  int default_hidden_units() const override { return 8; }

  double kinetic_coefficient() const override {
    return constants::hbar_c * constants::hbar_c / (2.0 * mass_);
  }
  double potential(std::span<const double> x) const override { return pot_(x[0]); }
  bool energy_first_derivative_form() const override { return true; }

private:
  MuonicPotential pot_;
  double mass_;
  TensorGrid grid_;
};

}  // namespace

DiracState::DiracState(double beta, int hidden)
    : env(EnvelopeKind::RadialExp, beta, 1), f_net(1, hidden), g_net(1, hidden) {}

void DiracState::set_parameters(std::span<const double> p) {
  if (static_cast<int>(p.size()) != parameter_count())
    throw std::invalid_argument("DiracState::set_parameters: bad size");
  const int nf = f_net.parameter_count();
  const int ng = g_net.parameter_count();
  f_net.unflatten(p.first(nf));
  g_net.unflatten(p.subspan(nf, ng));
  env.set_shape(std::exp(p.back()));
}

void DiracState::get_parameters(std::span<double> p) const {
  if (static_cast<int>(p.size()) != parameter_count())
    throw std::invalid_argument("DiracState::get_parameters: bad size");
  const int nf = f_net.parameter_count();
  const int ng = g_net.parameter_count();
  f_net.flatten(p.first(nf));
  g_net.flatten(p.subspan(nf, ng));
  p.back() = std::log(env.shape());
}

namespace {

double component(const Envelope& env, const Mlp& net, double r) {
  const double x[1] = {r};
  return env.value(x) * net.forward(x);
}

double component_derivative(const Envelope& env, const Mlp& net, double r) {
  const double x[1] = {r};
  const MultiIndex d1 = MultiIndex::axis(1, 0, 1);
  return env.derivative(x, d1) * net.forward(x) + env.value(x) * net.input_derivative(x, d1);
}

}  // namespace

double DiracState::f(double r) const { return component(env, f_net, r); }
double DiracState::df(double r) const { return component_derivative(env, f_net, r); }
double DiracState::f_over_r(double r) const {
  const double x[1] = {r};
  return env.value_over_r(r) * f_net.forward(x);
}
double DiracState::g(double r) const { return component(env, g_net, r); }
double DiracState::dg(double r) const { return component_derivative(env, g_net, r); }
double DiracState::g_over_r(double r) const {
  const double x[1] = {r};
  return env.value_over_r(r) * g_net.forward(x);
}

DiracProblem::DiracProblem(MuonicParams params, int grid_points)
    : pot_(params), mass_(params.reduced_mass()), grid_(muonic_grid(params, grid_points)) {
  pot_.cache_nodes(grid_.axis(0).nodes);
}

const std::string& DiracProblem::id() const {
  static const std::string name = "muonic-dirac";
  return name;
}

Envelope DiracProblem::initial_envelope() const {
  return Envelope(EnvelopeKind::RadialExp, kMuonicBeta0, 1);
}

double DiracProblem::kinetic_coefficient() const {
  return constants::hbar_c * constants::hbar_c / (2.0 * mass_);
}

std::array<double, 2> dirac_residuals(const DiracProblem& prob, const DiracState& s,
                                      double r, double E) {
  const double x[1] = {r};
  const double v = prob.potential(x);
  const double m = prob.mass();
  const double hc = constants::hbar_c;
  const double r1 = s.df(r) + s.f_over_r(r) - (m - E + v) * s.g(r) / hc;
  const double r2 = s.dg(r) - s.g_over_r(r) - (m + E - v) * s.f(r) / hc;
  return {r1, r2};
}

double dirac_energy(const DiracProblem& prob, const DiracState& s) {
  const QuadratureRule& q = prob.quadrature_grid().axis(0);
  double num = 0.0, den = 0.0, mag = 0.0;
  const double m = prob.mass();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double r = q.nodes[i];
    const double w = q.weights[i];
    const double x[1] = {r};
    const double f2 = s.f(r) * s.f(r);
    const double g2 = s.g(r) * s.g(r);
    num += w * (m * (g2 + f2) + prob.potential(x) * (g2 - f2));
    den += w * (g2 - f2);
    mag += w * (g2 + f2);
  }
  if (std::abs(den) <= 1e-12 * mag) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

std::unique_ptr<Problem> detail_make_muonic(int grid_points) {
  return std::make_unique<MuonicSchrodingerProblem>(MuonicParams{}, grid_points);
}

std::unique_ptr<Problem> detail_make_dirac(int grid_points) {
  return std::make_unique<DiracProblem>(MuonicParams{}, grid_points);
}

}  // namespace nneig
