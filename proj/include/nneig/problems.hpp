#pragma once

#include <array>
#include <memory>
#include <vector>

#include "nneig/problem.hpp"

namespace nneig {

// Shared physical constants (MeV / fm units).
namespace constants {
inline constexpr double hbar_c = 197.3270;          // MeV fm
inline constexpr double muon_mass = 105.6584;       // MeV / c^2
inline constexpr double proton_mass = 938.2720;     // MeV / c^2
inline constexpr double neutron_mass = 939.5654;    // MeV / c^2
inline constexpr double electron_compton = 386.159; // fm, hbar / (m_e c)
}  // namespace constants

// --- Morse oscillator (I2 molecule, atomic units) ---

struct MorseParams {
  double well_depth = 0.0224;  // D
  double alpha = 0.9374;
  double mass = 119406.0;      // reduced mass
  double zeta = 156.047612535;
  double xi = 5.741837286e-4;
};

double morse_potential(const MorseParams& p, double x);
// Exact bound level: (n + 1/2) * (1 - (n + 1/2)/zeta) * xi.
double morse_exact_level(const MorseParams& p, int n);

// --- Muonic atom bound to a finite Pb-208 nucleus (MeV / fm) ---

struct MuonicParams {
  double density_scale = 0.0614932;  // Fermi distribution A, fm^-3
  double radius = 6.685;             // Fermi distribution b, fm
  double diffuseness = 0.545;        // Fermi distribution c, fm
  double fine_structure = 1.0 / 137.037;
  double log_constant = 1.781;       // exp(Euler gamma)
  int protons = 82;
  int neutrons = 126;
  double r_max = 40.0;               // fm, domain and integration cutoff

  double e_squared() const;          // fine_structure * hbar_c, MeV fm
  double reduced_mass() const;       // MeV / c^2
  double density(double r) const;    // proton density, fm^-3
};

// Electrostatic potential of the Fermi charge distribution,
//   V_e(r) = -4 pi e^2 [ (1/r) int_0^r rho s^2 ds + int_r^inf rho s ds ].
double electrostatic_potential(const MuonicParams& p, double r);

// Lowest-order vacuum polarization correction,
//   V_p = (2 alpha / 3 pi) (V_L - (5/6) V_e),
// where V_L carries the short-distance logarithmic moments of the charge
// distribution. Both log arguments are dimensionless: C|r - r'|/lambda_e and
// C(r + r')/lambda_e with lambda_e the reduced electron Compton wavelength.
double vacuum_polarization(const MuonicParams& p, double r);

// Computes V_e + V_p with an optional node cache so repeated evaluation on a
// fixed grid does not redo the inner integrals.
class MuonicPotential {
public:
  explicit MuonicPotential(MuonicParams p);

  const MuonicParams& params() const { return p_; }
  double electrostatic(double r) const;
  double log_moment(double r) const;  // V_L
  double vacuum_polarization(double r) const;
  double fresh(double r) const;       // V_e + V_p, no cache
  void cache_nodes(const std::vector<double>& rs);
  double operator()(double r) const;  // cached when r is a cached node

private:
  MuonicParams p_;
  QuadratureRule inner_;  // reference Gauss-Legendre rule on [0, 1]
  std::vector<double> cache_r_, cache_v_;
};

// --- Neutron-alpha nonlocal interaction (MeV / fm) ---

struct NonlocalParams {
  double v0 = 41.28386;        // MeV, local Gaussian well depth
  double range = 0.2751965;    // fm^-2, local well range
  double strength = 62.03772;  // MeV fm^-1, |A| in the exchange kernel
  double gamma = 0.8025;       // fm^-2
  double k = 0.46;             // fm^-2
  double r_max = 12.0;         // fm
  // The kernel is attractive for positive radii:
  //   K0(r, r') = -strength * exp(-gamma (r^2 + r'^2)) * 2 sinh(2 k r r').
  // Sign flips are kept as explicit knobs so alternative conventions can be
  // probed; the defaults reproduce the known ground-state energy.
  double strength_sign = 1.0;
  double gamma_sign = 1.0;

  double reduced_mass() const;  // MeV / c^2, n + (2n + 2p) core
};

double nonlocal_kernel(const NonlocalParams& p, double r, double rp);

// --- Coupled anharmonic oscillators ---

double henon_heiles_potential(double x, double y);
double sextic_potential(double x, double y, double z);

// --- Coupled radial Dirac system for the muonic atom ---

// Two networks sharing one r*exp(-beta r) envelope. Optimization vector:
// upper (small) component parameters, lower (large) component parameters,
// log(beta).
struct DiracState {
  Envelope env;
  Mlp f_net, g_net;

  DiracState(double beta, int hidden);

  int parameter_count() const { return f_net.parameter_count() + g_net.parameter_count() + 1; }
  void set_parameters(std::span<const double> p);
  void get_parameters(std::span<double> p) const;

  double f(double r) const;
  double df(double r) const;
  double f_over_r(double r) const;
  double g(double r) const;
  double dg(double r) const;
  double g_over_r(double r) const;
};

class DiracProblem final : public Problem {
public:
  explicit DiracProblem(MuonicParams params = {}, int grid_points = -1);

  const std::string& id() const override;
  int dimension() const override { return 1; }
  int components() const override { return 2; }
  const TensorGrid& collocation_grid() const override { return grid_; }
  const TensorGrid& quadrature_grid() const override { return grid_; }
  Envelope initial_envelope() const override;
  int default_hidden_units() const override { return 8; }
  double kinetic_coefficient() const override;
  double potential(std::span<const double> x) const override { return pot_(x[0]); }

  double mass() const { return mass_; }  // reduced mass * c^2, MeV
  const MuonicParams& params() const { return pot_.params(); }

private:
  MuonicPotential pot_;
  double mass_;
  TensorGrid grid_;
};

// Residuals of the coupled system at r for total energy E:
//   f' + f/r - (m - E + V) g / hbar_c,
//   g' - g/r - (m + E - V) f / hbar_c.
std::array<double, 2> dirac_residuals(const DiracProblem& prob, const DiracState& s,
                                      double r, double E);

// Total energy functional
//   E = [ m int (g^2 + f^2) + int V (g^2 - f^2) ] / int (g^2 - f^2).
// Returns NaN when the denominator degenerates.
double dirac_energy(const DiracProblem& prob, const DiracState& s);

// --- Catalog ---

std::vector<std::string> problem_ids();
// grid_points overrides the per-axis collocation count (and the shared
// integration grid where the two coincide); -1 keeps the published setup.
std::unique_ptr<Problem> make_problem(const std::string& id, int grid_points = -1);
std::unique_ptr<Problem> make_nonlocal_problem(const NonlocalParams& params,
                                               int grid_points = -1);

}  // namespace nneig
