#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "nneig/optimize.hpp"
#include "nneig/problem.hpp"
#include "nneig/problems.hpp"
#include "nneig/trial.hpp"

namespace nneig {

enum class GradientMode { Analytic, FiniteDifference };

std::string to_string(GradientMode mode);
GradientMode gradient_mode_from_string(const std::string& name);

struct SolveConfig {
  OptimizerKind optimizer = OptimizerKind::Bfgs;
  GradientMode gradient = GradientMode::Analytic;
  ShapeScale shape_scale = ShapeScale::Log;
  int hidden_units = -1;  // -1: problem default
  int max_iterations = 5000;
  double error_tolerance = 1e-8;     // stop the optimizer below this
  double gradient_tolerance = 1e-7;  // or below this gradient norm
  double success_error = 1e-8;       // final error below this counts as converged
  // Minimizing the energy quotient for a few hundred iterations before the
  // residual stage steers every restart into the lowest admissible basin;
  // collocation alone is happy to polish whichever eigenstate the random
  // network starts closest to.
  int warm_start_iterations = 300;
  int restarts = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  bool record_trace = true;
};

// Gradient mode resolved to what the problem supports.
SolveConfig default_config(const Problem& prob);

struct TraceRow {
  int iteration;
  double error;
  double energy;
  double gradient_norm;
};

struct EigenSolution {
  double eigenvalue = 0.0;
  double final_error = 0.0;
  Eigen::VectorXd parameters;          // optimization vector at the optimum
  double normalization = 0.0;          // 1 / sqrt(<psi|psi>), quadrature norm
  std::vector<double> residuals;       // normalized summand per collocation point
  std::vector<double> overlaps;        // deflation coefficients at the optimum
  std::vector<TraceRow> trace;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool converged = false;
  std::uint64_t seed_used = 0;
  int hidden_units = 0;
  std::string stop_reason;
};

// Collocation error of Eq.-form
//   E = sum_i [H psi(x_i) - eps psi(x_i)]^2 / <psi|psi>
// with eps recomputed from the problem's energy functional at every
// evaluation. Also usable as a variational objective (minimize eps).
class CollocationObjective {
public:
  CollocationObjective(const Problem& prob, int hidden_units, ShapeScale shape_scale,
                       const DeflationBasis* basis, GradientMode mode, int threads);
  ~CollocationObjective();

  int parameter_count() const;
  TrialState& trial();
  WaveState& state();  // deflated view when a basis is present

  double error(std::span<const double> params);
  void error_gradient(std::span<const double> params, std::span<double> out);
  double variational(std::span<const double> params);  // energy functional
  void variational_gradient(std::span<const double> params, std::span<double> out);

  // Values cached by the most recent evaluation.
  double last_energy() const;
  double last_norm() const;

  // Normalized residual summands at the collocation points.
  std::vector<double> residuals(std::span<const double> params);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Plain quotient <psi|H|psi> / <psi|psi> on the problem's quadrature grid,
// assembled independently of Problem::energy.
double rayleigh_quotient(const WaveState& psi, const Problem& prob);
// Same quotient on an explicit grid; NaN instead of a throw on a degenerate
// norm. The solver re-scores candidates on an off-node grid with this to
// reject states that only solve the discretized equations.
double rayleigh_quotient(const WaveState& psi, const Problem& prob, const TensorGrid& grid);

EigenSolution solve(const Problem& prob, const SolveConfig& cfg,
                    const DeflationBasis* basis = nullptr);
EigenSolution solve_variational(const Problem& prob, const SolveConfig& cfg);

// Coupled two-component solve; only valid for components() == 2 problems.
// The eigenvalue reported is the binding energy E - m c^2.
EigenSolution solve_dirac(const DiracProblem& prob, const SolveConfig& cfg);

// Error functional of the coupled system for a given state (sum of both
// squared residuals over the collocation points, normalized by
// int (g^2 + f^2)); E is recomputed inside. Returns +inf on degenerate
// normalization.
double dirac_error(const DiracProblem& prob, const DiracState& s);

}  // namespace nneig
