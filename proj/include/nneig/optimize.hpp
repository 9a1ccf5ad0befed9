#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace nneig {

enum class OptimizerKind { Bfgs, ConjugateGradient, GradientDescent };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

using ValueFn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OptimizeOptions {
  OptimizerKind kind = OptimizerKind::Bfgs;
  int max_iterations = 5000;
  double f_tolerance = 1e-8;  // stop when f drops below this
  double g_tolerance = 1e-7;  // stop when the gradient norm drops below this
  // Called after every accepted iterate with (iteration, f, gradient norm).
  std::function<void(int, double, double)> on_iteration;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;  // an explicit tolerance was hit
  std::string stop_reason;
};

// Unconstrained minimization with a strong Wolfe line search
// (c1 = 1e-4, c2 = 0.9). f may return +inf or NaN outside the admissible
// region; such points are rejected by the line search.
OptimizeResult minimize(const ValueFn& f, const GradFn& g, Eigen::VectorXd x0,
                        const OptimizeOptions& opts);

}  // namespace nneig
