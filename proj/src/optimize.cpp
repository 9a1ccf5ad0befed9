#include "nneig/optimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nneig {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Bfgs:
      return "bfgs";
    case OptimizerKind::ConjugateGradient:
      return "cg";
    case OptimizerKind::GradientDescent:
      return "gd";
  }
  throw std::logic_error("to_string: bad optimizer kind");
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "bfgs") return OptimizerKind::Bfgs;
  if (name == "cg") return OptimizerKind::ConjugateGradient;
  if (name == "gd") return OptimizerKind::GradientDescent;
  throw std::invalid_argument("unknown optimizer: " + name);
}

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineSearchResult {
  double alpha = 0.0;
  double f = 0.0;
  bool ok = false;
};

double finite_or_inf(double v) { return std::isfinite(v) ? v : kInf; }

// Strong Wolfe line search on phi(a) = f(x + a d). phi0/dphi0 are the value
// and slope at a = 0 (dphi0 < 0 required). Evaluates the gradient at every
// trial point; g_out holds the gradient at the accepted point on success.
LineSearchResult wolfe_search(const ValueFn& f, const GradFn& g, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& d, double phi0, double dphi0,
                              double alpha_init, Eigen::VectorXd& g_out) {
  Eigen::VectorXd xt(x.size());

  auto phi = [&](double a) -> double {
    xt = x + a * d;
    return finite_or_inf(f(xt));
  };
  auto dphi = [&](double a) -> double {
    xt = x + a * d;
    g(xt, g_out);
    return g_out.dot(d);
  };

  auto zoom = [&](double lo, double f_lo, double dphi_lo, double hi, double f_hi) -> LineSearchResult {
    for (int it = 0; it < 40; ++it) {
      // Quadratic interpolation using the low endpoint slope, safeguarded
      // toward bisection.
      double a;
      if (std::isfinite(f_hi) && std::isfinite(f_lo)) {
        const double denom = 2.0 * (f_hi - f_lo - dphi_lo * (hi - lo));
        a = denom != 0.0 ? lo - dphi_lo * (hi - lo) * (hi - lo) / denom : 0.5 * (lo + hi);
        const double lo_b = std::min(lo, hi), hi_b = std::max(lo, hi);
        const double margin = 0.1 * (hi_b - lo_b);
        if (!(a > lo_b + margin && a < hi_b - margin)) a = 0.5 * (lo + hi);
      } else {
        a = 0.5 * (lo + hi);
      }

      const double fa = phi(a);
      if (fa > phi0 + kC1 * a * dphi0 || fa >= f_lo) {
        hi = a;
        f_hi = fa;
      } else {
        const double da = dphi(a);
        if (std::abs(da) <= -kC2 * dphi0) return {a, fa, true};
        if (da * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = a;
        f_lo = fa;
        dphi_lo = da;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    // Could not satisfy the curvature condition; accept the best sufficient
    // decrease point if there is one.
    if (std::isfinite(f_lo) && f_lo < phi0 && lo > 0.0) {
      dphi(lo);
      return {lo, f_lo, true};
    }
    return {};
  };

  double a_prev = 0.0, f_prev = phi0, dphi_prev = dphi0;
  double a = alpha_init;
  const double a_max = 1e6;
  for (int it = 0; it < 30; ++it) {
    const double fa = phi(a);
    if (fa > phi0 + kC1 * a * dphi0 || (it > 0 && fa >= f_prev))
      return zoom(a_prev, f_prev, dphi_prev, a, fa);
    const double da = dphi(a);
    if (std::abs(da) <= -kC2 * dphi0) return {a, fa, true};
    if (da >= 0.0) return zoom(a, fa, da, a_prev, f_prev);
    a_prev = a;
    f_prev = fa;
    dphi_prev = da;
    a = std::min(2.0 * a, a_max);
    if (a_prev >= a_max) break;
  }
  return {};
}

}  // namespace

OptimizeResult minimize(const ValueFn& f, const GradFn& g, Eigen::VectorXd x0,
                        const OptimizeOptions& opts) {
  const int n = static_cast<int>(x0.size());
  OptimizeResult res;
  res.x = std::move(x0);

  Eigen::VectorXd grad(n), grad_new(n), d(n), s(n), y(n), hy(n);
  Eigen::MatrixXd h;  // inverse Hessian estimate (BFGS only)
  const bool bfgs = opts.kind == OptimizerKind::Bfgs;
  const bool cg = opts.kind == OptimizerKind::ConjugateGradient;
  if (bfgs) h = Eigen::MatrixXd::Identity(n, n);

  double fx = f(res.x);
  if (!std::isfinite(fx)) throw std::invalid_argument("minimize: objective not finite at x0");
  g(res.x, grad);
  double gnorm = grad.norm();
  bool first_update = true;
  double alpha_prev = 0.0, gd_prev = 0.0;
  d = -grad;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    res.f = fx;
    res.gradient_norm = gnorm;
    if (fx < opts.f_tolerance) {
      res.converged = true;
      res.stop_reason = "objective below tolerance";
      break;
    }
    if (gnorm < opts.g_tolerance) {
      res.converged = true;
      res.stop_reason = "gradient norm below tolerance";
      break;
    }

    double gd = grad.dot(d);
    if (!(gd < 0.0)) {
      // Not a descent direction: fall back to steepest descent.
      d = -grad;
      if (bfgs) h.setIdentity();
      gd = grad.dot(d);
    }

    double alpha_init = 1.0;
    if (!bfgs) {
      alpha_init = iter == 0 ? 1.0 / std::max(1.0, gnorm)
                             : std::min(1.0, 1.01 * alpha_prev * gd_prev / gd);
      if (!(alpha_init > 0.0) || !std::isfinite(alpha_init)) alpha_init = 1.0;
    }

    LineSearchResult ls = wolfe_search(f, g, res.x, d, fx, gd, alpha_init, grad_new);
    if (!ls.ok && (bfgs || cg)) {
      // Retry once along steepest descent with a fresh curvature model.
      d = -grad;
      if (bfgs) h.setIdentity();
      gd = grad.dot(d);
      ls = wolfe_search(f, g, res.x, d, fx, gd, 1.0 / std::max(1.0, gnorm), grad_new);
    }
    if (!ls.ok) {
      res.stop_reason = "line search failed";
      break;
    }

    s = ls.alpha * d;
    y = grad_new - grad;
    res.x += s;
    fx = ls.f;
    alpha_prev = ls.alpha;
    gd_prev = gd;

    if (bfgs) {
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (first_update) {
          h *= sy / y.squaredNorm();
          first_update = false;
        }
        const double rho = 1.0 / sy;
        hy.noalias() = h * y;
        const double yhy = y.dot(hy);
        h.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
        h.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
      }
      d.noalias() = -(h * grad_new);
    } else if (cg) {
      const double beta = std::max(0.0, grad_new.dot(grad_new - grad) / grad.squaredNorm());
      d = -grad_new + beta * d;
    } else {
      d = -grad_new;
    }

    grad.swap(grad_new);
    gnorm = grad.norm();
    if (!std::isfinite(gnorm)) {
      res.stop_reason = "non-finite gradient";
      break;
    }
    if (opts.on_iteration) opts.on_iteration(iter + 1, fx, gnorm);
  }

  res.f = fx;
  res.gradient_norm = gnorm;
  res.iterations = iter;
  if (res.stop_reason.empty()) res.stop_reason = "iteration limit";
  return res;
}

}  // namespace nneig
