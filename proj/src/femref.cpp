#include "nneig/femref.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nneig/mlp.hpp"
#include "nneig/problems.hpp"
#include "nneig/quadrature.hpp"

namespace nneig::fem {

Mesh2D::Mesh2D(int elements_per_side, double lo, double hi)
    : ne_(elements_per_side), lo_(lo), hi_(hi), h_((hi - lo) / elements_per_side) {
  if (elements_per_side < 1) throw std::invalid_argument("Mesh2D: need at least one element");
  if (!(hi > lo)) throw std::invalid_argument("Mesh2D: empty domain");
}

void lagrange3(double xi, double value[3], double gradient[3]) {
  value[0] = (2.0 * xi - 1.0) * (xi - 1.0);
  value[1] = 4.0 * xi * (1.0 - xi);
  value[2] = xi * (2.0 * xi - 1.0);
  gradient[0] = 4.0 * xi - 3.0;
  gradient[1] = 4.0 - 8.0 * xi;
  gradient[2] = 4.0 * xi - 1.0;
}

void element_matrices(const Mesh2D& mesh, int ex, int ey, const Potential2D& pot,
                      Eigen::Matrix<double, 9, 9>& stiffness,
                      Eigen::Matrix<double, 9, 9>& mass) {
  static const QuadratureRule gauss = gauss_legendre(3, 0.0, 1.0);
  const double h = mesh.element_width();
  const double x0 = mesh.lo() + ex * h;
  const double y0 = mesh.lo() + ey * h;
  stiffness.setZero();
  mass.setZero();
  double lx[3], dlx[3], ly[3], dly[3];
  for (std::size_t qx = 0; qx < gauss.size(); ++qx) {
    lagrange3(gauss.nodes[qx], lx, dlx);
    for (std::size_t qy = 0; qy < gauss.size(); ++qy) {
      lagrange3(gauss.nodes[qy], ly, dly);
      const double jac = h * h;
      const double w = gauss.weights[qx] * gauss.weights[qy] * jac;
      const double v = pot(x0 + gauss.nodes[qx] * h, y0 + gauss.nodes[qy] * h);
      for (int i = 0; i < 9; ++i) {
        const int a = i % 3, b = i / 3;
        const double phi_i = lx[a] * ly[b];
        const double gx_i = dlx[a] * ly[b] / h;
        const double gy_i = lx[a] * dly[b] / h;
        for (int j = 0; j <= i; ++j) {
          const int c = j % 3, d = j / 3;
          const double phi_j = lx[c] * ly[d];
          const double gx_j = dlx[c] * ly[d] / h;
          const double gy_j = lx[c] * dly[d] / h;
          stiffness(i, j) += w * (0.5 * (gx_i * gx_j + gy_i * gy_j) + v * phi_i * phi_j);
          mass(i, j) += w * phi_i * phi_j;
        }
      }
    }
  }
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j) {
      stiffness(i, j) = stiffness(j, i);
      mass(i, j) = mass(j, i);
    }
}

void assemble(const Mesh2D& mesh, const Potential2D& pot, SpMat& stiffness, SpMat& mass) {
  const int n = mesh.node_count();
  std::vector<Eigen::Triplet<double>> tk, tm;
  const int ne = mesh.elements_per_side();
  tk.reserve(static_cast<std::size_t>(ne) * ne * 81 + n);
  tm.reserve(static_cast<std::size_t>(ne) * ne * 81);
  Eigen::Matrix<double, 9, 9> ke, me;
  for (int ey = 0; ey < ne; ++ey) {
    for (int ex = 0; ex < ne; ++ex) {
      element_matrices(mesh, ex, ey, pot, ke, me);
      for (int i = 0; i < 9; ++i) {
        const int gi = mesh.element_node(ex, ey, i);
        if (mesh.boundary(gi)) continue;
        for (int j = 0; j < 9; ++j) {
          const int gj = mesh.element_node(ex, ey, j);
          if (mesh.boundary(gj)) continue;
          tk.emplace_back(gi, gj, ke(i, j));
          tm.emplace_back(gi, gj, me(i, j));
        }
      }
    }
  }
  for (int g = 0; g < n; ++g)
    if (mesh.boundary(g)) tk.emplace_back(g, g, 1.0);
  stiffness.resize(n, n);
  mass.resize(n, n);
  stiffness.setFromTriplets(tk.begin(), tk.end());
  mass.setFromTriplets(tm.begin(), tm.end());
  stiffness.makeCompressed();
  mass.makeCompressed();
}

namespace {

double pencil_residual(const SpMat& k, const SpMat& m, const Eigen::VectorXd& x, double eps) {
  const Eigen::VectorXd kx = k * x;
  return (kx - eps * (m * x)).norm() / kx.norm();
}

}  // namespace

std::vector<PencilEigenpair> lowest_eigenpairs(const SpMat& stiffness, const SpMat& mass,
                                               const PencilOptions& opts) {
  const Eigen::Index n = stiffness.rows();
  if (mass.rows() != n || stiffness.cols() != n || mass.cols() != n)
    throw std::invalid_argument("lowest_eigenpairs: pencil dimensions disagree");
  if (opts.want < 1 || opts.ncv <= opts.want + 1)
    throw std::invalid_argument("lowest_eigenpairs: need ncv > want + 1");

  SpMat shifted = stiffness - opts.sigma * mass;
  shifted.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("lowest_eigenpairs: shifted stiffness is singular");
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return lu.solve(mass * v); };

  // C = (K - sigma M)^{-1} M is self-adjoint in the M inner product, so the
  // whole iteration (orthogonalization, locking, restarts) runs in that
  // metric. Wall modes have zero M norm and never enter the Krylov space;
  // every basis vector is an image under C, hence supported away from the
  // eliminated Dirichlet rows.
  Rng rng(opts.seed);
  auto random_vector = [&]() {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 2.0 * rng.uniform() - 1.0;
    return v;
  };

  std::vector<Eigen::VectorXd> locked, locked_m;  // x and M x, M-orthonormal
  auto project_locked = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t a = 0; a < locked.size(); ++a) v -= locked_m[a].dot(v) * locked[a];
  };

  std::vector<PencilEigenpair> out;
  Eigen::VectorXd next_start = apply(random_vector());

  // The want-th smallest converged value. A single Krylov space holds one
  // vector per distinct eigenvalue, so degenerate copies stay invisible until
  // a first member is locked; once want values exist, fresh random cycles
  // must twice confirm that nothing new converges below this cut.
  auto threshold = [&]() {
    if (static_cast<int>(out.size()) < opts.want)
      return std::numeric_limits<double>::infinity();
    std::vector<double> vals;
    vals.reserve(out.size());
    for (const auto& p : out) vals.push_back(p.value);
    std::nth_element(vals.begin(), vals.begin() + (opts.want - 1), vals.end());
    return vals[opts.want - 1];
  };

  int clean_checks = 0;
  bool chasing = false;
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    if (static_cast<int>(out.size()) >= opts.want && clean_checks >= 2) break;
    const double thr = threshold();
    const bool verifying = static_cast<int>(out.size()) >= opts.want;

    const int m = opts.ncv - static_cast<int>(locked.size());
    if (m < 2) {
      if (verifying) break;  // no Krylov room left, accept the converged set
      throw std::runtime_error("lowest_eigenpairs: locked space exhausted ncv");
    }
    Eigen::MatrixXd v(n, m + 1);   // M-orthonormal Krylov basis
    Eigen::MatrixXd mv(n, m + 1);  // M v, cached for inner products
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);

    Eigen::VectorXd v0 = (verifying && !chasing) ? apply(random_vector()) : next_start;
    project_locked(v0);
    double nrm0 = std::sqrt(std::max(0.0, v0.dot(mass * v0)));
    if (!(nrm0 > 1e-12)) {
      v0 = apply(random_vector());
      project_locked(v0);
      nrm0 = std::sqrt(std::max(0.0, v0.dot(mass * v0)));
    }
    if (!(nrm0 > 1e-12)) {
      // The deflated space carries no mass: every finite mode is locked.
      if (verifying) break;
      throw std::runtime_error("lowest_eigenpairs: pencil has fewer finite modes than requested");
    }
    v.col(0) = v0 / nrm0;
    mv.col(0) = mass * v.col(0);

    int steps = m;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd w = apply(v.col(j));
      project_locked(w);
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const double c = mv.col(i).dot(w);
          h(i, j) += c;
          w -= c * v.col(i);
        }
      }
      const Eigen::VectorXd mw = mass * w;
      h(j + 1, j) = std::sqrt(std::max(0.0, w.dot(mw)));
      if (h(j + 1, j) < 1e-13) {
        steps = j + 1;
        break;
      }
      v.col(j + 1) = w / h(j + 1, j);
      mv.col(j + 1) = mw / h(j + 1, j);
    }

    const Eigen::MatrixXd hm = h.topLeftCorner(steps, steps);
    Eigen::EigenSolver<Eigen::MatrixXd> es(hm);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("lowest_eigenpairs: Hessenberg eigendecomposition failed");

    // Ritz values nu, largest first: nu = 1/(eps - sigma), so the dominant
    // ones correspond to the eigenvalues nearest the shift.
    std::vector<int> order(steps);
    for (int i = 0; i < steps; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return es.eigenvalues()(a).real() > es.eigenvalues()(b).real();
    });

    const double nu_max = std::abs(es.eigenvalues()(order.front()).real());
    Eigen::VectorXd best_unconverged;
    double eps_unconverged = std::numeric_limits<double>::infinity();
    bool found_below = false;
    for (int idx : order) {
      const std::complex<double> nu = es.eigenvalues()(idx);
      if (std::abs(nu.imag()) > 1e-8 * std::max(1.0, std::abs(nu.real()))) continue;
      // Wall modes: the eliminated Dirichlet space maps to nu = 0.
      if (std::abs(nu.real()) <= 1e-8 * std::max(1.0, nu_max)) continue;
      if (nu.real() <= 0.0) continue;
      Eigen::VectorXd x = v.leftCols(steps) * es.eigenvectors().col(idx).real();
      project_locked(x);
      const Eigen::VectorXd mx = mass * x;
      const double nrm = std::sqrt(std::max(0.0, x.dot(mx)));
      if (nrm < 1e-12) continue;
      x /= nrm;
      const double eps = opts.sigma + 1.0 / nu.real();
      const double res = pencil_residual(stiffness, mass, x, eps);
      if (res <= opts.tol) {
        if (eps < thr) found_below = true;
        locked.push_back(x);
        locked_m.push_back(mx / nrm);
        out.push_back({eps, res, std::move(x)});
      } else if (best_unconverged.size() == 0) {
        best_unconverged = std::move(x);
        eps_unconverged = eps;
      }
    }

    if (static_cast<int>(out.size()) < opts.want) {
      next_start = best_unconverged.size() ? best_unconverged : apply(random_vector());
      chasing = false;
      clean_checks = 0;
    } else if (found_below) {
      clean_checks = 0;
      chasing = false;
    } else if (eps_unconverged < threshold()) {
      // A candidate below the cut exists but has not converged yet; keep
      // polishing it instead of burning a fresh random cycle on it.
      next_start = best_unconverged;
      chasing = true;
      clean_checks = 0;
    } else {
      ++clean_checks;
      chasing = false;
    }
  }

  if (static_cast<int>(out.size()) < opts.want)
    throw std::runtime_error("lowest_eigenpairs: Arnoldi failed to converge the requested pairs");
  std::sort(out.begin(), out.end(),
            [](const PencilEigenpair& a, const PencilEigenpair& b) { return a.value < b.value; });
  out.resize(opts.want);
  return out;
}

FemResult henon_heiles_reference(int elements_per_side, int n_eigenvalues,
                                 const PencilOptions* opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Mesh2D mesh(elements_per_side, -6.0, 6.0);
  SpMat k, m;
  assemble(mesh, [](double x, double y) { return henon_heiles_potential(x, y); }, k, m);
  const auto t1 = std::chrono::steady_clock::now();

  PencilOptions popts = opts ? *opts : PencilOptions{};
  popts.want = n_eigenvalues;
  const auto pairs = lowest_eigenpairs(k, m, popts);
  const auto t2 = std::chrono::steady_clock::now();

  FemResult res;
  res.elements_per_side = elements_per_side;
  res.nodes = mesh.node_count();
  for (const PencilEigenpair& p : pairs) {
    res.eigenvalues.push_back(p.value);
    res.residuals.push_back(p.residual);
  }
  res.assemble_seconds = std::chrono::duration<double>(t1 - t0).count();
  res.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
  return res;
}

std::vector<FemResult> refinement_table(const std::vector<int>& sizes, int n_eigenvalues) {
  std::vector<FemResult> table;
  table.reserve(sizes.size());
  for (int ne : sizes) table.push_back(henon_heiles_reference(ne, n_eigenvalues));
  return table;
}

}  // namespace nneig::fem
