#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <vector>

// Finite element reference solver for two-dimensional Schrodinger operators
// -1/2 Lap + V on a square with homogeneous Dirichlet walls. Biquadratic
// Lagrange elements on a uniform mesh; the generalized pencil K x = eps M x
// is solved by shift-invert Arnoldi with locking. Kept fully independent of
// the collocation solver so the two can cross-check each other.

namespace nneig::fem {

using SpMat = Eigen::SparseMatrix<double>;
using Potential2D = std::function<double(double, double)>;

class Mesh2D {
 public:
  Mesh2D(int elements_per_side, double lo, double hi);

  int elements_per_side() const { return ne_; }
  int nodes_per_side() const { return 2 * ne_ + 1; }
  int node_count() const { return nodes_per_side() * nodes_per_side(); }
  double element_width() const { return h_; }
  double lo() const { return lo_; }

  double node_coord(int k) const { return lo_ + 0.5 * h_ * k; }
  int node_index(int ix, int iy) const { return iy * nodes_per_side() + ix; }
  // Local nodes are numbered a + 3b with a,b in {0,1,2} along x,y.
  int element_node(int ex, int ey, int local) const {
    return node_index(2 * ex + local % 3, 2 * ey + local / 3);
  }
  bool boundary(int global) const {
    const int n = nodes_per_side();
    const int ix = global % n, iy = global / n;
    return ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1;
  }
  int boundary_count() const { return 4 * (nodes_per_side() - 1); }

 private:
  int ne_;
  double lo_, hi_, h_;
};

// Quadratic Lagrange shape functions on the reference interval [0,1],
// nodes at 0, 1/2, 1.
void lagrange3(double xi, double value[3], double gradient[3]);

// 9x9 element stiffness (1/2 grad.grad + V) and mass matrices.
void element_matrices(const Mesh2D& mesh, int ex, int ey, const Potential2D& pot,
                      Eigen::Matrix<double, 9, 9>& stiffness,
                      Eigen::Matrix<double, 9, 9>& mass);

// Global assembly with Dirichlet walls eliminated in place: boundary rows and
// columns are zeroed, the stiffness diagonal gets 1 and the mass diagonal 0,
// so the pencil acquires spurious infinite eigenvalues on the wall space.
void assemble(const Mesh2D& mesh, const Potential2D& pot, SpMat& stiffness, SpMat& mass);

struct PencilOptions {
  int want = 6;            // number of lowest finite eigenvalues
  double sigma = 0.1;      // shift, below the physical spectrum
  int ncv = 30;            // Arnoldi subspace bound, including locked vectors
  int max_restarts = 80;
  double tol = 1e-8;       // relative pencil residual |Kx - eps Mx| / |Kx|
  std::uint64_t seed = 20240101;
};

struct PencilEigenpair {
  double value = 0.0;
  double residual = 0.0;
  Eigen::VectorXd vector;
};

// Lowest finite eigenvalues of K x = eps M x. Works on the transformed
// operator C = (K - sigma M)^{-1} M whose eigenvalues are nu = 1/(eps-sigma);
// the wall modes land at nu = 0 and are discarded. Throws when `want` pairs
// cannot be converged to `tol`.
std::vector<PencilEigenpair> lowest_eigenpairs(const SpMat& stiffness, const SpMat& mass,
                                               const PencilOptions& opts = {});

struct FemResult {
  int elements_per_side = 0;
  int nodes = 0;  // generalized coordinates, including wall nodes
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
};

// Reference spectrum of the Henon-Heiles Hamiltonian on [-6,6]^2.
FemResult henon_heiles_reference(int elements_per_side, int n_eigenvalues = 6,
                                 const PencilOptions* opts = nullptr);

// Mesh refinement study over the given element counts.
std::vector<FemResult> refinement_table(const std::vector<int>& sizes, int n_eigenvalues = 6);

}  // namespace nneig::fem
