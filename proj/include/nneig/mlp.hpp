#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace nneig {

// Deterministic RNG. mt19937_64 output is standard-specified; the uniform
// conversion is hand-rolled so streams are reproducible across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }  // [0,1)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
  std::mt19937_64 gen_;
};

double sigmoid(double z);
// k-th derivative of the sigmoid, closed form in s = sigmoid(z); k <= 4.
double sigmoid_derivative(double z, int k);

// Differentiation multi-index, one order per input coordinate.
struct MultiIndex {
  std::vector<int> orders;

  static MultiIndex zeros(int n) { return {std::vector<int>(n, 0)}; }
  static MultiIndex axis(int n, int j, int order = 1) {
    MultiIndex mi = zeros(n);
    mi.orders[j] = order;
    return mi;
  }
  int size() const { return static_cast<int>(orders.size()); }
  int total() const {
    int t = 0;
    for (int o : orders) t += o;
    return t;
  }
};

// Single hidden layer, sigmoid activations, linear output:
//   N(x) = sum_i v_i s(z_i),  z_i = sum_j w_ij x_j + u_i.
// Flat parameter order: input weights row-major (i*n + j), then hidden
// biases, then output weights; total m*n + 2m.
class Mlp {
public:
  Mlp(int n_inputs, int n_hidden);

  // All weights and biases uniform in [-1, 1).
  static Mlp random(int n_inputs, int n_hidden, Rng& rng);

  int inputs() const { return n_in_; }
  int hidden() const { return n_hid_; }
  int parameter_count() const { return n_hid_ * n_in_ + 2 * n_hid_; }

  Eigen::MatrixXd& input_weights() { return w_; }
  const Eigen::MatrixXd& input_weights() const { return w_; }
  Eigen::VectorXd& hidden_biases() { return u_; }
  const Eigen::VectorXd& hidden_biases() const { return u_; }
  Eigen::VectorXd& output_weights() { return v_; }
  const Eigen::VectorXd& output_weights() const { return v_; }

  void flatten(std::span<double> out) const;
  void unflatten(std::span<const double> in);

  double forward(std::span<const double> x) const;

  // Mixed partial of the output with respect to the inputs:
  //   D^mi N = sum_i v_i P_i s^(|mi|)(z_i),  P_i = prod_j w_ij^mi_j.
  // Supports mi.total() <= 4.
  double input_derivative(std::span<const double> x, const MultiIndex& mi) const;

  // Gradient of D^mi N with respect to the flat parameter vector; adds
  // scale * gradient into out. Supports mi.total() <= 3.
  void parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                          double scale, std::span<double> out) const;

private:
  int n_in_, n_hid_;
  Eigen::MatrixXd w_;  // n_hid x n_in
  Eigen::VectorXd u_, v_;
};

}  // namespace nneig
