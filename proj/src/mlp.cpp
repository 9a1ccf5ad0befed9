#include "nneig/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace nneig {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sigmoid_derivative(double z, int k) {
  const double s = sigmoid(z);
  switch (k) {
    case 0:
      return s;
    case 1:
      return s * (1.0 - s);
    case 2:
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    case 3:
      return s * (1.0 - s) * (1.0 + s * (-6.0 + 6.0 * s));
    case 4:
      return s * (1.0 - s) * (1.0 + s * (-14.0 + s * (36.0 - 24.0 * s)));
    default:
      throw std::invalid_argument("sigmoid_derivative: order must be in [0, 4]");
  }
}

namespace {

// w^k for small integer k >= 0 with 0^0 == 1.
double ipow(double w, int k) {
  double p = 1.0;
  for (int i = 0; i < k; ++i) p *= w;
  return p;
}

}  // namespace

Mlp::Mlp(int n_inputs, int n_hidden) : n_in_(n_inputs), n_hid_(n_hidden) {
  if (n_inputs < 1 || n_hidden < 1)
    throw std::invalid_argument("Mlp: need at least one input and one hidden unit");
  w_ = Eigen::MatrixXd::Zero(n_hid_, n_in_);
  u_ = Eigen::VectorXd::Zero(n_hid_);
  v_ = Eigen::VectorXd::Zero(n_hid_);
}

Mlp Mlp::random(int n_inputs, int n_hidden, Rng& rng) {
  Mlp net(n_inputs, n_hidden);
  for (int i = 0; i < n_hidden; ++i) {
    for (int j = 0; j < n_inputs; ++j) net.w_(i, j) = rng.uniform(-1.0, 1.0);
    net.u_(i) = rng.uniform(-1.0, 1.0);
    net.v_(i) = rng.uniform(-1.0, 1.0);
  }
  return net;
}

void Mlp::flatten(std::span<double> out) const {
  if (static_cast<int>(out.size()) != parameter_count())
    throw std::invalid_argument("Mlp::flatten: bad size");
  int p = 0;
  for (int i = 0; i < n_hid_; ++i)
    for (int j = 0; j < n_in_; ++j) out[p++] = w_(i, j);
  for (int i = 0; i < n_hid_; ++i) out[p++] = u_(i);
  for (int i = 0; i < n_hid_; ++i) out[p++] = v_(i);
}

void Mlp::unflatten(std::span<const double> in) {
  if (static_cast<int>(in.size()) != parameter_count())
    throw std::invalid_argument("Mlp::unflatten: bad size");
  int p = 0;
  for (int i = 0; i < n_hid_; ++i)
    for (int j = 0; j < n_in_; ++j) w_(i, j) = in[p++];
  for (int i = 0; i < n_hid_; ++i) u_(i) = in[p++];
  for (int i = 0; i < n_hid_; ++i) v_(i) = in[p++];
}

double Mlp::forward(std::span<const double> x) const {
  double out = 0.0;
  for (int i = 0; i < n_hid_; ++i) {
    double z = u_(i);
    for (int j = 0; j < n_in_; ++j) z += w_(i, j) * x[j];
    out += v_(i) * sigmoid(z);
  }
  return out;
}

double Mlp::input_derivative(std::span<const double> x, const MultiIndex& mi) const {
  if (mi.size() != n_in_)
    throw std::invalid_argument("Mlp::input_derivative: multi-index dimension mismatch");
  const int order = mi.total();
  if (order > 4)
    throw std::invalid_argument("Mlp::input_derivative: total order above 4 unsupported");

  double out = 0.0;
  for (int i = 0; i < n_hid_; ++i) {
    double z = u_(i);
    for (int j = 0; j < n_in_; ++j) z += w_(i, j) * x[j];
    double pw = 1.0;
    for (int j = 0; j < n_in_; ++j) pw *= ipow(w_(i, j), mi.orders[j]);
    out += v_(i) * pw * sigmoid_derivative(z, order);
  }
  return out;
}

void Mlp::parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                             double scale, std::span<double> out) const {
  if (mi.size() != n_in_)
    throw std::invalid_argument("Mlp::parameter_gradient: multi-index dimension mismatch");
  if (static_cast<int>(out.size()) != parameter_count())
    throw std::invalid_argument("Mlp::parameter_gradient: bad output size");
  const int order = mi.total();
  if (order > 3)
    throw std::invalid_argument("Mlp::parameter_gradient: total order above 3 unsupported");

  const int nw = n_hid_ * n_in_;
  for (int i = 0; i < n_hid_; ++i) {
    double z = u_(i);
    for (int j = 0; j < n_in_; ++j) z += w_(i, j) * x[j];
    const double sk = sigmoid_derivative(z, order);
    const double sk1 = sigmoid_derivative(z, order + 1);
    double pw = 1.0;
    for (int j = 0; j < n_in_; ++j) pw *= ipow(w_(i, j), mi.orders[j]);

    // d/dw_ij: product-rule term on P_i plus the chain term through z_i.
    for (int j = 0; j < n_in_; ++j) {
      double dpw = 0.0;
      if (mi.orders[j] > 0) {
        dpw = mi.orders[j] * ipow(w_(i, j), mi.orders[j] - 1);
        for (int k = 0; k < n_in_; ++k)
          if (k != j) dpw *= ipow(w_(i, k), mi.orders[k]);
      }
      out[i * n_in_ + j] += scale * v_(i) * (dpw * sk + pw * x[j] * sk1);
    }
    out[nw + i] += scale * v_(i) * pw * sk1;       // d/du_i
    out[nw + n_hid_ + i] += scale * pw * sk;       // d/dv_i
  }
}

}  // namespace nneig
