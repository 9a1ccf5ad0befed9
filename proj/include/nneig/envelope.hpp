#pragma once

#include <span>
#include <string>

#include "nneig/mlp.hpp"

namespace nneig {

enum class EnvelopeKind {
  Gaussian1D,  // exp(-shape * x^2)
  RadialExp,   // r * exp(-shape * r), r >= 0
  GaussianND,  // exp(-shape * sum_k x_k^2)
};

std::string to_string(EnvelopeKind kind);
EnvelopeKind envelope_kind_from_string(const std::string& name);

// Boundary/asymptotics factor multiplying the network. shape must stay
// positive; spatial derivatives are supported to total order 2.
class Envelope {
public:
  Envelope(EnvelopeKind kind, double shape, int dimension);

  EnvelopeKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  double shape() const { return shape_; }
  void set_shape(double s);

  double value(std::span<const double> x) const;
  double derivative(std::span<const double> x, const MultiIndex& mi) const;
  // d/dshape of derivative(x, mi).
  double shape_derivative(std::span<const double> x, const MultiIndex& mi) const;
  // RadialExp only: value(r)/r evaluated without dividing by r.
  double value_over_r(double r) const;

private:
  EnvelopeKind kind_;
  double shape_;
  int dim_;
};

}  // namespace nneig
