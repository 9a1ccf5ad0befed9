#include "nneig/envelope.hpp"

#include <cmath>
#include <stdexcept>

namespace nneig {

std::string to_string(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::Gaussian1D:
      return "gaussian-1d";
    case EnvelopeKind::RadialExp:
      return "radial-exp";
    case EnvelopeKind::GaussianND:
      return "gaussian-nd";
  }
  throw std::logic_error("to_string: bad envelope kind");
}

EnvelopeKind envelope_kind_from_string(const std::string& name) {
  if (name == "gaussian-1d") return EnvelopeKind::Gaussian1D;
  if (name == "radial-exp") return EnvelopeKind::RadialExp;
  if (name == "gaussian-nd") return EnvelopeKind::GaussianND;
  throw std::invalid_argument("unknown envelope kind: " + name);
}

Envelope::Envelope(EnvelopeKind kind, double shape, int dimension)
    : kind_(kind), shape_(shape), dim_(dimension) {
  if (!(shape > 0.0)) throw std::invalid_argument("Envelope: shape must be positive");
  if (dim_ < 1) throw std::invalid_argument("Envelope: dimension must be >= 1");
  if ((kind_ == EnvelopeKind::Gaussian1D || kind_ == EnvelopeKind::RadialExp) && dim_ != 1)
    throw std::invalid_argument("Envelope: 1D kind with dimension != 1");
}

void Envelope::set_shape(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("Envelope: shape must be positive");
  shape_ = s;
}

namespace {

int check_order(const MultiIndex& mi, int dim) {
  if (mi.size() != dim) throw std::invalid_argument("Envelope: multi-index dimension mismatch");
  const int t = mi.total();
  if (t > 2) throw std::invalid_argument("Envelope: derivative order above 2 unsupported");
  return t;
}

}  // namespace

double Envelope::value(std::span<const double> x) const {
  if (kind_ == EnvelopeKind::RadialExp) return x[0] * std::exp(-shape_ * x[0]);
  double s2 = 0.0;
  for (int k = 0; k < dim_; ++k) s2 += x[k] * x[k];
  return std::exp(-shape_ * s2);
}

double Envelope::derivative(std::span<const double> x, const MultiIndex& mi) const {
  const int t = check_order(mi, dim_);
  if (kind_ == EnvelopeKind::RadialExp) {
    const double r = x[0];
    const double e = std::exp(-shape_ * r);
    switch (t) {
      case 0:
        return r * e;
      case 1:
        return (1.0 - shape_ * r) * e;
      default:
        return (shape_ * shape_ * r - 2.0 * shape_) * e;
    }
  }
  // Gaussian, any dimension.
  const double b = value(x);
  if (t == 0) return b;
  if (t == 1) {
    for (int k = 0; k < dim_; ++k)
      if (mi.orders[k] == 1) return -2.0 * shape_ * x[k] * b;
  }
  // Total order two: either one axis twice or two distinct axes once each.
  int a = -1, c = -1;
  for (int k = 0; k < dim_; ++k) {
    if (mi.orders[k] == 2) return (4.0 * shape_ * shape_ * x[k] * x[k] - 2.0 * shape_) * b;
    if (mi.orders[k] == 1) (a < 0 ? a : c) = k;
  }
  return 4.0 * shape_ * shape_ * x[a] * x[c] * b;
}

double Envelope::shape_derivative(std::span<const double> x, const MultiIndex& mi) const {
  const int t = check_order(mi, dim_);
  if (kind_ == EnvelopeKind::RadialExp) {
    const double r = x[0];
    const double e = std::exp(-shape_ * r);
    switch (t) {
      case 0:
        return -r * r * e;
      case 1:
        return (shape_ * r - 2.0) * r * e;
      default:
        return (-shape_ * shape_ * r * r + 4.0 * shape_ * r - 2.0) * e;
    }
  }
  const double b = value(x);
  double s2 = 0.0;
  for (int k = 0; k < dim_; ++k) s2 += x[k] * x[k];
  if (t == 0) return -s2 * b;
  if (t == 1) {
    for (int k = 0; k < dim_; ++k)
      if (mi.orders[k] == 1) return (-2.0 * x[k] + 2.0 * shape_ * x[k] * s2) * b;
  }
  int a = -1, c = -1;
  for (int k = 0; k < dim_; ++k) {
    if (mi.orders[k] == 2) {
      const double xx = x[k] * x[k];
      return (8.0 * shape_ * xx - 2.0 - (4.0 * shape_ * shape_ * xx - 2.0 * shape_) * s2) * b;
    }
    if (mi.orders[k] == 1) (a < 0 ? a : c) = k;
  }
  const double xy = x[a] * x[c];
  return (8.0 * shape_ * xy - 4.0 * shape_ * shape_ * xy * s2) * b;
}

double Envelope::value_over_r(double r) const {
  if (kind_ != EnvelopeKind::RadialExp)
    throw std::logic_error("Envelope::value_over_r: radial envelopes only");
  return std::exp(-shape_ * r);
}

}  // namespace nneig
