#include "nneig/trial.hpp"

#include <cmath>
#include <stdexcept>

namespace nneig {

double WaveState::value_over_r(double) const {
  throw std::logic_error("value_over_r: radial states only");
}

namespace {

constexpr double kBinom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};

// Enumerates sub-multi-indices kappa <= mi (componentwise) and calls
// fn(kappa, mi - kappa, binomial coefficient). Total order is capped at 2,
// so the counter runs over at most two active axes.
template <class Fn>
void leibniz(const MultiIndex& mi, Fn&& fn) {
  const int n = mi.size();
  for (int j = 0; j < n; ++j)
    if (mi.orders[j] < 0 || mi.orders[j] > 2)
      throw std::invalid_argument("trial derivative: per-axis order must be in [0, 2]");
  MultiIndex kappa = MultiIndex::zeros(n);
  MultiIndex rest = mi;
  for (;;) {
    double binom = 1.0;
    for (int j = 0; j < n; ++j) binom *= kBinom[mi.orders[j]][kappa.orders[j]];
    fn(kappa, rest, binom);
    int j = 0;
    for (; j < n; ++j) {
      if (kappa.orders[j] < mi.orders[j]) {
        ++kappa.orders[j];
        --rest.orders[j];
        break;
      }
      rest.orders[j] += kappa.orders[j];
      kappa.orders[j] = 0;
    }
    if (j == n) return;
  }
}

}  // namespace

TrialState::TrialState(Envelope env, Mlp net, bool optimize_shape, ShapeScale scale)
    : env_(std::move(env)), net_(std::move(net)), opt_shape_(optimize_shape), scale_(scale) {
  if (env_.dimension() != net_.inputs())
    throw std::invalid_argument("TrialState: envelope/network dimension mismatch");
}

int TrialState::parameter_count() const {
  return net_.parameter_count() + (opt_shape_ ? 1 : 0);
}

void TrialState::set_parameters(std::span<const double> p) {
  if (static_cast<int>(p.size()) != parameter_count())
    throw std::invalid_argument("TrialState::set_parameters: bad size");
  net_.unflatten(p.first(net_.parameter_count()));
  if (opt_shape_) {
    const double raw = p.back();
    if (scale_ == ShapeScale::Log) {
      // exp underflows to 0 (and overflows to inf) for extreme steps; treat
      // both as inadmissible rather than throwing mid line search.
      const double shape = std::exp(raw);
      if (shape > 0.0 && std::isfinite(shape)) {
        env_.set_shape(shape);
        valid_ = true;
      } else {
        valid_ = false;
      }
    } else if (raw > 0.0) {
      env_.set_shape(raw);
      valid_ = true;
    } else {
      valid_ = false;  // leave previous shape; callers must check valid()
    }
  }
}

void TrialState::get_parameters(std::span<double> p) const {
  if (static_cast<int>(p.size()) != parameter_count())
    throw std::invalid_argument("TrialState::get_parameters: bad size");
  net_.flatten(p.first(net_.parameter_count()));
  if (opt_shape_)
    p.back() = scale_ == ShapeScale::Log ? std::log(env_.shape()) : env_.shape();
}

double TrialState::value(std::span<const double> x) const {
  return env_.value(x) * net_.forward(x);
}

double TrialState::derivative(std::span<const double> x, const MultiIndex& mi) const {
  double out = 0.0;
  leibniz(mi, [&](const MultiIndex& kappa, const MultiIndex& rest, double binom) {
    out += binom * env_.derivative(x, kappa) * net_.input_derivative(x, rest);
  });
  return out;
}

void TrialState::parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                                    std::span<double> out) const {
  if (static_cast<int>(out.size()) != parameter_count())
    throw std::invalid_argument("TrialState::parameter_gradient: bad output size");
  std::fill(out.begin(), out.end(), 0.0);
  auto net_block = out.first(net_.parameter_count());
  double dshape = 0.0;
  leibniz(mi, [&](const MultiIndex& kappa, const MultiIndex& rest, double binom) {
    net_.parameter_gradient(x, rest, binom * env_.derivative(x, kappa), net_block);
    if (opt_shape_)
      dshape += binom * env_.shape_derivative(x, kappa) * net_.input_derivative(x, rest);
  });
  if (opt_shape_)
    out.back() = scale_ == ShapeScale::Log ? dshape * env_.shape() : dshape;
}

double TrialState::value_over_r(double r) const {
  const double x[1] = {r};
  return env_.value_over_r(r) * net_.forward(x);
}

BasisState::BasisState(std::vector<TrialTerm> terms, double eigenvalue)
    : terms_(std::move(terms)), eigenvalue_(eigenvalue) {
  if (terms_.empty()) throw std::invalid_argument("BasisState: no terms");
}

double BasisState::value(std::span<const double> x) const {
  double out = 0.0;
  for (const TrialTerm& t : terms_) out += t.coeff * t.env.value(x) * t.net.forward(x);
  return out;
}

double BasisState::derivative(std::span<const double> x, const MultiIndex& mi) const {
  double out = 0.0;
  for (const TrialTerm& t : terms_) {
    leibniz(mi, [&](const MultiIndex& kappa, const MultiIndex& rest, double binom) {
      out += t.coeff * binom * t.env.derivative(x, kappa) * t.net.input_derivative(x, rest);
    });
  }
  return out;
}

double BasisState::value_over_r(double r) const {
  const double x[1] = {r};
  double out = 0.0;
  for (const TrialTerm& t : terms_) out += t.coeff * t.env.value_over_r(r) * t.net.forward(x);
  return out;
}

const BasisState& DeflationBasis::append_solution(const TrialState& raw,
                                                  std::span<const double> overlaps,
                                                  const TensorGrid& quad,
                                                  double eigenvalue) {
  if (static_cast<int>(overlaps.size()) != size())
    throw std::invalid_argument("append_solution: overlap count != basis size");

  std::vector<TrialTerm> terms;
  terms.push_back({1.0, raw.envelope(), raw.network()});
  for (int a = 0; a < size(); ++a)
    for (const TrialTerm& t : states_[a].terms())
      terms.push_back({-overlaps[a] * t.coeff, t.env, t.net});

  BasisState combined(std::move(terms), eigenvalue);
  const double norm2 = integrate(quad, [&](std::span<const double> x) {
    const double v = combined.value(x);
    return v * v;
  });
  if (!(norm2 > 0.0)) throw std::runtime_error("append_solution: zero-norm state");
  const double inv = 1.0 / std::sqrt(norm2);

  std::vector<TrialTerm> scaled = combined.terms();
  for (TrialTerm& t : scaled) t.coeff *= inv;
  states_.emplace_back(std::move(scaled), eigenvalue);
  return states_.back();
}

double DeflationBasis::overlap(int a, int b, const TensorGrid& quad) const {
  const BasisState& sa = states_.at(a);
  const BasisState& sb = states_.at(b);
  return integrate(quad, [&](std::span<const double> x) { return sa.value(x) * sb.value(x); });
}

DeflatedState::DeflatedState(WaveState& raw, const DeflationBasis& basis,
                             const TensorGrid& quad)
    : raw_(raw), basis_(basis), quad_(quad) {
  basis_at_quad_.resize(basis_.size());
  std::vector<double> x(quad_.dimension());
  for (int a = 0; a < basis_.size(); ++a) {
    basis_at_quad_[a].resize(quad_.size());
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      quad_.point(q, x);
      basis_at_quad_[a][q] = basis_.state(a).value(x);
    }
  }
  coeff_.assign(basis_.size(), 0.0);
}

void DeflatedState::set_parameters(std::span<const double> p) {
  raw_.set_parameters(p);
  dirty_ = grad_dirty_ = true;
}

void DeflatedState::ensure_overlaps() const {
  if (!dirty_) return;
  std::vector<double> x(quad_.dimension());
  for (int a = 0; a < basis_.size(); ++a) coeff_[a] = 0.0;
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    quad_.point(q, x);
    const double w = quad_.weight(q);
    const double v = raw_.value(x);
    for (int a = 0; a < basis_.size(); ++a) coeff_[a] += w * basis_at_quad_[a][q] * v;
  }
  dirty_ = false;
}

void DeflatedState::ensure_overlap_gradients() const {
  if (!grad_dirty_) return;
  const int np = raw_.parameter_count();
  dcoeff_.assign(basis_.size(), std::vector<double>(np, 0.0));
  std::vector<double> x(quad_.dimension());
  std::vector<double> g(np);
  const MultiIndex mi0 = MultiIndex::zeros(quad_.dimension());
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    quad_.point(q, x);
    const double w = quad_.weight(q);
    raw_.parameter_gradient(x, mi0, g);
    for (int a = 0; a < basis_.size(); ++a) {
      const double wb = w * basis_at_quad_[a][q];
      for (int p = 0; p < np; ++p) dcoeff_[a][p] += wb * g[p];
    }
  }
  grad_dirty_ = false;
}

double DeflatedState::value(std::span<const double> x) const {
  ensure_overlaps();
  double out = raw_.value(x);
  for (int a = 0; a < basis_.size(); ++a) out -= coeff_[a] * basis_.state(a).value(x);
  return out;
}

double DeflatedState::derivative(std::span<const double> x, const MultiIndex& mi) const {
  ensure_overlaps();
  double out = raw_.derivative(x, mi);
  for (int a = 0; a < basis_.size(); ++a) out -= coeff_[a] * basis_.state(a).derivative(x, mi);
  return out;
}

void DeflatedState::parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                                       std::span<double> out) const {
  ensure_overlaps();
  ensure_overlap_gradients();
  raw_.parameter_gradient(x, mi, out);
  for (int a = 0; a < basis_.size(); ++a) {
    const double ba = basis_.state(a).derivative(x, mi);
    const std::vector<double>& da = dcoeff_[a];
    for (std::size_t p = 0; p < out.size(); ++p) out[p] -= da[p] * ba;
  }
}

double DeflatedState::value_over_r(double r) const {
  ensure_overlaps();
  double out = raw_.value_over_r(r);
  for (int a = 0; a < basis_.size(); ++a) out -= coeff_[a] * basis_.state(a).value_over_r(r);
  return out;
}

const std::vector<double>& DeflatedState::overlaps() const {
  ensure_overlaps();
  return coeff_;
}

DeflatedState deflate(WaveState& raw, const DeflationBasis& basis, const TensorGrid& quad) {
  return DeflatedState(raw, basis, quad);
}

}  // namespace nneig
