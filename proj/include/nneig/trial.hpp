#pragma once

#include <memory>
#include <span>
#include <vector>

#include "nneig/envelope.hpp"
#include "nneig/mlp.hpp"
#include "nneig/quadrature.hpp"

namespace nneig {

enum class ShapeScale { Log, Direct };

// Parametrized wavefunction seen by the solver: value, spatial derivatives,
// and the gradient of both with respect to the optimization vector.
class WaveState {
public:
  virtual ~WaveState() = default;
  virtual int dimension() const = 0;
  virtual int parameter_count() const = 0;
  virtual void set_parameters(std::span<const double> p) = 0;
  virtual void get_parameters(std::span<double> p) const = 0;
  // False when the current vector is outside the admissible region (e.g.
  // nonpositive envelope shape with direct parametrization).
  virtual bool valid() const { return true; }
  virtual double value(std::span<const double> x) const = 0;
  virtual double derivative(std::span<const double> x, const MultiIndex& mi) const = 0;
  // Writes d(D^mi psi)/d(theta) into out (overwrites).
  virtual void parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                                  std::span<double> out) const = 0;
  virtual double value_over_r(double r) const;
};

// Envelope times network. Optimization vector: flat network parameters,
// then (optionally) the envelope shape, stored as log(shape) by default so
// positivity needs no constraint handling.
class TrialState final : public WaveState {
public:
  TrialState(Envelope env, Mlp net, bool optimize_shape = true,
             ShapeScale scale = ShapeScale::Log);

  const Envelope& envelope() const { return env_; }
  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }

  int dimension() const override { return env_.dimension(); }
  int parameter_count() const override;
  void set_parameters(std::span<const double> p) override;
  void get_parameters(std::span<double> p) const override;
  bool valid() const override { return valid_; }
  double value(std::span<const double> x) const override;
  double derivative(std::span<const double> x, const MultiIndex& mi) const override;
  void parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                          std::span<double> out) const override;
  double value_over_r(double r) const override;

private:
  Envelope env_;
  Mlp net_;
  bool opt_shape_;
  ShapeScale scale_;
  bool valid_ = true;
};

// One frozen, normalized state: a linear combination of envelope*network
// terms. Excited states keep their projection corrections as extra terms so
// the stored state is orthogonal to everything before it.
struct TrialTerm {
  double coeff;
  Envelope env;
  Mlp net;
};

class BasisState {
public:
  BasisState(std::vector<TrialTerm> terms, double eigenvalue);

  double value(std::span<const double> x) const;
  double derivative(std::span<const double> x, const MultiIndex& mi) const;
  double value_over_r(double r) const;
  double eigenvalue() const { return eigenvalue_; }
  const std::vector<TrialTerm>& terms() const { return terms_; }

private:
  std::vector<TrialTerm> terms_;
  double eigenvalue_;
};

// Ordered list of computed states used to project lower levels out of the
// trial during excited-state solves.
class DeflationBasis {
public:
  int size() const { return static_cast<int>(states_.size()); }
  bool empty() const { return states_.empty(); }
  const BasisState& state(int a) const { return states_.at(a); }

  void append(BasisState state) { states_.push_back(std::move(state)); }

  // Builds the normalized deflated combination for a converged raw trial:
  //   psi = c * (raw - sum_a overlaps[a] * state_a)
  // with c fixed by <psi|psi> = 1 under quad. Returns the appended state.
  const BasisState& append_solution(const TrialState& raw,
                                    std::span<const double> overlaps,
                                    const TensorGrid& quad, double eigenvalue);

  // Quadrature overlap <state_a | state_b>.
  double overlap(int a, int b, const TensorGrid& quad) const;

private:
  std::vector<BasisState> states_;
};

// raw minus its projection onto every basis state. Overlap coefficients
// (and their parameter gradients) are recomputed lazily after each
// set_parameters and evaluated with the fixed quadrature grid.
class DeflatedState final : public WaveState {
public:
  DeflatedState(WaveState& raw, const DeflationBasis& basis, const TensorGrid& quad);

  int dimension() const override { return raw_.dimension(); }
  int parameter_count() const override { return raw_.parameter_count(); }
  void set_parameters(std::span<const double> p) override;
  void get_parameters(std::span<double> p) const override { raw_.get_parameters(p); }
  bool valid() const override { return raw_.valid(); }
  double value(std::span<const double> x) const override;
  double derivative(std::span<const double> x, const MultiIndex& mi) const override;
  void parameter_gradient(std::span<const double> x, const MultiIndex& mi,
                          std::span<double> out) const override;
  double value_over_r(double r) const override;

  // Current projection coefficients <state_a | raw>.
  const std::vector<double>& overlaps() const;

private:
  void ensure_overlaps() const;
  void ensure_overlap_gradients() const;

  WaveState& raw_;
  const DeflationBasis& basis_;
  const TensorGrid& quad_;
  std::vector<std::vector<double>> basis_at_quad_;  // [state][node]
  mutable bool dirty_ = true, grad_dirty_ = true;
  mutable std::vector<double> coeff_;               // c_a
  mutable std::vector<std::vector<double>> dcoeff_; // d c_a / d theta
};

DeflatedState deflate(WaveState& raw, const DeflationBasis& basis, const TensorGrid& quad);

}  // namespace nneig
