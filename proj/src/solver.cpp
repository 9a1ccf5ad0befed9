#include "nneig/solver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>

namespace nneig {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<double> as_span(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
}

std::string to_string(GradientMode mode) {
  return mode == GradientMode::Analytic ? "analytic" : "fd";
}

GradientMode gradient_mode_from_string(const std::string& name) {
  if (name == "analytic") return GradientMode::Analytic;
  if (name == "fd") return GradientMode::FiniteDifference;
  throw std::invalid_argument("unknown gradient mode: " + name);
}

SolveConfig default_config(const Problem& prob) {
  SolveConfig cfg;
  if (!prob.analytic_gradient_supported()) cfg.gradient = GradientMode::FiniteDifference;
  return cfg;
}

namespace {

// Runs work(begin, end, partial) over fixed-size chunks. Chunk boundaries and
// the combination order are independent of the thread count, so results are
// bit-reproducible for any `threads`.
template <class Partial, class Work, class Combine>
void chunked(std::size_t n, int threads, const Partial& proto, Work&& work,
             Combine&& combine) {
  constexpr std::size_t kChunk = 2048;
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  if (threads <= 1 || nchunks <= 1) {
    Partial p = proto;
    for (std::size_t c = 0; c < nchunks; ++c) {
      work(c * kChunk, std::min(n, (c + 1) * kChunk), p);
    }
    combine(p);
    return;
  }
  std::vector<Partial> partials(nchunks, proto);
  std::atomic<std::size_t> next{0};
  auto runner = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      work(c * kChunk, std::min(n, (c + 1) * kChunk), partials[c]);
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min<std::size_t>(threads, nchunks);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(runner);
  for (std::thread& t : pool) t.join();
  for (Partial& p : partials) combine(p);
}

struct GradPartial {
  Eigen::VectorXd dn, dnum, a;
  explicit GradPartial(int p = 0)
      : dn(Eigen::VectorXd::Zero(p)), dnum(Eigen::VectorXd::Zero(p)),
        a(Eigen::VectorXd::Zero(p)) {}
};

}  // namespace

struct CollocationObjective::Impl {
  const Problem& prob;
  GradientMode mode;
  int threads;
  TrialState trial;
  std::optional<DeflatedState> defl;
  WaveState* state = nullptr;

  bool same = false;      // collocation and quadrature grids are one object
  bool by_parts = false;  // kinetic part of the functional in (psi')^2 form
  bool kernel = false;
  int dim = 0, np = 0;
  std::size_t nc = 0, nq = 0;
  std::vector<double> cpts, qpts, qw;      // flattened points, quad weights
  std::vector<double> pot_c, pot_q;        // potential cached on the grids
  Eigen::MatrixXd k_cq, k_qq;              // kernel samples
  MultiIndex mi0, mi1;
  std::vector<MultiIndex> mi2;

  // Caches filled by the last value pass.
  Eigen::VectorXd last_params;
  bool have_value = false;
  std::vector<double> vq, d1q, lapq, hq, vc, rc;
  double norm = 0.0, energy = 0.0, err = kInf, bscal = 0.0;

  Impl(const Problem& p, int hidden, ShapeScale scale, const DeflationBasis* basis,
       GradientMode m, int nthreads)
      : prob(p), mode(m), threads(std::max(1, nthreads)),
        trial(p.initial_envelope(),
              Mlp(p.dimension(), hidden > 0 ? hidden : p.default_hidden_units()),
              p.optimize_shape(), scale),
        mi0(MultiIndex::zeros(p.dimension())), mi1(MultiIndex::axis(p.dimension(), 0, 1)) {
    if (p.components() != 1)
      throw std::invalid_argument("CollocationObjective: scalar problems only");
    if (mode == GradientMode::Analytic && !p.analytic_gradient_supported())
      throw std::invalid_argument("analytic gradients unsupported for " + p.id());
    if (basis && !basis->empty()) defl.emplace(trial, *basis, p.quadrature_grid());
    state = defl ? static_cast<WaveState*>(&*defl) : &trial;

    const TensorGrid& cg = p.collocation_grid();
    const TensorGrid& qg = p.quadrature_grid();
    same = &cg == &qg;
    by_parts = p.energy_first_derivative_form();
    kernel = p.has_kernel();
    dim = p.dimension();
    np = state->parameter_count();
    nc = cg.size();
    nq = qg.size();

    for (int a = 0; a < dim; ++a) mi2.push_back(MultiIndex::axis(dim, a, 2));

    cpts.resize(nc * dim);
    qpts.resize(nq * dim);
    qw.resize(nq);
    pot_c.resize(nc);
    pot_q.resize(nq);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < nc; ++i) {
      cg.point(i, x);
      std::copy(x.begin(), x.end(), cpts.begin() + i * dim);
      pot_c[i] = p.potential(x);
    }
    for (std::size_t j = 0; j < nq; ++j) {
      qg.point(j, x);
      std::copy(x.begin(), x.end(), qpts.begin() + j * dim);
      qw[j] = qg.weight(j);
      pot_q[j] = p.potential(x);
    }
    if (kernel) {
      if (dim != 1) throw std::invalid_argument("kernel operators are 1D only");
      k_cq.resize(nc, nq);
      k_qq.resize(nq, nq);
      for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < nq; ++j) k_cq(i, j) = p.kernel(cpts[i], qpts[j]);
      for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nq; ++j) k_qq(i, j) = p.kernel(qpts[i], qpts[j]);
    }

    vq.resize(nq);
    if (by_parts) d1q.resize(nq);
    if (!by_parts) {
      lapq.resize(nq);
      hq.resize(nq);
    }
    vc.resize(nc);
    rc.resize(nc);
  }

  std::span<const double> cpt(std::size_t i) const {
    return {cpts.data() + i * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> qpt(std::size_t j) const {
    return {qpts.data() + j * dim, static_cast<std::size_t>(dim)};
  }

  bool apply_params(std::span<const double> params) {
    state->set_parameters(params);
    have_value = false;
    if (!state->valid()) return false;
    if (defl) {
      // Materialize the lazy overlap cache before any parallel section.
      (void)state->value(qpt(0));
    }
    return true;
  }

  double laplacian(std::span<const double> x) const {
    double lap = 0.0;
    for (int a = 0; a < dim; ++a) lap += state->derivative(x, mi2[a]);
    return lap;
  }

  // Energy functional only (quadrature arrays + eps). Returns false when the
  // state is degenerate.
  bool energy_pass() {
    struct Part {
      double n = 0.0, num = 0.0;
    };
    const double kappa = prob.kinetic_coefficient();
    chunked(
        nq, threads, Part{},
        [&](std::size_t b, std::size_t e, Part& p) {
          for (std::size_t j = b; j < e; ++j) {
            const auto x = qpt(j);
            const double v = state->value(x);
            vq[j] = v;
            p.n += qw[j] * v * v;
            if (by_parts) {
              double g2 = 0.0;
              for (int a = 0; a < dim; ++a) {
                const double dv = state->derivative(x, MultiIndex::axis(dim, a, 1));
                if (dim == 1) d1q[j] = dv;
                g2 += dv * dv;
              }
              p.num += qw[j] * (kappa * g2 + pot_q[j] * v * v);
            } else {
              lapq[j] = laplacian(x);
            }
          }
        },
        [&](Part& p) {
          norm += p.n;
          energy += p.num;
        });
    // `norm`/`energy` accumulate across combine calls; reset first.
    return true;
  }

  double value_pass(std::span<const double> params, std::vector<double>* samples) {
    if (!apply_params(params)) {
      err = kInf;
      energy = std::numeric_limits<double>::quiet_NaN();
      return err;
    }
    norm = 0.0;
    energy = 0.0;
    energy_pass();
    if (!(norm > 1e-280)) {
      err = kInf;
      energy = std::numeric_limits<double>::quiet_NaN();
      return err;
    }

    if (!by_parts) {
      // Assemble H psi on the quadrature grid for the direct quotient.
      const double kappa = prob.kinetic_coefficient();
      double num = 0.0;
      Eigen::VectorXd wv;
      if (kernel) {
        wv.resize(nq);
        for (std::size_t j = 0; j < nq; ++j) wv(j) = qw[j] * vq[j];
      }
      for (std::size_t j = 0; j < nq; ++j) {
        hq[j] = -kappa * lapq[j] + pot_q[j] * vq[j];
        if (kernel) hq[j] += k_qq.row(j).dot(wv);
        num += qw[j] * vq[j] * hq[j];
      }
      energy = num / norm;
    } else {
      if (kernel) {
        Eigen::VectorXd wv(nq);
        for (std::size_t j = 0; j < nq; ++j) wv(j) = qw[j] * vq[j];
        energy += wv.dot(k_qq * wv);
      }
      energy /= norm;
    }

    // Residuals on the collocation points.
    const double kappa = prob.kinetic_coefficient();
    const double eps = energy;
    Eigen::VectorXd wv;
    if (kernel) {
      wv.resize(nq);
      for (std::size_t j = 0; j < nq; ++j) wv(j) = qw[j] * vq[j];
    }
    struct Part {
      double s = 0.0, b = 0.0;
    };
    double s_total = 0.0;
    bscal = 0.0;
    chunked(
        nc, threads, Part{},
        [&](std::size_t b, std::size_t e, Part& p) {
          for (std::size_t i = b; i < e; ++i) {
            const auto x = cpt(i);
            const double v = same ? vq[i] : state->value(x);
            const double lap = (same && !by_parts) ? lapq[i] : laplacian(x);
            double h = -kappa * lap + pot_c[i] * v;
            if (kernel) h += k_cq.row(i).dot(wv);
            const double r = h - eps * v;
            vc[i] = v;
            rc[i] = r;
            p.s += r * r;
            p.b += 2.0 * r * v;
          }
        },
        [&](Part& p) {
          s_total += p.s;
          bscal += p.b;
        });
    err = s_total / norm;
    if (samples) {
      samples->resize(nc);
      for (std::size_t i = 0; i < nc; ++i) (*samples)[i] = rc[i] * rc[i] / norm;
    }
    have_value = true;
    last_params.resize(params.size());
    std::copy(params.begin(), params.end(), last_params.data());
    return err;
  }

  void ensure_value(std::span<const double> params) {
    if (have_value && last_params.size() == static_cast<Eigen::Index>(params.size())) {
      bool equal = true;
      for (std::size_t i = 0; i < params.size(); ++i)
        if (last_params(i) != params[i]) {
          equal = false;
          break;
        }
      if (equal) return;
    }
    value_pass(params, nullptr);
  }

  // Analytic d(error)/d(theta): differentiates the discrete functional
  // exactly, including the eps dependence and any deflation overlaps.
  void analytic_gradient(std::span<const double> params, std::span<double> out,
                         bool variational_only) {
    ensure_value(params);
    if (!std::isfinite(err) && !variational_only)
      throw std::runtime_error("error gradient requested at an inadmissible point");
    if (defl) {
      Eigen::VectorXd warm(np);
      state->parameter_gradient(qpt(0), mi0, as_span(warm));
    }

    const double kappa = prob.kinetic_coefficient();
    const double eps = energy;
    Eigen::VectorXd dn = Eigen::VectorXd::Zero(np);
    Eigen::VectorXd dnum = Eigen::VectorXd::Zero(np);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(np);

    const bool fused = same && !by_parts;
    chunked(
        nq, threads, GradPartial(np),
        [&](std::size_t b, std::size_t e, GradPartial& p) {
          Eigen::VectorXd g0(np), gt(np), glap(np), hg(np);
          for (std::size_t j = b; j < e; ++j) {
            const auto x = qpt(j);
            state->parameter_gradient(x, mi0, as_span(g0));
            p.dn += (2.0 * qw[j] * vq[j]) * g0;
            if (by_parts) {
              for (int a = 0; a < dim; ++a) {
                const MultiIndex mia = MultiIndex::axis(dim, a, 1);
                state->parameter_gradient(x, mia, as_span(gt));
                const double dv = state->derivative(x, mia);
                p.dnum += (2.0 * qw[j] * kappa * dv) * gt;
              }
              p.dnum += (2.0 * qw[j] * pot_q[j] * vq[j]) * g0;
            } else {
              glap.setZero();
              for (int a = 0; a < dim; ++a) {
                state->parameter_gradient(x, mi2[a], as_span(gt));
                glap += gt;
              }
              hg = -kappa * glap + pot_q[j] * g0;
              p.dnum += qw[j] * (hq[j] * g0 + vq[j] * hg);
              if (fused && !variational_only) p.a += (2.0 * rc[j]) * (hg - eps * g0);
            }
          }
        },
        [&](GradPartial& p) {
          dn += p.dn;
          dnum += p.dnum;
          acc += p.a;
        });

    if (!variational_only && !fused) {
      chunked(
          nc, threads, GradPartial(np),
          [&](std::size_t b, std::size_t e, GradPartial& p) {
            Eigen::VectorXd g0(np), gt(np), glap(np), hg(np);
            for (std::size_t i = b; i < e; ++i) {
              const auto x = cpt(i);
              state->parameter_gradient(x, mi0, as_span(g0));
              glap.setZero();
              for (int a = 0; a < dim; ++a) {
                state->parameter_gradient(x, mi2[a], as_span(gt));
                glap += gt;
              }
              hg = -kappa * glap + pot_c[i] * g0;
              p.a += (2.0 * rc[i]) * (hg - eps * g0);
            }
          },
          [&](GradPartial& p) { acc += p.a; });
    }

    const Eigen::VectorXd deps = (dnum - eps * dn) / norm;
    Eigen::VectorXd g;
    if (variational_only) {
      g = deps;
    } else {
      g = (acc - bscal * deps - err * dn) / norm;
    }
    std::copy(g.data(), g.data() + np, out.begin());
  }

  template <class Fn>
  void fd_gradient(std::span<const double> params, std::span<double> out, Fn&& f) {
    Eigen::VectorXd x(params.size());
    std::copy(params.begin(), params.end(), x.data());
    const double f0 = f(std::span<const double>(x.data(), x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
      const double xi = x(i);
      x(i) = xi + h;
      const double fp = f(std::span<const double>(x.data(), x.size()));
      x(i) = xi - h;
      const double fm = f(std::span<const double>(x.data(), x.size()));
      x(i) = xi;
      if (std::isfinite(fp) && std::isfinite(fm)) {
        out[i] = (fp - fm) / (2.0 * h);
      } else if (std::isfinite(fp)) {
        out[i] = (fp - f0) / h;
      } else if (std::isfinite(fm)) {
        out[i] = (f0 - fm) / h;
      } else {
        out[i] = 0.0;
      }
    }
    // Leave the value cache consistent with `params`.
    value_pass(params, nullptr);
  }

  double variational_value(std::span<const double> params) {
    if (!apply_params(params)) return kInf;
    norm = 0.0;
    energy = 0.0;
    energy_pass();
    if (!(norm > 1e-280)) return kInf;
    if (!by_parts) {
      const double kappa = prob.kinetic_coefficient();
      double num = 0.0;
      Eigen::VectorXd wv;
      if (kernel) {
        wv.resize(nq);
        for (std::size_t j = 0; j < nq; ++j) wv(j) = qw[j] * vq[j];
      }
      for (std::size_t j = 0; j < nq; ++j) {
        hq[j] = -kappa * lapq[j] + pot_q[j] * vq[j];
        if (kernel) hq[j] += k_qq.row(j).dot(wv);
        num += qw[j] * vq[j] * hq[j];
      }
      energy = num / norm;
    } else {
      if (kernel) {
        Eigen::VectorXd wv(nq);
        for (std::size_t j = 0; j < nq; ++j) wv(j) = qw[j] * vq[j];
        energy += wv.dot(k_qq * wv);
      }
      energy /= norm;
    }
    return energy;
  }
};

CollocationObjective::CollocationObjective(const Problem& prob, int hidden_units,
                                           ShapeScale shape_scale,
                                           const DeflationBasis* basis, GradientMode mode,
                                           int threads)
    : impl_(std::make_unique<Impl>(prob, hidden_units, shape_scale, basis, mode, threads)) {}

CollocationObjective::~CollocationObjective() = default;

int CollocationObjective::parameter_count() const { return impl_->np; }
TrialState& CollocationObjective::trial() { return impl_->trial; }
WaveState& CollocationObjective::state() { return *impl_->state; }

double CollocationObjective::error(std::span<const double> params) {
  return impl_->value_pass(params, nullptr);
}

void CollocationObjective::error_gradient(std::span<const double> params,
                                          std::span<double> out) {
  if (impl_->mode == GradientMode::Analytic) {
    impl_->analytic_gradient(params, out, false);
  } else {
    impl_->fd_gradient(params, out,
                       [this](std::span<const double> p) { return impl_->value_pass(p, nullptr); });
  }
}

double CollocationObjective::variational(std::span<const double> params) {
  return impl_->variational_value(params);
}

void CollocationObjective::variational_gradient(std::span<const double> params,
                                                std::span<double> out) {
  if (impl_->mode == GradientMode::Analytic) {
    impl_->ensure_value(params);
    impl_->analytic_gradient(params, out, true);
  } else {
    impl_->fd_gradient(params, out,
                       [this](std::span<const double> p) { return impl_->variational_value(p); });
  }
}

double CollocationObjective::last_energy() const { return impl_->energy; }
double CollocationObjective::last_norm() const { return impl_->norm; }

std::vector<double> CollocationObjective::residuals(std::span<const double> params) {
  std::vector<double> samples;
  impl_->value_pass(params, &samples);
  return samples;
}

double rayleigh_quotient(const WaveState& psi, const Problem& prob, const TensorGrid& grid) {
  std::vector<double> x(grid.dimension());
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    grid.point(j, x);
    const double w = grid.weight(j);
    const double v = psi.value(x);
    num += w * v * prob.hamiltonian(psi, x);
    den += w * v * v;
  }
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

double rayleigh_quotient(const WaveState& psi, const Problem& prob) {
  const double q = rayleigh_quotient(psi, prob, prob.quadrature_grid());
  if (!std::isfinite(q)) throw std::runtime_error("rayleigh_quotient: zero-norm state");
  return q;
}

namespace {

// Gauss rule with an odd point count per axis on the problem's quadrature
// box. Collocation-grid solutions are re-scored on these nodes: a state that
// only satisfies the equation at (or between) the training nodes produces a
// wildly different quotient here and is discarded as a discretization
// artifact. Odd counts place a node at the box center, where envelope
// collapse hides from even equidistant grids.
TensorGrid validation_grid(const Problem& prob) {
  const TensorGrid& quad = prob.quadrature_grid();
  std::vector<QuadratureRule> axes;
  for (int k = 0; k < quad.dimension(); ++k) {
    const QuadratureRule& ax = quad.axis(k);
    const int n = static_cast<int>(ax.size());
    axes.push_back(gauss_legendre(n % 2 ? n + 2 : n + 1, ax.lo, ax.hi));
  }
  return TensorGrid(std::move(axes));
}

// True when the training-grid eigenvalue survives re-evaluation on the
// validation grid.
bool cross_grid_consistent(double train, double val) {
  if (!std::isfinite(train) || !std::isfinite(val)) return false;
  const double scale = std::max({1.0, std::abs(train), std::abs(val)});
  return std::abs(train - val) <= 0.05 * scale;
}

Eigen::VectorXd random_start(const Problem& prob, int hidden, ShapeScale scale,
                             std::uint64_t seed, int np) {
  Rng rng(seed);
  Mlp net = Mlp::random(prob.dimension(), hidden, rng);
  Eigen::VectorXd x0(np);
  net.flatten({x0.data(), static_cast<std::size_t>(net.parameter_count())});
  if (np > net.parameter_count()) {
    const double shape0 = prob.initial_envelope().shape();
    x0(np - 1) = scale == ShapeScale::Log ? std::log(shape0) : shape0;
  }
  return x0;
}

struct RestartOutcome {
  OptimizeResult opt;
  std::vector<TraceRow> trace;
  std::uint64_t seed = 0;
  double final_error = kInf;
  double eigenvalue = std::numeric_limits<double>::quiet_NaN();
  bool validated = false;
};

// Restart driver shared by the scalar and coupled solvers. Candidates that
// pass cross-grid validation always beat ones that do not. When
// prefer_eigenvalue is set, restarts whose final error clears success_error
// compete by eigenvalue (lowest state wins); otherwise, and when nothing
// clears the bar, the smallest final error wins. validate is called with the
// state already holding the candidate parameters; returning NaN skips the
// check (coupled solves score themselves).
template <class MakeStart, class Value, class Grad, class Energy, class Validate>
RestartOutcome best_restart(const SolveConfig& cfg, bool disable_f_tol, bool prefer_eigenvalue,
                            MakeStart&& start, Value&& value, Grad&& grad, Energy&& energy,
                            Validate&& validate) {
  RestartOutcome best;
  bool have_best = false, best_trusted = false;
  const int restarts = std::max(1, cfg.restarts);
  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    Eigen::VectorXd x0;
    bool ok = false;
    for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
      x0 = start(seed + 1000 * static_cast<std::uint64_t>(attempt));
      ok = std::isfinite(value(x0));
    }
    if (!ok) continue;

    std::vector<TraceRow> trace;
    OptimizeOptions opts;
    opts.kind = cfg.optimizer;
    opts.max_iterations = cfg.max_iterations;
    opts.f_tolerance = disable_f_tol ? -kInf : cfg.error_tolerance;
    opts.g_tolerance = cfg.gradient_tolerance;
    if (cfg.record_trace) {
      opts.on_iteration = [&](int it, double f, double gn) {
        trace.push_back({it, f, energy(), gn});
      };
    }
    OptimizeResult res = minimize(value, grad, x0, opts);
    const double err = value(res.x);
    const double eps = energy();
    const double val = validate();
    const bool valid_ok = std::isnan(val) ? std::isfinite(err)
                                          : cross_grid_consistent(eps, val);
    const bool trusted =
        valid_ok && prefer_eigenvalue && err <= cfg.success_error && std::isfinite(eps);
    bool better;
    if (!have_best) {
      better = true;
    } else if (valid_ok != best.validated) {
      better = valid_ok;
    } else if (trusted != best_trusted) {
      better = trusted;
    } else if (trusted) {
      better = eps < best.eigenvalue;
    } else {
      better = err < best.final_error;
    }
    if (better) {
      best.opt = std::move(res);
      best.trace = std::move(trace);
      best.seed = seed;
      best.final_error = err;
      best.eigenvalue = eps;
      best.validated = valid_ok;
      have_best = true;
      best_trusted = trusted;
    }
  }
  if (!have_best) throw std::runtime_error("solve: no admissible starting point found");
  return best;
}

}  // namespace

EigenSolution solve(const Problem& prob, const SolveConfig& cfg, const DeflationBasis* basis) {
  if (prob.components() == 2) {
    const auto* dp = dynamic_cast<const DiracProblem*>(&prob);
    if (!dp) throw std::invalid_argument("solve: unknown two-component problem");
    if (basis && !basis->empty())
      throw std::invalid_argument("solve: deflation unsupported for coupled systems");
    return solve_dirac(*dp, cfg);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int hidden = cfg.hidden_units > 0 ? cfg.hidden_units : prob.default_hidden_units();
  CollocationObjective obj(prob, hidden, cfg.shape_scale, basis, cfg.gradient, cfg.threads);
  const int np = obj.parameter_count();

  auto value = [&](const Eigen::VectorXd& x) {
    return obj.error({x.data(), static_cast<std::size_t>(x.size())});
  };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(x.size());
    obj.error_gradient({x.data(), static_cast<std::size_t>(x.size())},
                       {g.data(), static_cast<std::size_t>(g.size())});
  };
  auto vvalue = [&](const Eigen::VectorXd& x) {
    return obj.variational({x.data(), static_cast<std::size_t>(x.size())});
  };
  auto vgrad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(x.size());
    obj.variational_gradient({x.data(), static_cast<std::size_t>(x.size())},
                             {g.data(), static_cast<std::size_t>(g.size())});
  };
  auto start = [&](std::uint64_t seed) {
    Eigen::VectorXd x0 = random_start(prob, hidden, cfg.shape_scale, seed, np);
    if (cfg.warm_start_iterations > 0 && std::isfinite(vvalue(x0))) {
      OptimizeOptions w;
      w.kind = cfg.optimizer;
      w.max_iterations = cfg.warm_start_iterations;
      w.f_tolerance = -kInf;
      w.g_tolerance = cfg.gradient_tolerance;
      x0 = minimize(vvalue, vgrad, x0, w).x;
    }
    return x0;
  };
  auto energy = [&]() { return obj.last_energy(); };
  const TensorGrid vgrid = validation_grid(prob);
  auto validate = [&]() { return rayleigh_quotient(obj.state(), prob, vgrid); };

  RestartOutcome best = best_restart(cfg, false, true, start, value, grad, energy, validate);

  // Reject a winner that merely rediscovers a basis state; retry with fresh
  // seeds. With projection deflation this should be unreachable, but the raw
  // network can still collapse onto the basis span.
  if (basis && !basis->empty()) {
    auto rejected = [&](const RestartOutcome& cand) {
      obj.error({cand.opt.x.data(), static_cast<std::size_t>(cand.opt.x.size())});
      const double eps = obj.last_energy();
      const auto& ds = dynamic_cast<DeflatedState&>(obj.state());
      const double nrm = std::sqrt(obj.last_norm());
      for (int a = 0; a < basis->size(); ++a) {
        const double de = std::abs(eps - basis->state(a).eigenvalue());
        const double ov = std::abs(ds.overlaps()[a]) / nrm;
        if (de < 1e-4 && ov > 1e-3) return true;
      }
      return false;
    };
    for (int extra = 0; extra < 3 && rejected(best); ++extra) {
      SolveConfig retry = cfg;
      retry.seed = cfg.seed + static_cast<std::uint64_t>(cfg.restarts + extra) * 7919;
      retry.restarts = 1;
      RestartOutcome again = best_restart(retry, false, true, start, value, grad, energy, validate);
      if (!rejected(again) && again.validated >= best.validated &&
          (again.final_error <= cfg.success_error || again.final_error < best.final_error)) {
        best = std::move(again);
        break;
      }
    }
  }

  EigenSolution sol;
  sol.residuals = obj.residuals({best.opt.x.data(), static_cast<std::size_t>(best.opt.x.size())});
  sol.eigenvalue = obj.last_energy();
  sol.final_error = best.final_error;
  sol.parameters = best.opt.x;
  sol.normalization = 1.0 / std::sqrt(obj.last_norm());
  if (basis && !basis->empty())
    sol.overlaps = dynamic_cast<DeflatedState&>(obj.state()).overlaps();
  sol.trace = std::move(best.trace);
  sol.iterations = best.opt.iterations;
  sol.converged = best.validated && (best.opt.converged || best.final_error <= cfg.success_error);
  sol.seed_used = best.seed;
  sol.hidden_units = hidden;
  sol.stop_reason = best.opt.stop_reason;
  if (!best.validated) sol.stop_reason += "; failed cross-grid validation";
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

EigenSolution solve_variational(const Problem& prob, const SolveConfig& cfg) {
  if (prob.components() != 1)
    throw std::invalid_argument("solve_variational: scalar problems only");
  const auto t0 = std::chrono::steady_clock::now();
  const int hidden = cfg.hidden_units > 0 ? cfg.hidden_units : prob.default_hidden_units();
  CollocationObjective obj(prob, hidden, cfg.shape_scale, nullptr, cfg.gradient, cfg.threads);
  const int np = obj.parameter_count();

  auto value = [&](const Eigen::VectorXd& x) {
    return obj.variational({x.data(), static_cast<std::size_t>(x.size())});
  };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(x.size());
    obj.variational_gradient({x.data(), static_cast<std::size_t>(x.size())},
                             {g.data(), static_cast<std::size_t>(g.size())});
  };
  auto start = [&](std::uint64_t seed) {
    return random_start(prob, hidden, cfg.shape_scale, seed, np);
  };
  auto energy = [&]() { return obj.last_energy(); };
  const TensorGrid vgrid = validation_grid(prob);
  auto validate = [&]() { return rayleigh_quotient(obj.state(), prob, vgrid); };

  // The quotient is typically negative; the objective floor must not stop it.
  RestartOutcome best = best_restart(cfg, true, false, start, value, grad, energy, validate);

  EigenSolution sol;
  sol.residuals = obj.residuals({best.opt.x.data(), static_cast<std::size_t>(best.opt.x.size())});
  sol.final_error = obj.error({best.opt.x.data(), static_cast<std::size_t>(best.opt.x.size())});
  sol.eigenvalue = obj.last_energy();
  sol.parameters = best.opt.x;
  sol.normalization = 1.0 / std::sqrt(obj.last_norm());
  sol.trace = std::move(best.trace);
  sol.iterations = best.opt.iterations;
  sol.converged = best.validated && best.opt.converged;
  sol.seed_used = best.seed;
  sol.hidden_units = hidden;
  sol.stop_reason = best.opt.stop_reason;
  if (!best.validated) sol.stop_reason += "; failed cross-grid validation";
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double dirac_error(const DiracProblem& prob, const DiracState& s) {
  const double e = dirac_energy(prob, s);
  if (!std::isfinite(e)) return kInf;
  const QuadratureRule& q = prob.quadrature_grid().axis(0);
  double norm = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double f = s.f(q.nodes[j]);
    const double g = s.g(q.nodes[j]);
    norm += q.weights[j] * (f * f + g * g);
  }
  if (!(norm > 1e-280)) return kInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto r = dirac_residuals(prob, s, q.nodes[i], e);
    sum += r[0] * r[0] + r[1] * r[1];
  }
  return sum / norm;
}

EigenSolution solve_dirac(const DiracProblem& prob, const SolveConfig& cfg) {
  if (cfg.gradient == GradientMode::Analytic)
    throw std::invalid_argument("solve_dirac: analytic gradients unsupported; use fd");
  const auto t0 = std::chrono::steady_clock::now();
  const int hidden = cfg.hidden_units > 0 ? cfg.hidden_units : prob.default_hidden_units();
  const double beta0 = prob.initial_envelope().shape();
  DiracState state(beta0, hidden);
  const int np = state.parameter_count();

  double last_energy = std::numeric_limits<double>::quiet_NaN();
  auto eval = [&](std::span<const double> p) {
    state.set_parameters(p);
    last_energy = dirac_energy(prob, state);
    return dirac_error(prob, state);
  };
  auto value = [&](const Eigen::VectorXd& x) {
    return eval({x.data(), static_cast<std::size_t>(x.size())});
  };
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(x.size());
    Eigen::VectorXd xt = x;
    const double f0 = value(xt);
    for (Eigen::Index i = 0; i < xt.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(xt(i)));
      const double xi = xt(i);
      xt(i) = xi + h;
      const double fp = value(xt);
      xt(i) = xi - h;
      const double fm = value(xt);
      xt(i) = xi;
      if (std::isfinite(fp) && std::isfinite(fm)) {
        g(i) = (fp - fm) / (2.0 * h);
      } else if (std::isfinite(fp)) {
        g(i) = (fp - f0) / h;
      } else if (std::isfinite(fm)) {
        g(i) = (f0 - fm) / h;
      } else {
        g(i) = 0.0;
      }
    }
    value(x);  // restore caches at x
  };
  auto start = [&](std::uint64_t seed) {
    Rng rng(seed);
    Mlp f = Mlp::random(1, hidden, rng);
    Mlp g = Mlp::random(1, hidden, rng);
    // Bias the start toward the bound branch: a dominant lower component.
    f.output_weights() *= 0.3;
    Eigen::VectorXd x0(np);
    const int nf = f.parameter_count();
    f.flatten({x0.data(), static_cast<std::size_t>(nf)});
    g.flatten({x0.data() + nf, static_cast<std::size_t>(g.parameter_count())});
    x0(np - 1) = std::log(beta0);
    return x0;
  };
  auto energy = [&]() { return last_energy; };
  auto validate = [&]() { return std::numeric_limits<double>::quiet_NaN(); };

  RestartOutcome best = best_restart(cfg, false, false, start, value, grad, energy, validate);

  EigenSolution sol;
  const double final_err = eval({best.opt.x.data(), static_cast<std::size_t>(best.opt.x.size())});
  sol.final_error = final_err;
  sol.eigenvalue = last_energy - prob.mass();  // binding energy
  sol.parameters = best.opt.x;
  const QuadratureRule& q = prob.quadrature_grid().axis(0);
  double norm = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double f = state.f(q.nodes[j]);
    const double g = state.g(q.nodes[j]);
    norm += q.weights[j] * (f * f + g * g);
  }
  sol.normalization = 1.0 / std::sqrt(norm);
  sol.residuals.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto r = dirac_residuals(prob, state, q.nodes[i], last_energy);
    sol.residuals[i] = (r[0] * r[0] + r[1] * r[1]) / norm;
  }
  sol.trace = std::move(best.trace);
  sol.iterations = best.opt.iterations;
  sol.converged = best.opt.converged || final_err <= cfg.success_error;
  sol.seed_used = best.seed;
  sol.hidden_units = hidden;
  sol.stop_reason = best.opt.stop_reason;
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace nneig
