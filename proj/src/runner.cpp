#include "nneig/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nneig/femref.hpp"
#include "nneig/problems.hpp"
#include "nneig/snapshot.hpp"
#include "nneig/solver.hpp"

namespace nneig {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T v;
  if (!(is >> v) || !(is >> std::ws).eof())
    throw std::invalid_argument("config: bad value for " + key + ": '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ','))
    if (!trim(item).empty()) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "problem") cfg.problem_id = value;
  else if (key == "mode") cfg.mode = value;
  else if (key == "levels") cfg.levels = parse_number<int>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "restarts") cfg.restarts = parse_number<int>(key, value);
  else if (key == "hidden_units") cfg.hidden_units = parse_number<int>(key, value);
  else if (key == "grid_points") cfg.grid_points = parse_number<int>(key, value);
  else if (key == "mesh") cfg.mesh = parse_number<int>(key, value);
  else if (key == "mesh_sizes") cfg.mesh_sizes = parse_int_list(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "threads") cfg.threads = parse_number<int>(key, value);
  else if (key == "max_iterations") cfg.max_iterations = parse_number<int>(key, value);
  else if (key == "warm_start") cfg.warm_start = parse_number<int>(key, value);
  else if (key == "error_tolerance") cfg.error_tolerance = parse_number<double>(key, value);
  else if (key == "gradient_tolerance") cfg.gradient_tolerance = parse_number<double>(key, value);
  else if (key == "success_error") cfg.success_error = parse_number<double>(key, value);
  else if (key == "optimizer") cfg.optimizer = value;
  else if (key == "gradient") cfg.gradient = value;
  else if (key == "shape_scale") cfg.shape_scale = value;
  else if (key == "trace") cfg.trace = parse_bool(key, value);
  else if (key == "deterministic") cfg.deterministic = parse_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void dump_config(std::ostream& os, const RunConfig& cfg) {
  os << "problem=" << cfg.problem_id << '\n';
  os << "mode=" << cfg.mode << '\n';
  os << "levels=" << cfg.levels << '\n';
  os << "seed=" << cfg.seed << '\n';
  os << "restarts=" << cfg.restarts << '\n';
  os << "hidden_units=" << cfg.hidden_units << '\n';
  os << "grid_points=" << cfg.grid_points << '\n';
  os << "mesh=" << cfg.mesh << '\n';
  os << "mesh_sizes=";
  for (std::size_t i = 0; i < cfg.mesh_sizes.size(); ++i)
    os << (i ? "," : "") << cfg.mesh_sizes[i];
  os << '\n';
  os << "out_dir=" << cfg.out_dir << '\n';
  os << "threads=" << cfg.threads << '\n';
  os << "max_iterations=" << cfg.max_iterations << '\n';
  os << "warm_start=" << cfg.warm_start << '\n';
  os << "error_tolerance=" << format_g17(cfg.error_tolerance) << '\n';
  os << "gradient_tolerance=" << format_g17(cfg.gradient_tolerance) << '\n';
  os << "success_error=" << format_g17(cfg.success_error) << '\n';
  os << "optimizer=" << cfg.optimizer << '\n';
  os << "gradient=" << cfg.gradient << '\n';
  os << "shape_scale=" << cfg.shape_scale << '\n';
  os << "trace=" << (cfg.trace ? 1 : 0) << '\n';
  os << "deterministic=" << (cfg.deterministic ? 1 : 0) << '\n';
}

namespace {

SolveConfig to_solve_config(const RunConfig& cfg, const Problem& prob) {
  SolveConfig s = default_config(prob);
  s.optimizer = optimizer_from_string(cfg.optimizer);
  if (!cfg.gradient.empty()) s.gradient = gradient_mode_from_string(cfg.gradient);
  if (cfg.shape_scale == "log") s.shape_scale = ShapeScale::Log;
  else if (cfg.shape_scale == "direct") s.shape_scale = ShapeScale::Direct;
  else throw std::invalid_argument("config: shape_scale must be log or direct");
  s.hidden_units = cfg.hidden_units;
  s.max_iterations = cfg.max_iterations;
  s.warm_start_iterations = cfg.warm_start;
  s.error_tolerance = cfg.error_tolerance;
  s.gradient_tolerance = cfg.gradient_tolerance;
  s.success_error = cfg.success_error;
  s.restarts = cfg.restarts;
  s.seed = cfg.seed;
  s.threads = cfg.deterministic ? 1 : cfg.threads;
  s.record_trace = cfg.trace;
  return s;
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

void write_trace(const RunConfig& cfg, int level, const EigenSolution& sol) {
  std::vector<std::vector<double>> rows;
  rows.reserve(sol.trace.size());
  for (const TraceRow& t : sol.trace)
    rows.push_back({static_cast<double>(t.iteration), t.error, t.energy, t.gradient_norm});
  write_csv(out_path(cfg, "iterations_" + std::to_string(level) + ".csv").string(),
            {"iteration", "error", "energy", "gradient_norm"}, rows);
}

void write_residuals(const RunConfig& cfg, int level, const Problem& prob,
                     const EigenSolution& sol) {
  const TensorGrid& grid = prob.collocation_grid();
  const int dim = grid.dimension();
  std::vector<std::string> header = {"index"};
  const char* axes[] = {"x", "y", "z"};
  for (int a = 0; a < dim; ++a) header.push_back(axes[a]);
  header.push_back("residual");
  std::vector<std::vector<double>> rows;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < sol.residuals.size(); ++i) {
    grid.point(i, x);
    std::vector<double> row = {static_cast<double>(i)};
    row.insert(row.end(), x.begin(), x.end());
    row.push_back(sol.residuals[i]);
    rows.push_back(std::move(row));
  }
  write_csv(out_path(cfg, "residual_" + std::to_string(level) + ".csv").string(), header, rows);
}

void write_wavefunction(const RunConfig& cfg, int level, const Problem& prob,
                        const BasisState& state) {
  const TensorGrid& grid = prob.collocation_grid();
  const int dim = grid.dimension();
  const double lo = grid.axis(0).lo, hi = grid.axis(0).hi;
  std::vector<std::vector<double>> rows;
  const std::string name = "wavefunction_" + std::to_string(level) + ".csv";
  if (dim == 1) {
    const bool radial = prob.initial_envelope().kind() == EnvelopeKind::RadialExp;
    const int n = 501;
    for (int i = 0; i < n; ++i) {
      const double r = lo + (hi - lo) * i / (n - 1);
      const double u = state.value({&r, 1});
      if (radial) {
        rows.push_back({r, u, state.value_over_r(r)});
      } else {
        rows.push_back({r, u});
      }
    }
    write_csv(out_path(cfg, name).string(),
              radial ? std::vector<std::string>{"r", "u", "u_over_r"}
                     : std::vector<std::string>{"x", "psi"},
              rows);
    return;
  }
  // 2D: full grid; 3D: midplane slice at the last coordinate's center.
  const int n = dim == 2 ? 101 : 61;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double x = lo + (hi - lo) * ix / (n - 1);
      const double y = lo + (hi - lo) * iy / (n - 1);
      double pt[3] = {x, y, 0.0};
      rows.push_back({x, y, state.value({pt, static_cast<std::size_t>(dim)})});
    }
  }
  write_csv(out_path(cfg, name).string(), {"x", "y", "psi"}, rows);
}

int run_fem(const RunConfig& cfg, std::ostream& log) {
  if (cfg.problem_id != "henon-heiles")
    throw std::invalid_argument("fem mode supports henon-heiles only");
  if (!cfg.mesh_sizes.empty()) {
    const auto table = fem::refinement_table(cfg.mesh_sizes, 6);
    std::vector<std::vector<double>> rows;
    for (const fem::FemResult& r : table) {
      std::vector<double> row = {static_cast<double>(r.elements_per_side),
                                 static_cast<double>(r.nodes)};
      row.insert(row.end(), r.eigenvalues.begin(), r.eigenvalues.end());
      rows.push_back(std::move(row));
      log << "mesh " << r.elements_per_side << "x" << r.elements_per_side << " (" << r.nodes
          << " nodes):";
      for (double e : r.eigenvalues) log << ' ' << e;
      log << '\n';
    }
    write_csv(out_path(cfg, "fem_table.csv").string(),
              {"elements", "nodes", "e0", "e1", "e2", "e3", "e4", "e5"}, rows);
    return 0;
  }
  const auto res = fem::henon_heiles_reference(cfg.mesh, std::max(1, cfg.levels));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i)
    rows.push_back({static_cast<double>(i), res.eigenvalues[i], res.residuals[i]});
  write_csv(out_path(cfg, "fem_eigenvalues.csv").string(), {"level", "eigenvalue", "residual"},
            rows);
  log << "fem " << res.elements_per_side << "x" << res.elements_per_side << " (" << res.nodes
      << " nodes), assemble " << res.assemble_seconds << " s, solve " << res.solve_seconds
      << " s\n";
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i)
    log << "  level " << i << ": " << format_g17(res.eigenvalues[i]) << "  (residual "
        << res.residuals[i] << ")\n";
  return 0;
}

int run_dirac(const RunConfig& cfg, std::ostream& log) {
  auto base = make_problem(cfg.problem_id, cfg.grid_points);
  const auto& prob = dynamic_cast<const DiracProblem&>(*base);
  const SolveConfig scfg = to_solve_config(cfg, prob);
  EigenSolution sol = solve(prob, scfg, nullptr);

  DiracSnapshot snap;
  snap.problem_id = cfg.problem_id;
  snap.hidden_units = sol.hidden_units;
  snap.eigenvalue = sol.eigenvalue;
  snap.final_error = sol.final_error;
  snap.normalization = sol.normalization;
  snap.shape = std::exp(sol.parameters(sol.parameters.size() - 1));
  snap.parameters.assign(sol.parameters.data(), sol.parameters.data() + sol.parameters.size());
  save_snapshot_file(out_path(cfg, "state_0.snapshot").string(), snap);

  DiracState state(snap.shape, sol.hidden_units);
  state.set_parameters(snap.parameters);
  const double lo = prob.quadrature_grid().axis(0).lo, hi = prob.quadrature_grid().axis(0).hi;
  std::vector<std::vector<double>> rows;
  const int n = 501;
  for (int i = 0; i < n; ++i) {
    const double r = lo + (hi - lo) * i / (n - 1);
    const double c = sol.normalization;
    rows.push_back({r, c * state.f(r), c * state.g(r), c * state.f_over_r(r),
                    c * state.g_over_r(r)});
  }
  write_csv(out_path(cfg, "wavefunction_0.csv").string(), {"r", "f", "g", "f_over_r", "g_over_r"},
            rows);
  write_residuals(cfg, 0, prob, sol);
  write_trace(cfg, 0, sol);
  write_csv(out_path(cfg, "eigenvalues.csv").string(),
            {"level", "eigenvalue", "error", "iterations", "converged", "seed", "hidden",
             "wall_seconds"},
            {{0.0, sol.eigenvalue, sol.final_error, static_cast<double>(sol.iterations),
              sol.converged ? 1.0 : 0.0, static_cast<double>(sol.seed_used),
              static_cast<double>(sol.hidden_units), sol.wall_seconds}});
  log << "level 0: binding " << format_g17(sol.eigenvalue) << " MeV, error "
      << format_g17(sol.final_error) << ", " << sol.iterations << " iterations, "
      << (sol.converged ? "converged" : "NOT converged") << " (" << sol.stop_reason << "), "
      << sol.wall_seconds << " s\n";
  return sol.converged ? 0 : 1;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.mode == "fem") return run_fem(cfg, log);
  if (cfg.mode != "collocation" && cfg.mode != "variational")
    throw std::invalid_argument("mode must be collocation, variational or fem");

  auto prob = make_problem(cfg.problem_id, cfg.grid_points);
  if (prob->components() == 2) {
    if (cfg.mode == "variational")
      throw std::invalid_argument("variational mode supports scalar problems only");
    if (cfg.levels != 1) throw std::invalid_argument("coupled systems support a single level");
    return run_dirac(cfg, log);
  }
  if (cfg.mode == "variational" && cfg.levels != 1)
    throw std::invalid_argument("variational mode computes the ground state only");

  const ShapeScale scale =
      cfg.shape_scale == "direct" ? ShapeScale::Direct : ShapeScale::Log;
  DeflationBasis basis;
  std::vector<std::vector<double>> summary;
  int status = 0;
  for (int level = 0; level < std::max(1, cfg.levels); ++level) {
    SolveConfig scfg = to_solve_config(cfg, *prob);
    scfg.seed = cfg.seed + 101 * static_cast<std::uint64_t>(level);
    EigenSolution sol = cfg.mode == "variational" ? solve_variational(*prob, scfg)
                                                  : solve(*prob, scfg, &basis);

    TrialState raw(prob->initial_envelope(), Mlp(prob->dimension(), sol.hidden_units),
                   prob->optimize_shape(), scale);
    raw.set_parameters({sol.parameters.data(), static_cast<std::size_t>(sol.parameters.size())});
    const BasisState& state =
        basis.append_solution(raw, sol.overlaps, prob->quadrature_grid(), sol.eigenvalue);

    ScalarSnapshot snap;
    snap.problem_id = cfg.problem_id;
    snap.hidden_units = sol.hidden_units;
    snap.eigenvalue = sol.eigenvalue;
    snap.final_error = sol.final_error;
    snap.normalization = sol.normalization;
    snap.terms = state.terms();
    save_snapshot_file(out_path(cfg, "state_" + std::to_string(level) + ".snapshot").string(),
                       snap);
    write_wavefunction(cfg, level, *prob, state);
    write_residuals(cfg, level, *prob, sol);
    write_trace(cfg, level, sol);

    summary.push_back({static_cast<double>(level), sol.eigenvalue, sol.final_error,
                       static_cast<double>(sol.iterations), sol.converged ? 1.0 : 0.0,
                       static_cast<double>(sol.seed_used),
                       static_cast<double>(sol.hidden_units), sol.wall_seconds});
    log << "level " << level << ": eigenvalue " << format_g17(sol.eigenvalue) << ", error "
        << format_g17(sol.final_error) << ", " << sol.iterations << " iterations, "
        << (sol.converged ? "converged" : "NOT converged") << " (" << sol.stop_reason << "), "
        << sol.wall_seconds << " s\n";
    if (!sol.converged) status = 1;
  }
  write_csv(out_path(cfg, "eigenvalues.csv").string(),
            {"level", "eigenvalue", "error", "iterations", "converged", "seed", "hidden",
             "wall_seconds"},
            summary);
  return status;
}

int run_compare(const RunConfig& cfg, std::ostream& log) {
  if (cfg.problem_id != "henon-heiles")
    throw std::invalid_argument("compare supports henon-heiles only");
  std::filesystem::create_directories(cfg.out_dir);
  auto prob = make_problem(cfg.problem_id, cfg.grid_points);
  const int levels = std::max(1, cfg.levels);

  DeflationBasis basis;
  std::vector<EigenSolution> neural;
  int status = 0;
  for (int level = 0; level < levels; ++level) {
    SolveConfig scfg = to_solve_config(cfg, *prob);
    scfg.seed = cfg.seed + 101 * static_cast<std::uint64_t>(level);
    EigenSolution sol = solve(*prob, scfg, &basis);
    TrialState raw(prob->initial_envelope(), Mlp(prob->dimension(), sol.hidden_units),
                   prob->optimize_shape(), ShapeScale::Log);
    raw.set_parameters({sol.parameters.data(), static_cast<std::size_t>(sol.parameters.size())});
    basis.append_solution(raw, sol.overlaps, prob->quadrature_grid(), sol.eigenvalue);
    if (!sol.converged) status = 1;
    neural.push_back(std::move(sol));
  }

  const auto fem = fem::henon_heiles_reference(cfg.mesh, levels);
  double neural_seconds = 0.0;
  std::vector<std::vector<double>> rows;
  for (int level = 0; level < levels; ++level) {
    const double a = neural[level].eigenvalue;
    const double b = fem.eigenvalues[level];
    rows.push_back({static_cast<double>(level), a, b, std::abs(a - b)});
    neural_seconds += neural[level].wall_seconds;
    log << "level " << level << ": collocation " << format_g17(a) << "  fem " << format_g17(b)
        << "  |diff| " << format_g17(std::abs(a - b)) << '\n';
  }
  write_csv(out_path(cfg, "comparison.csv").string(),
            {"level", "collocation", "fem", "abs_diff"}, rows);
  log << "collocation: " << neural[0].parameters.size() << " parameters per level, "
      << neural_seconds << " s total\n";
  log << "fem: " << fem.nodes << " generalized coordinates (" << cfg.mesh << "x" << cfg.mesh
      << " elements), " << (fem.assemble_seconds + fem.solve_seconds) << " s\n";
  return status;
}

int run_constants(std::ostream& os) {
  os << "hbar_c          " << format_g17(constants::hbar_c) << "  MeV fm\n";
  os << "muon_mass       " << format_g17(constants::muon_mass) << "  MeV\n";
  os << "proton_mass     " << format_g17(constants::proton_mass) << "  MeV\n";
  os << "neutron_mass    " << format_g17(constants::neutron_mass) << "  MeV\n";
  os << "electron_compton " << format_g17(constants::electron_compton) << "  fm\n";
  os << "problems:";
  for (const std::string& id : problem_ids()) os << ' ' << id;
  os << '\n';
  return 0;
}

}  // namespace nneig
