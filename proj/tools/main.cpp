#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "nneig/runner.hpp"

namespace {

void add_common_options(CLI::App* cmd, nneig::RunConfig& cfg, std::string& config_file,
                        bool& dump) {
  cmd->add_option("-p,--problem", cfg.problem_id,
                  "Problem id (see `nneig constants` for the list)");
  cmd->add_option("-l,--levels", cfg.levels, "Number of eigenstates, lowest first");
  cmd->add_option("-s,--seed", cfg.seed, "Base seed for the network initialization");
  cmd->add_option("-r,--restarts", cfg.restarts, "Random restarts per level");
  cmd->add_option("-m,--hidden-units", cfg.hidden_units,
                  "Hidden units in the trial network (default: per problem)");
  cmd->add_option("-g,--grid", cfg.grid_points,
                  "Collocation points per axis (default: per problem)");
  cmd->add_option("--mesh", cfg.mesh, "Finite element mesh: elements per side");
  cmd->add_option("--mesh-sizes", cfg.mesh_sizes,
                  "Mesh refinement list for fem mode, e.g. 5,7,11")
      ->delimiter(',');
  cmd->add_option("-o,--out", cfg.out_dir, "Output directory for CSV and snapshot files");
  cmd->add_option("-t,--threads", cfg.threads, "Worker threads for grid evaluation");
  cmd->add_option("--max-iterations", cfg.max_iterations, "Optimizer iteration cap");
  cmd->add_option("--warm-start", cfg.warm_start,
                  "Energy-minimization iterations before the residual stage");
  cmd->add_option("--error-tolerance", cfg.error_tolerance,
                  "Stop when the collocation error falls below this");
  cmd->add_option("--gradient-tolerance", cfg.gradient_tolerance,
                  "Stop when the gradient norm falls below this");
  cmd->add_option("--success-error", cfg.success_error,
                  "Error level that counts as a converged solve");
  cmd->add_option("--optimizer", cfg.optimizer, "bfgs, cg or gd");
  cmd->add_option("--gradient", cfg.gradient, "analytic or fd (default: per problem)");
  cmd->add_option("--shape-scale", cfg.shape_scale,
                  "Envelope shape parametrization: log or direct");
  cmd->add_flag("--trace,!--no-trace", cfg.trace, "Write per-iteration trace files");
  cmd->add_flag("--deterministic", cfg.deterministic,
                "Force single-threaded, bit-reproducible evaluation");
  cmd->add_option("-c,--config", config_file,
                  "key=value config file; explicit flags override it");
  cmd->add_flag("--dump-config", dump, "Print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  nneig::RunConfig cfg;
  std::string config_file;
  bool dump = false;

  // Load the config file before the regular parse so command line flags
  // override file entries.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if ((a == "-c" || a == "--config") && i + 1 < argc) {
        nneig::load_config_file(cfg, argv[i + 1]);
      } else if (a.rfind("--config=", 0) == 0) {
        nneig::load_config_file(cfg, a.substr(9));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Eigenvalue solver for differential and integrodifferential operators\n"
               "using neural-network trial functions, with a finite element cross-check."};
  app.require_subcommand(1);

  CLI::App* cmd_run = app.add_subcommand("run", "Solve a problem and write artifacts");
  cmd_run->add_option("--mode", cfg.mode, "collocation, variational or fem");
  add_common_options(cmd_run, cfg, config_file, dump);

  CLI::App* cmd_compare =
      app.add_subcommand("compare", "Collocation vs finite element reference");
  add_common_options(cmd_compare, cfg, config_file, dump);

  app.add_subcommand("constants", "Print physical constants and problem ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump) {
      nneig::dump_config(std::cout, cfg);
      return 0;
    }
    if (app.got_subcommand("constants")) return nneig::run_constants(std::cout);
    if (app.got_subcommand("compare")) return nneig::run_compare(cfg, std::cout);
    return nneig::run(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
