#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// Batch front end shared by the command line tool and the tests: solves a
// problem, writes CSV/snapshot artifacts into an output directory and
// reports per-level convergence.

namespace nneig {

struct RunConfig {
  std::string problem_id = "morse";
  std::string mode = "collocation";  // collocation | variational | fem
  int levels = 1;
  std::uint64_t seed = 0;
  int restarts = 5;
  int hidden_units = -1;  // <=0: problem default
  int grid_points = -1;   // <=0: problem default collocation resolution
  int mesh = 29;          // fem elements per side
  std::vector<int> mesh_sizes;  // non-empty: fem refinement table
  std::string out_dir = ".";
  int threads = 1;
  int max_iterations = 5000;
  int warm_start = 300;  // variational iterations before the residual stage
  double error_tolerance = 1e-8;
  double gradient_tolerance = 1e-7;
  double success_error = 1e-8;
  std::string optimizer = "bfgs";
  std::string gradient;  // empty: problem default, else analytic | fd
  std::string shape_scale = "log";
  bool trace = true;
  bool deterministic = false;  // forces single-threaded evaluation
};

// `key=value` assignment with the keys of RunConfig; throws on unknown keys
// or unparsable values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Plain-text config: one key=value per line, '#' comments.
void load_config_file(RunConfig& cfg, const std::string& path);

void dump_config(std::ostream& os, const RunConfig& cfg);

// Exit status: 0 all levels converged, 1 some level failed its convergence
// criterion. Configuration errors throw.
int run(const RunConfig& cfg, std::ostream& log);

// Side-by-side ground-state comparison of the collocation solver and the
// finite element reference on the same operator.
int run_compare(const RunConfig& cfg, std::ostream& log);

// Physical constants and registered problem ids.
int run_constants(std::ostream& os);

}  // namespace nneig
