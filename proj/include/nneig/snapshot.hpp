#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "nneig/trial.hpp"

// Plain-text state files. Numbers are written with 17 significant digits so
// a load/save cycle and repeated runs are byte-identical.

namespace nneig {

struct ScalarSnapshot {
  std::string problem_id;
  int hidden_units = 0;
  double eigenvalue = 0.0;
  double final_error = 0.0;
  double normalization = 1.0;
  std::vector<TrialTerm> terms;

  BasisState state() const { return BasisState(terms, eigenvalue); }
};

struct DiracSnapshot {
  std::string problem_id;
  int hidden_units = 0;
  double eigenvalue = 0.0;  // binding energy, MeV
  double final_error = 0.0;
  double normalization = 1.0;
  double shape = 0.0;                // envelope decay rate
  std::vector<double> parameters;    // [f net, g net, log shape]
};

using Snapshot = std::variant<ScalarSnapshot, DiracSnapshot>;

void save_snapshot(std::ostream& os, const Snapshot& snap);
void save_snapshot_file(const std::string& path, const Snapshot& snap);
Snapshot load_snapshot(std::istream& is);
Snapshot load_snapshot_file(const std::string& path);

// %.17g, the shortest form that still round-trips a double.
std::string format_g17(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace nneig
