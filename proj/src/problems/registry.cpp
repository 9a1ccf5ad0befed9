#include <stdexcept>

#include "nneig/problems.hpp"

namespace nneig {

std::unique_ptr<Problem> detail_make_morse(int);
std::unique_ptr<Problem> detail_make_muonic(int);
std::unique_ptr<Problem> detail_make_dirac(int);
std::unique_ptr<Problem> detail_make_nonlocal(int);
std::unique_ptr<Problem> detail_make_henon_heiles(int);
std::unique_ptr<Problem> detail_make_sextic(int);

std::vector<std::string> problem_ids() {
  return {"morse",   "muonic-schrodinger", "muonic-dirac",
          "n-alpha", "henon-heiles",       "sextic-3d"};
}

std::unique_ptr<Problem> make_problem(const std::string& id, int grid_points) {
  if (id == "morse") return detail_make_morse(grid_points);
  if (id == "muonic-schrodinger") return detail_make_muonic(grid_points);
  if (id == "muonic-dirac") return detail_make_dirac(grid_points);
  if (id == "n-alpha") return detail_make_nonlocal(grid_points);
  if (id == "henon-heiles") return detail_make_henon_heiles(grid_points);
  if (id == "sextic-3d") return detail_make_sextic(grid_points);
  std::string msg = "unknown problem '" + id + "'; valid ids:";
  for (const std::string& p : problem_ids()) msg += " " + p;
  throw std::invalid_argument(msg);
}

}  // namespace nneig
