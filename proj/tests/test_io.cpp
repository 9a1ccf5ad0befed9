#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "nneig/snapshot.hpp"

using namespace nneig;

namespace {

Mlp random_net(int n_in, int n_hid, std::uint64_t seed) {
  Rng rng(seed);
  return Mlp::random(n_in, n_hid, rng);
}

ScalarSnapshot sample_scalar() {
  ScalarSnapshot snap;
  snap.problem_id = "henon-heiles";
  snap.hidden_units = 4;
  snap.eigenvalue = 1.9901073280719;
  snap.final_error = 3.25e-9;
  snap.normalization = 0.3127;
  Envelope env(EnvelopeKind::GaussianND, 0.51234567890123, 2);
  snap.terms.push_back({1.25, env, random_net(2, 4, 5)});
  snap.terms.push_back({-0.03e-120, env, random_net(2, 4, 6)});
  return snap;
}

std::string save_to_string(const Snapshot& snap) {
  std::ostringstream os;
  save_snapshot(os, snap);
  return os.str();
}

}  // namespace

TEST_CASE("g17 formatting round-trips doubles exactly") {
  for (double v : {0.0, 1.0, -1.0, 3.141592653589793, 2.861719788111789e-4, -10.46990091,
                   1e-300, -7.216449660063518e+120, 5e-324}) {
    const std::string s = format_g17(v);
    // strtod instead of stod: stod throws on subnormals (ERANGE).
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("scalar snapshot round trip preserves every number exactly") {
  const ScalarSnapshot snap = sample_scalar();
  const std::string text = save_to_string(snap);

  std::istringstream is(text);
  const Snapshot loaded = load_snapshot(is);
  REQUIRE(std::holds_alternative<ScalarSnapshot>(loaded));
  const auto& got = std::get<ScalarSnapshot>(loaded);

  CHECK(got.problem_id == snap.problem_id);
  CHECK(got.hidden_units == snap.hidden_units);
  CHECK(got.eigenvalue == snap.eigenvalue);
  CHECK(got.final_error == snap.final_error);
  CHECK(got.normalization == snap.normalization);
  REQUIRE(got.terms.size() == snap.terms.size());
  for (std::size_t t = 0; t < snap.terms.size(); ++t) {
    CHECK(got.terms[t].coeff == snap.terms[t].coeff);
    CHECK(got.terms[t].env.kind() == snap.terms[t].env.kind());
    CHECK(got.terms[t].env.shape() == snap.terms[t].env.shape());
    CHECK(got.terms[t].env.dimension() == snap.terms[t].env.dimension());
    std::vector<double> a(snap.terms[t].net.parameter_count());
    std::vector<double> b(got.terms[t].net.parameter_count());
    REQUIRE(a.size() == b.size());
    snap.terms[t].net.flatten(a);
    got.terms[t].net.flatten(b);
    CHECK(a == b);
  }

  // The reconstructed evaluator matches the original pointwise.
  const BasisState orig = snap.state(), back = got.state();
  const double x[2] = {0.73, -1.4};
  CHECK(back.value(x) == orig.value(x));
}

TEST_CASE("saving twice yields byte-identical text") {
  const ScalarSnapshot snap = sample_scalar();
  CHECK(save_to_string(snap) == save_to_string(snap));

  // Load/save is also a fixed point.
  std::istringstream is(save_to_string(snap));
  const Snapshot loaded = load_snapshot(is);
  CHECK(save_to_string(loaded) == save_to_string(snap));
}

TEST_CASE("dirac snapshot round trip") {
  DiracSnapshot snap;
  snap.problem_id = "muonic-dirac";
  snap.hidden_units = 8;
  snap.eigenvalue = -10.5376;
  snap.final_error = 2.2e-8;
  snap.normalization = 1.7;
  snap.shape = 0.0731;
  Rng rng(9);
  for (int i = 0; i < 49; ++i) snap.parameters.push_back(rng.uniform(-2.0, 2.0));

  std::istringstream is(save_to_string(snap));
  const Snapshot loaded = load_snapshot(is);
  REQUIRE(std::holds_alternative<DiracSnapshot>(loaded));
  const auto& got = std::get<DiracSnapshot>(loaded);
  CHECK(got.problem_id == snap.problem_id);
  CHECK(got.hidden_units == snap.hidden_units);
  CHECK(got.eigenvalue == snap.eigenvalue);
  CHECK(got.final_error == snap.final_error);
  CHECK(got.shape == snap.shape);
  CHECK(got.parameters == snap.parameters);
}

TEST_CASE("snapshot files work through the filesystem") {
  const std::string path = "snapshot_roundtrip.tmp";
  const ScalarSnapshot snap = sample_scalar();
  save_snapshot_file(path, snap);
  const Snapshot loaded = load_snapshot_file(path);
  REQUIRE(std::holds_alternative<ScalarSnapshot>(loaded));
  CHECK(std::get<ScalarSnapshot>(loaded).eigenvalue == snap.eigenvalue);
  std::remove(path.c_str());
}

TEST_CASE("malformed snapshots are rejected with a reason") {
  std::istringstream bad1("not-a-snapshot 1\n");
  CHECK_THROWS(load_snapshot(bad1));
  std::istringstream bad2("nneig-snapshot 999\n");
  CHECK_THROWS(load_snapshot(bad2));
  // Truncated term list.
  std::istringstream bad3(
      "nneig-snapshot 1\nproblem morse\nkind scalar\nhidden 3\neigenvalue 1\nerror 0\n"
      "normalization 1\nterms 2\n");
  CHECK_THROWS(load_snapshot(bad3));
}

TEST_CASE("csv writer emits header and g17 rows") {
  const std::string path = "csv_writer.tmp";
  write_csv(path, {"a", "b"}, {{1.0, 0.5}, {2.861719788111789e-4, -10.46990091}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  CHECK(line == "1,0.5");
  std::getline(in, line);
  CHECK(line == format_g17(2.861719788111789e-4) + "," + format_g17(-10.46990091));
  std::remove(path.c_str());
}
