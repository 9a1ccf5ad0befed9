#include "nneig/snapshot.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nneig {

namespace {
constexpr const char* kMagic = "nneig-snapshot";
constexpr int kVersion = 1;

[[noreturn]] void bad(const std::string& what) {
  throw std::runtime_error("snapshot: " + what);
}

template <class T>
T expect(std::istream& is, const char* what) {
  T v;
  if (!(is >> v)) bad(std::string("truncated or malformed field: ") + what);
  return v;
}

void expect_token(std::istream& is, const std::string& token) {
  const auto got = expect<std::string>(is, token.c_str());
  if (got != token) bad("expected '" + token + "', got '" + got + "'");
}
}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

static void write_net(std::ostream& os, const Mlp& net) {
  os << net.inputs() << ' ' << net.hidden();
  std::vector<double> flat(net.parameter_count());
  net.flatten(flat);
  for (double p : flat) os << ' ' << format_g17(p);
}

static Mlp read_net(std::istream& is) {
  const int n_in = expect<int>(is, "net inputs");
  const int n_hid = expect<int>(is, "net hidden units");
  if (n_in < 1 || n_hid < 1) bad("invalid network size");
  Mlp net(n_in, n_hid);
  std::vector<double> flat(net.parameter_count());
  for (double& p : flat) p = expect<double>(is, "net parameter");
  net.unflatten(flat);
  return net;
}

void save_snapshot(std::ostream& os, const Snapshot& snap) {
  os << kMagic << ' ' << kVersion << '\n';
  if (const auto* s = std::get_if<ScalarSnapshot>(&snap)) {
    os << "problem " << s->problem_id << '\n';
    os << "kind scalar\n";
    os << "hidden " << s->hidden_units << '\n';
    os << "eigenvalue " << format_g17(s->eigenvalue) << '\n';
    os << "error " << format_g17(s->final_error) << '\n';
    os << "normalization " << format_g17(s->normalization) << '\n';
    os << "terms " << s->terms.size() << '\n';
    for (const TrialTerm& t : s->terms) {
      os << "term " << format_g17(t.coeff) << ' ' << to_string(t.env.kind()) << ' '
         << t.env.dimension() << ' ' << format_g17(t.env.shape()) << ' ';
      write_net(os, t.net);
      os << '\n';
    }
  } else {
    const auto& d = std::get<DiracSnapshot>(snap);
    os << "problem " << d.problem_id << '\n';
    os << "kind dirac\n";
    os << "hidden " << d.hidden_units << '\n';
    os << "eigenvalue " << format_g17(d.eigenvalue) << '\n';
    os << "error " << format_g17(d.final_error) << '\n';
    os << "normalization " << format_g17(d.normalization) << '\n';
    os << "shape " << format_g17(d.shape) << '\n';
    os << "parameters " << d.parameters.size();
    for (double p : d.parameters) os << ' ' << format_g17(p);
    os << '\n';
  }
}

Snapshot load_snapshot(std::istream& is) {
  expect_token(is, kMagic);
  const int version = expect<int>(is, "version");
  if (version != kVersion) bad("unsupported version " + std::to_string(version));
  expect_token(is, "problem");
  const auto problem_id = expect<std::string>(is, "problem id");
  expect_token(is, "kind");
  const auto kind = expect<std::string>(is, "kind");
  expect_token(is, "hidden");
  const int hidden = expect<int>(is, "hidden units");
  expect_token(is, "eigenvalue");
  const double eig = expect<double>(is, "eigenvalue");
  expect_token(is, "error");
  const double err = expect<double>(is, "error");
  expect_token(is, "normalization");
  const double nrm = expect<double>(is, "normalization");

  if (kind == "scalar") {
    ScalarSnapshot s;
    s.problem_id = problem_id;
    s.hidden_units = hidden;
    s.eigenvalue = eig;
    s.final_error = err;
    s.normalization = nrm;
    expect_token(is, "terms");
    const int nterms = expect<int>(is, "term count");
    if (nterms < 1) bad("snapshot without terms");
    for (int t = 0; t < nterms; ++t) {
      expect_token(is, "term");
      const double coeff = expect<double>(is, "term coefficient");
      const auto kind_name = expect<std::string>(is, "envelope kind");
      const int dim = expect<int>(is, "envelope dimension");
      const double shape = expect<double>(is, "envelope shape");
      Envelope env(envelope_kind_from_string(kind_name), shape, dim);
      s.terms.push_back({coeff, env, read_net(is)});
    }
    return s;
  }
  if (kind == "dirac") {
    DiracSnapshot d;
    d.problem_id = problem_id;
    d.hidden_units = hidden;
    d.eigenvalue = eig;
    d.final_error = err;
    d.normalization = nrm;
    expect_token(is, "shape");
    d.shape = expect<double>(is, "shape");
    expect_token(is, "parameters");
    const int np = expect<int>(is, "parameter count");
    if (np < 1) bad("empty parameter vector");
    d.parameters.resize(np);
    for (double& p : d.parameters) p = expect<double>(is, "parameter");
    return d;
  }
  bad("unknown snapshot kind '" + kind + "'");
}

void save_snapshot_file(const std::string& path, const Snapshot& snap) {
  std::ofstream os(path);
  if (!os) bad("cannot open for writing: " + path);
  save_snapshot(os, snap);
  if (!os) bad("write failed: " + path);
}

Snapshot load_snapshot_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) bad("cannot open: " + path);
  return load_snapshot(is);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os << ',';
    os << header[i];
  }
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << format_g17(row[i]);
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace nneig
