// pnr: check PN structures and certify their symplectic realizations from problem files.
//
// Exit codes: 0 every check passed, 1 some check failed, 2 input or usage error.

#include "pnr/catalog.hpp"
#include "pnr/checks.hpp"
#include "pnr/problem.hpp"
#include "pnr/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
  std::optional<int> steps;
  std::optional<double> ymax;
  std::optional<double> tol_algebra;
  std::optional<double> tol_flow;
  std::optional<double> tol_fd;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool csv = false;
  bool timings = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--steps", o.steps, "RK4 steps on [0,1] (even)");
  sub->add_option("--ymax", o.ymax, "covector box |y| <= ymax");
  sub->add_option("--tol-algebra", o.tol_algebra, "pointwise algebra tolerance");
  sub->add_option("--tol-flow", o.tol_flow, "flow/quadrature tolerance");
  sub->add_option("--tol-fd", o.tol_fd, "finite-difference tolerance");
  sub->add_option("--samples", o.samples, "number of seeded samples");
  sub->add_option("--seed", o.seed, "sampling seed");
  sub->add_option("--out", o.out, "write the report here instead of stdout");
  sub->add_flag("--csv", o.csv, "emit a flat CSV residual table");
  sub->add_flag("--timings", o.timings, "include runtime_ms in JSON records");
}

pnr::Problem load(const std::string& path, const Overrides& o) {
  pnr::Problem p = pnr::load_problem(path);
  pnr::Numerics& n = p.numerics;
  if (o.steps) n.rk4_steps = *o.steps;
  if (o.ymax) n.y_max = *o.ymax;
  if (o.tol_algebra) n.tol.algebra = *o.tol_algebra;
  if (o.tol_flow) n.tol.flow = *o.tol_flow;
  if (o.tol_fd) n.tol.fd = *o.tol_fd;
  if (o.samples) n.samples = *o.samples;
  if (o.seed) n.seed = *o.seed;
  if (n.rk4_steps < 10 || n.rk4_steps % 2 != 0) throw pnr::InputError("--steps must be even and at least 10");
  if (n.samples < 1) throw pnr::InputError("--samples must be positive");
  if (!(n.y_max >= 0.0)) throw pnr::InputError("--ymax must be non-negative");
  return p;
}

void write(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw pnr::InputError("cannot write " + out);
  f << text;
}

int emit(const pnr::Report& r, const Overrides& o) {
  write(o.csv ? r.csv_text() : r.json_text(o.timings), o.out);
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson-Nijenhuis structure checks and symplectic realization certificates"};
  app.require_subcommand(1);

  Overrides o;
  std::string file, file1;
  bool hierarchy = false;
  std::vector<double> ymaxes = {0.05, 0.1, 0.2, 0.4};
  std::vector<double> svals = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::string entry;
  bool list = false;

  auto* check = app.add_subcommand("check", "Poisson, PN and connection residuals");
  check->add_option("file", file, "problem file")->required();
  add_common(check, o);

  auto* realize = app.add_subcommand("realize", "realized forms and their certificates");
  realize->add_option("file", file, "problem file")->required();
  realize->add_flag("--hierarchy", hierarchy, "extend to |k| <= 2");
  add_common(realize, o);

  auto* sweep = app.add_subcommand("sweep", "nondegeneracy of the realized forms against y_max");
  sweep->add_option("file", file, "problem file")->required();
  sweep->add_option("--ymax-list", ymaxes, "y_max values")->delimiter(',');
  add_common(sweep, o);

  auto* pencil = app.add_subcommand("pencil", "convex combinations of two sprays");
  pencil->add_option("file0", file, "problem file for Pi_0")->required();
  pencil->add_option("file1", file1, "problem file for Pi_1")->required();
  pencil->add_option("--s-list", svals, "pencil parameters")->delimiter(',');
  add_common(pencil, o);

  auto* catalog = app.add_subcommand("catalog", "list built-in structures or write one as a problem file");
  catalog->add_option("name", entry, "catalog entry");
  catalog->add_flag("--list", list, "list entry names");
  catalog->add_option("--out", o.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) return emit(pnr::cmd_check(load(file, o)), o);
    if (*realize) {
      pnr::RealizeOptions ro;
      ro.hierarchy = hierarchy;
      return emit(pnr::cmd_realize(load(file, o), ro), o);
    }
    if (*sweep) return emit(pnr::cmd_sweep(load(file, o), ymaxes), o);
    if (*pencil) return emit(pnr::cmd_pencil(load(file, o), load(file1, o), svals), o);
    if (*catalog) {
      if (list || entry.empty()) {
        std::string text;
        for (const auto& name : pnr::catalog_names()) text += name + "\n";
        write(text, o.out);
        return 0;
      }
      write(pnr::dump_problem(pnr::problem_from_catalog(pnr::catalog_entry(entry))), o.out);
      return 0;
    }
  } catch (const pnr::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const pnr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
