#pragma once

// Problem files: JSON description of a field bundle plus numerical settings.
//
// {
//   "dimension": 2,
//   "coordinates": ["x1", "x2"],
//   "constants": {"w": 1.0},
//   "poisson": [{"i": 1, "j": 2, "expr": "w*x1*x2"}],
//   "nijenhuis": [["2", "0"], ["0", "2"]],
//   "connection": {"mode": "explicit", "entries": [{"k": 1, "i": 1, "j": 1, "expr": "-1/x1"}]},
//   "patch": {"center": [1, 1], "half_widths": [0.5, 0.5], "excluded": [1, 2]},
//   "numerics": {"rk4_steps": 200, "y_max": 0.1, "fd_step": 1e-4, "samples": 20, "seed": 1,
//                "tolerances": {"algebra": 1e-8, "flow": 1e-6, "fd": 1e-4, "torsion": 1e-3}}
// }
//
// Indices in the file are 1-based. "nijenhuis" is optional; connection mode is one of
// "explicit", "solve" (pointwise least squares, no field) or "zero".

#include "pnr/catalog.hpp"
#include "pnr/errors.hpp"
#include "pnr/expr.hpp"
#include "pnr/fields.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pnr {

struct Tolerances {
  double algebra = 1e-8;
  double flow = 1e-6;
  double fd = 1e-4;
  double torsion = 1e-3;
};

struct Numerics {
  int rk4_steps = 200;
  double y_max = 0.1;
  double fd_step = 1e-4;
  int samples = 20;
  std::uint64_t seed = 1;
  Tolerances tol;
};

struct Problem {
  FieldBundle bundle;
  std::vector<std::string> coordinates;
  ConstantTable constants;
  std::string connection_mode = "explicit";
  Numerics numerics;
};

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + ": " + e.what());
  }
}

inline int index_of(const json& j, int n, const std::string& where) {
  const int i = get_as<int>(j, where);
  if (i < 1 || i > n) throw InputError(where + ": index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
  return i - 1;
}

inline Expr parse_expr(const json& j, int n, const ConstantTable& constants, const std::string& where) {
  std::string src;
  if (j.is_number())
    src = j.dump();
  else
    src = get_as<std::string>(j, where);
  try {
    return Expr::parse(src, n, constants);
  } catch (const ParseError& e) {
    throw InputError(where + ": " + e.what());
  }
}

inline Vec vec_of(const json& j, int n, const std::string& where) {
  const auto v = get_as<std::vector<double>>(j, where);
  if (static_cast<int>(v.size()) != n) throw InputError(where + ": expected " + std::to_string(n) + " entries");
  return Eigen::Map<const Vec>(v.data(), n);
}

}  // namespace detail

inline Problem problem_from_json(const nlohmann::json& j) {
  using detail::require;
  Problem p;
  const int n = detail::get_as<int>(require(j, "dimension", "problem"), "dimension");
  if (n < 1 || n > kMaxDim) throw InputError("dimension must be in 1.." + std::to_string(kMaxDim));

  if (j.contains("coordinates")) {
    p.coordinates = detail::get_as<std::vector<std::string>>(j["coordinates"], "coordinates");
    if (static_cast<int>(p.coordinates.size()) != n) throw InputError("coordinates: expected one name per dimension");
  } else {
    for (int i = 1; i <= n; ++i) p.coordinates.push_back("x" + std::to_string(i));
  }
  if (j.contains("constants"))
    for (const auto& [name, v] : j["constants"].items()) p.constants[name] = detail::get_as<double>(v, "constants." + name);

  FieldBundle& F = p.bundle;
  F.poisson = BivectorField(n);
  const auto& pe = require(j, "poisson", "problem");
  if (!pe.is_array()) throw InputError("poisson: expected an array of entries");
  for (std::size_t q = 0; q < pe.size(); ++q) {
    const std::string where = "poisson[" + std::to_string(q) + "]";
    const int i = detail::index_of(require(pe[q], "i", where), n, where + ".i");
    const int jj = detail::index_of(require(pe[q], "j", where), n, where + ".j");
    if (i == jj) throw InputError(where + ": diagonal entries are identically zero");
    F.poisson.set(i, jj, detail::parse_expr(require(pe[q], "expr", where), n, p.constants, where + ".expr"));
  }

  if (j.contains("nijenhuis") && !j["nijenhuis"].is_null()) {
    const auto& rows = j["nijenhuis"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) throw InputError("nijenhuis: expected n rows");
    EndomorphismField N(n);
    for (int r = 0; r < n; ++r) {
      if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n)
        throw InputError("nijenhuis[" + std::to_string(r) + "]: expected n entries");
      for (int c = 0; c < n; ++c) {
        const std::string where = "nijenhuis[" + std::to_string(r) + "][" + std::to_string(c) + "]";
        N.set(r, c, detail::parse_expr(rows[r][c], n, p.constants, where));
      }
    }
    F.nijenhuis = N;
  }

  if (j.contains("connection")) {
    const auto& cj = j["connection"];
    p.connection_mode = detail::get_as<std::string>(require(cj, "mode", "connection"), "connection.mode");
    if (p.connection_mode == "explicit") {
      ConnectionField G(n);
      if (cj.contains("entries")) {
        const auto& es = cj["entries"];
        for (std::size_t q = 0; q < es.size(); ++q) {
          const std::string where = "connection.entries[" + std::to_string(q) + "]";
          const int k = detail::index_of(require(es[q], "k", where), n, where + ".k");
          const int i = detail::index_of(require(es[q], "i", where), n, where + ".i");
          const int jj = detail::index_of(require(es[q], "j", where), n, where + ".j");
          G.set(k, i, jj, detail::parse_expr(require(es[q], "expr", where), n, p.constants, where + ".expr"));
        }
      }
      F.connection = G;
    } else if (p.connection_mode == "zero") {
      F.connection = ConnectionField(n);
    } else if (p.connection_mode != "solve") {
      throw InputError("connection.mode: expected explicit, solve or zero");
    }
  } else {
    p.connection_mode = "solve";
  }

  const auto& pj = require(j, "patch", "problem");
  F.patch.center = detail::vec_of(require(pj, "center", "patch"), n, "patch.center");
  F.patch.half_widths = detail::vec_of(require(pj, "half_widths", "patch"), n, "patch.half_widths");
  if (pj.contains("excluded"))
    for (std::size_t q = 0; q < pj["excluded"].size(); ++q)
      F.patch.excluded.push_back(detail::index_of(pj["excluded"][q], n, "patch.excluded[" + std::to_string(q) + "]"));
  for (int i = 0; i < n; ++i)
    if (!(F.patch.half_widths(i) > 0.0)) throw InputError("patch.half_widths: entries must be positive");

  if (j.contains("numerics")) {
    const auto& nj = j["numerics"];
    Numerics& m = p.numerics;
    if (nj.contains("rk4_steps")) m.rk4_steps = detail::get_as<int>(nj["rk4_steps"], "numerics.rk4_steps");
    if (nj.contains("y_max")) m.y_max = detail::get_as<double>(nj["y_max"], "numerics.y_max");
    if (nj.contains("fd_step")) m.fd_step = detail::get_as<double>(nj["fd_step"], "numerics.fd_step");
    if (nj.contains("samples")) m.samples = detail::get_as<int>(nj["samples"], "numerics.samples");
    if (nj.contains("seed")) m.seed = detail::get_as<std::uint64_t>(nj["seed"], "numerics.seed");
    if (nj.contains("tolerances")) {
      const auto& t = nj["tolerances"];
      if (t.contains("algebra")) m.tol.algebra = detail::get_as<double>(t["algebra"], "tolerances.algebra");
      if (t.contains("flow")) m.tol.flow = detail::get_as<double>(t["flow"], "tolerances.flow");
      if (t.contains("fd")) m.tol.fd = detail::get_as<double>(t["fd"], "tolerances.fd");
      if (t.contains("torsion")) m.tol.torsion = detail::get_as<double>(t["torsion"], "tolerances.torsion");
    }
  }
  if (p.numerics.rk4_steps < 10 || p.numerics.rk4_steps % 2 != 0)
    throw InputError("numerics.rk4_steps must be even and at least 10");
  if (p.numerics.samples < 1) throw InputError("numerics.samples must be positive");

  F.validate();
  return p;
}

inline Problem parse_problem(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
  return problem_from_json(j);
}

inline Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

inline nlohmann::json problem_to_json(const Problem& p) {
  using json = nlohmann::json;
  const FieldBundle& F = p.bundle;
  const int n = F.dimension();
  json j;
  j["dimension"] = n;
  j["coordinates"] = p.coordinates;
  j["constants"] = json::object();
  for (const auto& [k, v] : p.constants) j["constants"][k] = v;
  json pe = json::array();
  for (const auto& [ij, e] : F.poisson.entries())
    pe.push_back({{"i", ij.first + 1}, {"j", ij.second + 1}, {"expr", e.to_string()}});
  j["poisson"] = pe;
  if (F.nijenhuis) {
    json rows = json::array();
    for (int r = 0; r < n; ++r) {
      json row = json::array();
      for (int c = 0; c < n; ++c) row.push_back(F.nijenhuis->at(r, c).to_string());
      rows.push_back(row);
    }
    j["nijenhuis"] = rows;
  }
  json cj;
  cj["mode"] = p.connection_mode;
  if (p.connection_mode == "explicit" && F.connection) {
    json es = json::array();
    for (const auto& [kij, e] : F.connection->entries()) {
      const auto [k, i, jj] = kij;
      es.push_back({{"k", k + 1}, {"i", i + 1}, {"j", jj + 1}, {"expr", e.to_string()}});
    }
    cj["entries"] = es;
  }
  j["connection"] = cj;
  std::vector<int> excluded;
  for (int i : F.patch.excluded) excluded.push_back(i + 1);
  j["patch"] = {{"center", std::vector<double>(F.patch.center.data(), F.patch.center.data() + n)},
                {"half_widths", std::vector<double>(F.patch.half_widths.data(), F.patch.half_widths.data() + n)},
                {"excluded", excluded}};
  const Numerics& m = p.numerics;
  j["numerics"] = {{"rk4_steps", m.rk4_steps},
                   {"y_max", m.y_max},
                   {"fd_step", m.fd_step},
                   {"samples", m.samples},
                   {"seed", m.seed},
                   {"tolerances", {{"algebra", m.tol.algebra}, {"flow", m.tol.flow}, {"fd", m.tol.fd}, {"torsion", m.tol.torsion}}}};
  return j;
}

inline std::string dump_problem(const Problem& p) { return problem_to_json(p).dump(2) + "\n"; }

/// Problem wrapper for a catalog entry; constant-connection entries are written in "zero" mode.
inline Problem problem_from_catalog(const CatalogEntry& e) {
  Problem p;
  p.bundle = e.bundle;
  const int n = e.bundle.dimension();
  for (int i = 1; i <= n; ++i) p.coordinates.push_back("x" + std::to_string(i));
  if (e.name.rfind("toda", 0) == 0) p.coordinates = {"a1", "a2", "a3", "b1", "b2", "b3"};
  if (!e.bundle.connection)
    p.connection_mode = "solve";
  else if (e.bundle.connection->entries().empty())
    p.connection_mode = "zero";
  return p;
}

}  // namespace pnr
