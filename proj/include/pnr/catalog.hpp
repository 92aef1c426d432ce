#pragma once

// Built-in PN structures: diagonal quadratic pairs, the periodic 3-particle Toda / Volterra pair,
// and constant control cases with closed-form flows.

#include "pnr/errors.hpp"
#include "pnr/expr.hpp"
#include "pnr/fields.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pnr {

struct CatalogEntry {
  std::string name;
  FieldBundle bundle;
  std::vector<std::string> facts;
};

namespace detail {

inline Expr x(int i) { return Expr::variable(i); }
inline Expr c(double v) { return Expr::constant(v); }

/// c · e, dropping the factor when c = ±1.
inline Expr scaled(double v, const Expr& e) {
  if (v == 1.0) return e;
  if (v == -1.0) return -e;
  return c(v) * e;
}

inline Patch box(const Vec& center, double half_width, std::vector<int> excluded) {
  return {center, Vec::Constant(center.size(), half_width), std::move(excluded)};
}

}  // namespace detail

/**
 * Π₀ = Σ_{i<j} ϖ₀^{ij} x^i x^j ∂_i∧∂_j, ν^i_j = n^i_j x^i / x^j, Γ^i_{ii} = −1/x^i.
 * Requires n ϖ₀ = ϖ₀ nᵀ (both are ϖ₁); throws InputError otherwise.
 */
inline CatalogEntry diagonal_quadratic(const Mat& w0, const Mat& nmat, double tol = 1e-12) {
  using detail::c;
  using detail::x;
  const int n = static_cast<int>(w0.rows());
  if (w0.cols() != n || nmat.rows() != n || nmat.cols() != n) throw InputError("coefficient matrices must be n×n");
  if ((w0 + w0.transpose()).cwiseAbs().maxCoeff() > tol) throw InputError("ϖ₀ must be antisymmetric");
  const Mat left = nmat * w0;
  const Mat right = w0 * nmat.transpose();
  if ((left - right).cwiseAbs().maxCoeff() > tol * (1.0 + left.cwiseAbs().maxCoeff()))
    throw InputError("inconsistent coefficients: n·ϖ₀ and ϖ₀·nᵀ differ, so ϖ₁ is not defined");

  FieldBundle F;
  F.poisson = BivectorField(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w0(i, j) != 0.0) F.poisson.set(i, j, detail::scaled(w0(i, j), x(i) * x(j)));

  EndomorphismField N(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (nmat(i, j) == 0.0) continue;
      N.set(i, j, i == j ? c(nmat(i, j)) : detail::scaled(nmat(i, j), x(i) / x(j)));
    }
  F.nijenhuis = N;

  ConnectionField G(n);
  for (int i = 0; i < n; ++i) G.set(i, i, i, -(c(1.0) / x(i)));
  F.connection = G;

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  F.patch = detail::box(Vec::Ones(n), 0.75, all);

  CatalogEntry e{"diagonal-quadratic", F, {}};
  char buf[160];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "varpi1[%d][%d] = %.17g", i + 1, j + 1, left(i, j));
      e.facts.push_back(buf);
    }
  e.facts.push_back("constant coefficients in the coordinates log|x^i|; Γ is their flat connection");
  return e;
}

/// n = 2 instance: ϖ₀¹² = 1, N = λ I.
inline CatalogEntry diagonal_quadratic_2d(double lambda = 2.0) {
  Mat w0(2, 2);
  w0 << 0, 1, -1, 0;
  return diagonal_quadratic(w0, lambda * Mat::Identity(2, 2));
}

/// n = 3 instance with a non-scalar n = 2 I + ϖ₀ K.
inline CatalogEntry diagonal_quadratic_3d() {
  Mat w0(3, 3), K(3, 3);
  w0 << 0, 1, 0.5, -1, 0, 2, -0.5, -2, 0;
  K << 0, 0.3, -0.2, -0.3, 0, 0.1, 0.2, -0.1, 0;
  return diagonal_quadratic(w0, 2.0 * Mat::Identity(3, 3) + w0 * K);
}

/// Random conforming data n = λ I + ϖ₀ K with ϖ₀, K antisymmetric (so n ϖ₀ = ϖ₀ nᵀ).
inline CatalogEntry random_diagonal_quadratic(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&] { return 2.0 * uniform01(rng) - 1.0; };
  Mat w0 = Mat::Zero(n, n), K = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      w0(i, j) = draw();
      w0(j, i) = -w0(i, j);
      K(i, j) = 0.5 * draw();
      K(j, i) = -K(i, j);
    }
  const double lambda = 1.5 + uniform01(rng);
  return diagonal_quadratic(w0, lambda * Mat::Identity(n, n) + w0 * K, 1e-10);
}

namespace detail {

// Flaschka coordinates (a1, a2, a3, b1, b2, b3) ↦ indices 0..5.
inline int a(int i) { return (i % 3 + 3) % 3; }
inline int b(int i) { return 3 + (i % 3 + 3) % 3; }

inline Patch toda_patch() {
  Vec center(6);
  center << 1, 1, 1, 0, 0, 0;
  return box(center, 0.4, {0, 1, 2});
}

/// Γ^i on the b-block: all entries f, except Γ¹₆₆ = f + a₁, Γ²₄₄ = f + a₂, Γ³₅₅ = f + a₃.
inline ConnectionField toda_connection(const Expr& f) {
  ConnectionField G(6);
  const int special[3] = {5, 3, 4};
  for (int i = 0; i < 3; ++i)
    for (int p = 3; p < 6; ++p)
      for (int q = p; q < 6; ++q) {
        const bool extra = p == special[i] && q == special[i];
        if (f.is_zero()) {
          if (extra) G.set(i, p, q, x(i));
        } else {
          G.set(i, p, q, extra ? f + x(i) : f);
        }
      }
  return G;
}

inline Expr casimir_C() { return x(0) * x(1) * x(2); }

/// Toda Π₀ and the recursion operator with F = G = H = 0 and f = g = h.
inline FieldBundle toda_bundle(const Expr& f) {
  FieldBundle F;
  F.poisson = BivectorField(6);
  for (int i = 0; i < 3; ++i) {
    F.poisson.set(a(i), b(i), x(a(i)));
    F.poisson.set(a(i), b(i + 1), -x(a(i)));
  }
  const Expr one = Expr::constant(1.0);
  EndomorphismField N(6);
  if (!f.is_zero())
    for (int i = 0; i < 3; ++i)
      for (int p = 3; p < 6; ++p) N.set(i, p, f);
  N.set(0, 5, f.is_zero() ? x(0) : f + x(0));
  N.set(1, 3, f.is_zero() ? x(1) : f + x(1));
  N.set(2, 4, f.is_zero() ? x(2) : f + x(2));
  N.set(3, 1, one / x(1));
  N.set(4, 2, one / x(2));
  N.set(5, 0, one / x(0));
  F.nijenhuis = N;
  F.connection = toda_connection(f);
  F.patch = toda_patch();
  return F;
}

}  // namespace detail

/**
 * Π₀ = Σ a_i ∂_{a_i}∧(∂_{b_i} − ∂_{b_{i+1}}) with the recursion operator for F = G = H = 0 and
 * f = g = h = C = a₁a₂a₃, and the matching connection table. N Π₀ = Π₁ and ∇N = 0 hold, but this N
 * has nonzero Nijenhuis torsion (e.g. T¹₄₆ = C) because Π₀ is degenerate.
 */
inline CatalogEntry toda_volterra() {
  return {"toda-volterra",
          detail::toda_bundle(detail::casimir_C()),
          {"Casimirs of Pi0: a1*a2*a3 and b1+b2+b3", "N*Pi0 = sum a_i a_{i+1} da_i^da_{i+1} + db_i^db_{i+1}",
           "T(N) != 0 for f = g = h = a1*a2*a3"}};
}

/// The f = g = h = 0 member of the same family: Nijenhuis, with Γ¹₆₆ = a₁, Γ²₄₄ = a₂, Γ³₅₅ = a₃.
inline CatalogEntry toda_volterra_f0() {
  return {"toda-volterra-f0",
          detail::toda_bundle(Expr::constant(0.0)),
          {"N*Pi0 = Pi1 as for toda-volterra", "T(N) = 0 and nabla N = 0"}};
}

/// The second structure Π₁ = Σ (a_i a_{i+1} ∂_{a_i}∧∂_{a_{i+1}} + ∂_{b_i}∧∂_{b_{i+1}}) with the same Γ.
inline CatalogEntry toda_pi1() {
  using detail::a;
  using detail::b;
  using detail::x;
  FieldBundle F;
  F.poisson = BivectorField(6);
  for (int i = 0; i < 3; ++i) {
    F.poisson.set(a(i), a(i + 1), x(a(i)) * x(a(i + 1)));
    F.poisson.set(b(i), b(i + 1), Expr::constant(1.0));
  }
  F.connection = detail::toda_connection(detail::casimir_C());
  F.patch = detail::toda_patch();
  return {"toda-pi1", F, {"quadratic Volterra bracket in a plus a constant bracket in b"}};
}

/**
 * Π = (0 −I; I 0) on R^n, Γ = 0, N = I. The flow is φ_t(x, y) = (x + t Πᵀ y, y), and
 * Ω₀ = (0 −I; I Πᵀ) at every ξ, so π_* Π̃₀ π^* = Π.
 */
inline CatalogEntry constant_symplectic(int n) {
  if (n < 2 || n % 2 != 0) throw InputError("constant_symplectic needs an even dimension");
  const int h = n / 2;
  FieldBundle F;
  F.poisson = BivectorField(n);
  for (int i = 0; i < h; ++i) F.poisson.set(i, h + i, Expr::constant(-1.0));
  F.nijenhuis = EndomorphismField::identity(n);
  F.connection = ConnectionField(n);
  F.patch = detail::box(Vec::Zero(n), 1.0, {});
  return {"constant-symplectic", F, {"flow (x + t Pi^T y, y)", "Omega0 = (0 -I; I Pi^T)"}};
}

/// Π = 0, N = I, Γ = 0: the flow is the identity and Ω₀ = ω_can.
inline CatalogEntry zero_poisson(int n) {
  FieldBundle F;
  F.poisson = BivectorField(n);
  F.nijenhuis = EndomorphismField::identity(n);
  F.connection = ConnectionField(n);
  F.patch = detail::box(Vec::Zero(n), 1.0, {});
  return {"zero-poisson", F, {"Omega0 = omega_can"}};
}

/// Diagonal quadratic Π with ϖ₀^{ij} = 1 (i < j) and N = I, so Ω₁ = Ω₀ and Π₋₁ = Π₀.
inline CatalogEntry identity_N(int n) {
  Mat w0 = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      w0(i, j) = 1.0;
      w0(j, i) = -1.0;
    }
  CatalogEntry e = diagonal_quadratic(w0, Mat::Identity(n, n));
  e.name = "identity-N";
  e.facts = {"Omega1 = Omega0", "Pi_{-1} = Pi0"};
  return e;
}

inline std::vector<std::string> catalog_names() {
  return {"diagonal-quadratic-2", "diagonal-quadratic-3", "toda-volterra", "toda-volterra-f0", "toda-pi1",
          "constant-symplectic-2", "zero-poisson-2", "identity-N-2"};
}

inline CatalogEntry catalog_entry(const std::string& name) {
  CatalogEntry e;
  if (name == "diagonal-quadratic-2") e = diagonal_quadratic_2d();
  else if (name == "diagonal-quadratic-3") e = diagonal_quadratic_3d();
  else if (name == "toda-volterra") e = toda_volterra();
  else if (name == "toda-volterra-f0") e = toda_volterra_f0();
  else if (name == "toda-pi1") e = toda_pi1();
  else if (name == "constant-symplectic-2") e = constant_symplectic(2);
  else if (name == "zero-poisson-2") e = zero_poisson(2);
  else if (name == "identity-N-2") e = identity_N(2);
  else throw InputError("unknown catalog entry: " + name);
  e.name = name;
  return e;
}

}  // namespace pnr
