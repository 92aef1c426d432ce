#pragma once

// Lifts of N to T*M and the 2-forms ω_k(·,·) = ω_can((N^c)^k ·, ·) as frame matrices.
//
// A 2-form on T_ξ(T*M) is an antisymmetric 2n×2n matrix W in the (∂x, ∂y) frame,
// evaluated as W(u, w) = wᵀ W u.

#include "pnr/fields.hpp"
#include "pnr/poisson.hpp"

#include <Eigen/Dense>

namespace pnr {

/// (0 −I; I 0)
inline Mat omega_can(int n) {
  Mat W = Mat::Zero(2 * n, 2 * n);
  W.topRightCorner(n, n) = -Mat::Identity(n, n);
  W.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  return W;
}

inline Mat antisymmetrize(const Mat& M) { return 0.5 * (M - M.transpose()); }

/// Evaluates the 2-form W on (u, w).
inline double form_apply(const Mat& W, const Vec& u, const Vec& w) { return w.dot(W * u); }

/// N^c = (N 0; A Nᵀ) with a^j_k = y_i (∂_k ν^i_j − ∂_j ν^i_k).
inline Mat complete_lift_N(const MatJet& N, const Vec& y) {
  const int n = static_cast<int>(y.size());
  Mat L = Mat::Zero(2 * n, 2 * n);
  L.topLeftCorner(n, n) = N.value;
  L.bottomRightCorner(n, n) = N.value.transpose();
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double a = 0.0;
      for (int i = 0; i < n; ++i) a += y(i) * (N.d[k](i, j) - N.d[j](i, k));
      L(n + j, k) = a;
    }
  return L;
}

inline Mat complete_lift_N(const FieldBundle& F, const Vec& x, const Vec& y) {
  require_in_patch(F, x);
  return complete_lift_N(F.N().evaluate(x, 1), y);
}

/// N^v = y_i ν^i_j ∂/∂y_j, as a 2n-vector (0, Nᵀ y).
inline Vec vertical_lift_N(const Mat& N, const Vec& y) {
  const int n = static_cast<int>(y.size());
  Vec v = Vec::Zero(2 * n);
  v.tail(n) = N.transpose() * y;
  return v;
}

inline Vec vertical_lift_N(const FieldBundle& F, const Vec& x, const Vec& y) {
  require_in_patch(F, x);
  return vertical_lift_N(F.N().evaluate(x, 0).value, y);
}

/// Integer power of the lifted operator, computed by repeated products at the point.
inline Mat lifted_power(const Mat& Nc, int k) {
  Mat base = Nc;
  if (k < 0) {
    if (min_singular_value(Nc) < kSingularThreshold) throw DomainError("N^c is singular; negative power undefined");
    base = Nc.inverse();
  }
  Mat out = Mat::Identity(Nc.rows(), Nc.cols());
  for (int s = 0; s < std::abs(k); ++s) out = base * out;
  return out;
}

/// ω_k = antisym(ω_can (N^c)^k); k = 0 is ω_can itself.
inline Mat omega_k_from_lift(const Mat& Nc, int k) {
  const int n = static_cast<int>(Nc.rows()) / 2;
  if (k == 0) return omega_can(n);
  return antisymmetrize(omega_can(n) * lifted_power(Nc, k));
}

inline Mat omega_k(const FieldBundle& F, const Vec& x, const Vec& y, int k) {
  if (k == 0) return omega_can(F.dimension());
  return omega_k_from_lift(complete_lift_N(F, x, y), k);
}

/// Nijenhuis torsion of a matrix field on R^d from central differences of step h.
template <class MatrixField>
SkewTensor3 fd_torsion(MatrixField&& field, const Vec& p, double h) {
  const int d = static_cast<int>(p.size());
  MatJet J;
  J.value = field(p);
  J.d.resize(d);
  for (int a = 0; a < d; ++a) {
    Vec pp = p, pm = p;
    pp(a) += h;
    pm(a) -= h;
    J.d[a] = (field(pp) - field(pm)) / (2.0 * h);
  }
  return nijenhuis_torsion(J);
}

/// Torsion of ξ ↦ N^c(ξ) on T*M by finite differences; vanishes when T(N) = 0.
inline double nc_torsion_residual(const FieldBundle& F, const Vec& x, const Vec& y, double h = 1e-5) {
  const int n = F.dimension();
  Vec xi(2 * n);
  xi << x, y;
  auto field = [&](const Vec& p) { return complete_lift_N(F, p.head(n), p.tail(n)); };
  return fd_torsion(field, xi, h).max_abs();
}

}  // namespace pnr
