#pragma once

// Covariant connection Γ and the contravariant connections it induces with Π:
//   ∇̄_α X = Π^#(∇_X α) + [Π^#α, X]        on TM,
//   ∇̃_α β = ∇_{Π^#β} α + [α, β]_Π           on T*M, with ∇̃_{dx^i} dx^j = Γ̃_k^{ij} dx^k.

#include "pnr/fields.hpp"
#include "pnr/poisson.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace pnr {

/// Residual of (∇_X N)Y − (∇_Y N)X = 0 in coordinates:
///   R^i_{jk} = ∂_k ν^i_j − ∂_j ν^i_k − (Γ^i_{jl} ν^l_k − Γ^i_{kl} ν^l_j).
inline SkewTensor3 nabla_N_residual(const MatJet& N, const ConnectionField::Sample& G) {
  const int n = static_cast<int>(N.value.rows());
  SkewTensor3 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double s = N.d[k](i, j) - N.d[j](i, k);
        for (int l = 0; l < n; ++l) s -= G.gamma[i](j, l) * N.value(l, k) - G.gamma[i](k, l) * N.value(l, j);
        R.set(i, j, k, s);
      }
  return R;
}

inline SkewTensor3 nabla_N_residual(const FieldBundle& F, const Vec& x) {
  require_in_patch(F, x);
  return nabla_N_residual(F.N().evaluate(x, 1), F.Gamma().evaluate(x, 0));
}

struct PointwiseConnection {
  std::vector<Mat> gamma;  // gamma[i](j,k) = Γ^i_{jk}, symmetric
  double residual;         // max |Γ^i N − Nᵀ Γ^i − RHS^i| over all equations
};

/// Index of the symmetric unknown (a, b), a <= b, in row-major upper-triangular order.
inline int sym_index(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return a * n - a * (a - 1) / 2 + (b - a);
}

/// Coefficient matrix and right-hand side of the linear system for Γ^i (one block per i).
/// Rows are indexed by pairs j < k; columns by symmetric unknowns a <= b.
inline std::pair<Mat, Vec> connection_system(const MatJet& N, int i) {
  const int n = static_cast<int>(N.value.rows());
  const int rows = n * (n - 1) / 2;
  const int cols = n * (n + 1) / 2;
  Mat A = Mat::Zero(rows, cols);
  Vec b = Vec::Zero(rows);
  int r = 0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k, ++r) {
      // Σ_l Γ^i_{jl} ν^l_k − Γ^i_{kl} ν^l_j
      for (int l = 0; l < n; ++l) {
        A(r, sym_index(j, l, n)) += N.value(l, k);
        A(r, sym_index(k, l, n)) -= N.value(l, j);
      }
      b(r) = N.d[k](i, j) - N.d[j](i, k);
    }
  return {A, b};
}

/// Minimal-norm least-squares solution of Γ^i N − Nᵀ Γ^i = (∂_k ν^i_j − ∂_j ν^i_k) for each i.
inline PointwiseConnection solve_connection_pointwise(const MatJet& N) {
  const int n = static_cast<int>(N.value.rows());
  PointwiseConnection out{std::vector<Mat>(n, Mat::Zero(n, n)), 0.0};
  if (n < 2) return out;
  for (int i = 0; i < n; ++i) {
    auto [A, b] = connection_system(N, i);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
    const Vec g = cod.solve(b);
    out.residual = std::max(out.residual, (A * g - b).cwiseAbs().maxCoeff());
    for (int a = 0; a < n; ++a)
      for (int c = a; c < n; ++c) {
        out.gamma[i](a, c) = g(sym_index(a, c, n));
        out.gamma[i](c, a) = out.gamma[i](a, c);
      }
  }
  return out;
}

inline PointwiseConnection solve_connection_pointwise(const EndomorphismField& N, const Vec& x) {
  return solve_connection_pointwise(N.evaluate(x, 1));
}

/// Γ̃_k^{ij} stored as tilde[k](i, j).
struct ContravariantCoeffs {
  std::vector<Mat> tilde;
};

/// Γ̃_k^{ij} = Γ^i_{kl} Π^{lj} + ∂_k Π^{ij}.
inline ContravariantCoeffs contravariant_coeffs(const MatJet& Pi, const ConnectionField::Sample& G) {
  const int n = static_cast<int>(Pi.value.rows());
  ContravariantCoeffs c{std::vector<Mat>(n, Mat::Zero(n, n))};
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = Pi.d[k](i, j);
        for (int l = 0; l < n; ++l) s += G.gamma[i](k, l) * Pi.value(l, j);
        c.tilde[k](i, j) = s;
      }
  return c;
}

inline ContravariantCoeffs contravariant_coeffs(const FieldBundle& F, const Vec& x) {
  require_in_patch(F, x);
  return contravariant_coeffs(F.poisson.evaluate(x, 1), F.Gamma().evaluate(x, 0));
}

/// G(y) = Σ_k y_k Γ^k, the symmetric matrix with entries y_k Γ^k_{ij}.
inline Mat contract_upper(const std::vector<Mat>& gamma, const Vec& y) {
  const int n = static_cast<int>(y.size());
  Mat G = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    if (y(k) != 0.0) G += y(k) * gamma[k];
  return G;
}

/// X^h = X^i ∂/∂x^i + y_k Γ^k_{ij} X^j ∂/∂y_i at ξ = (x, y), in the (∂x, ∂y) frame.
inline Vec horizontal_lift(const ConnectionField::Sample& G, const Vec& y, const Vec& X) {
  const int n = static_cast<int>(y.size());
  Vec out(2 * n);
  out.head(n) = X;
  out.tail(n) = contract_upper(G.gamma, y) * X;
  return out;
}

inline Vec horizontal_lift(const FieldBundle& F, const Vec& x, const Vec& y, const Vec& X) {
  require_in_patch(F, x);
  return horizontal_lift(F.Gamma().evaluate(x, 0), y, X);
}

/// u = ū^h + θ_u: ū is the projection, θ_u the vertical remainder.
struct HVSplit {
  Vec base;    // ū
  Vec covector;  // θ_u
};

inline HVSplit hv_split(const ConnectionField::Sample& G, const Vec& y, const Vec& u) {
  const int n = static_cast<int>(y.size());
  HVSplit s{u.head(n), u.tail(n)};
  s.covector -= contract_upper(G.gamma, y) * s.base;
  return s;
}

inline HVSplit hv_split(const FieldBundle& F, const Vec& x, const Vec& y, const Vec& u) {
  require_in_patch(F, x);
  return hv_split(F.Gamma().evaluate(x, 0), y, u);
}

/// Connection term of the covector path derivative: (∇̃_a θ)_k − dθ_k/dt = Γ̃_k^{ij} a_i θ_j.
inline Vec tilde_connection_term(const ContravariantCoeffs& c, const Vec& a, const Vec& theta) {
  const int n = static_cast<int>(a.size());
  Vec out(n);
  for (int k = 0; k < n; ++k) out(k) = a.dot(c.tilde[k] * theta);
  return out;
}

/**
 * Connection term of the vector path derivative along a cotangent path,
 *   (∇̄_a u)^l − du^l/dt = a_j u^i B^{j}{}_i{}^l,  B^j_i^l = −Γ^j_{ik} Π^{kl} − ∂_i Π^{jl},
 * obtained by evaluating ∇̄_{dx^j} ∂_i = Π^#(∇_{∂_i} dx^j) + [Π^# dx^j, ∂_i] on coordinate frames.
 */
inline Vec bar_connection_term(const MatJet& Pi, const ConnectionField::Sample& G, const Vec& a, const Vec& u) {
  const int n = static_cast<int>(a.size());
  Vec out = -(Pi.value.transpose() * (contract_upper(G.gamma, a) * u));
  for (int i = 0; i < n; ++i)
    if (u(i) != 0.0) out -= u(i) * (Pi.d[i].transpose() * a);
  return out;
}

/// Residual of ∇̃_α(ᵗN β) = ᵗN ∇̃_α β over coordinate coframes α = dx^i, β = dx^j:
///   Π^{il} ∂_l ν^j_k + ν^j_m Γ̃_k^{im} − ν^m_k Γ̃_m^{ij}.
inline double tilde_nabla_parallel_residual(const MatJet& Pi, const MatJet& N, const ConnectionField::Sample& G) {
  const int n = static_cast<int>(Pi.value.rows());
  const ContravariantCoeffs c = contravariant_coeffs(Pi, G);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += Pi.value(i, l) * N.d[l](j, k);
        for (int m = 0; m < n; ++m) s += N.value(j, m) * c.tilde[k](i, m) - N.value(m, k) * c.tilde[m](i, j);
        worst = std::max(worst, std::abs(s));
      }
  return worst;
}

inline double tilde_nabla_parallel_residual(const FieldBundle& F, const Vec& x) {
  require_in_patch(F, x);
  return tilde_nabla_parallel_residual(F.poisson.evaluate(x, 1), F.N().evaluate(x, 1), F.Gamma().evaluate(x, 0));
}

/// Values on the uniform grid t_j = j/m, j = 0..m.
struct CovectorPath {
  int steps = 0;
  std::vector<Vec> values;
};
using VectorPath = CovectorPath;

namespace detail {

/// Cubic Lagrange interpolation of grid samples at the midpoint of interval [j, j+1].
inline Vec midpoint_cubic(std::span<const Vec> v, int j) {
  const int m = static_cast<int>(v.size()) - 1;
  if (m < 3) return 0.5 * (v[j] + v[j + 1]);
  int s = std::clamp(j - 1, 0, m - 3);
  // nodes s..s+3, evaluation at j + 1/2
  const double t = (j + 0.5) - s;
  Vec out = Vec::Zero(v[0].size());
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (t - b) / static_cast<double>(a - b);
    out += w * v[s + a];
  }
  return out;
}

}  // namespace detail

/**
 * Solves ∇̃_{a_t} θ̃ = θ_t along a trajectory: dθ̃_k/dt = θ_k − Γ̃_k^{ij}(γ) a_i θ̃_j, RK4 on the
 * trajectory grid. `states` holds ξ(t_j) = (γ, a) and `source` θ(t_j); mid-step values of both are
 * taken by cubic interpolation so the scheme stays fourth order.
 */
inline CovectorPath contravariant_derivative_along(const FieldBundle& F, std::span<const Vec> states,
                                                   std::span<const Vec> source, const Vec& theta0) {
  if (states.size() != source.size() || states.size() < 2) throw InputError("grid mismatch between path and source");
  const int m = static_cast<int>(states.size()) - 1;
  const int n = F.dimension();
  const double h = 1.0 / m;
  auto rhs = [&](const Vec& xi, const Vec& src, const Vec& th) {
    const Vec x = xi.head(n);
    const Vec a = xi.tail(n);
    const ContravariantCoeffs c = contravariant_coeffs(F.poisson.evaluate(x, 1), F.Gamma().evaluate(x, 0));
    return Vec(src - tilde_connection_term(c, a, th));
  };
  CovectorPath out{m, {theta0}};
  out.values.reserve(m + 1);
  Vec th = theta0;
  for (int j = 0; j < m; ++j) {
    const Vec xi_mid = detail::midpoint_cubic(states, j);
    const Vec src_mid = detail::midpoint_cubic(source, j);
    const Vec k1 = rhs(states[j], source[j], th);
    const Vec k2 = rhs(xi_mid, src_mid, th + 0.5 * h * k1);
    const Vec k3 = rhs(xi_mid, src_mid, th + 0.5 * h * k2);
    const Vec k4 = rhs(states[j + 1], source[j + 1], th + h * k3);
    th += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.values.push_back(th);
  }
  return out;
}

}  // namespace pnr
