#pragma once

// Realized 2-forms Ω_k = ∫₀¹ φ_t* ω_k dt on T*M and the checks built on them.
//
// Conventions (frame matrices, W(u, w) = wᵀ W u):
//   Ω^♭ = −W, so R = Ω₀^{♭−1} Ω₁^♭ = W₀⁻¹ W₁ and Ω₂ = W₀ R².
//   Π̃_k = −W_k⁻¹; its (x, x) block is compared with the matrix N^{−k} Π.
// At the zero-section the linearized flow is J(t) = (I tΠᵀ; 0 I), which gives
//   W₀(0_x) = (0 −I; I Πᵀ),    W₁(0_x) = (0 −Nᵀ; N −NΠ).

#include "pnr/connection.hpp"
#include "pnr/fields.hpp"
#include "pnr/lift.hpp"
#include "pnr/poisson.hpp"
#include "pnr/spray.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pnr {

struct RealizedForm {
  int k = 0;
  Vec xi;
  Mat matrix;
  int steps = 0;
  std::string rule = "simpson";
};

/// Composite Simpson weights on m + 1 nodes of [0, 1]; m must be even.
inline std::vector<double> simpson_weights(int m) {
  if (m < 2 || m % 2 != 0) throw InputError("Simpson quadrature needs an even number of steps");
  std::vector<double> w(m + 1);
  const double h = 1.0 / m;
  for (int j = 0; j <= m; ++j) w[j] = (j == 0 || j == m) ? h / 3.0 : (j % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
  return w;
}

/// ω_k frame matrices along the nodes of a flow.
inline Mat omega_at(const FieldBundle& F, const Vec& xi, int k) {
  const int n = F.dimension();
  if (k == 0) return omega_can(n);
  return omega_k_from_lift(complete_lift_N(F.N().evaluate(xi.head(n), 1), xi.tail(n)), k);
}

/// Ω_k for each requested k from one flow (which must carry jacobians).
inline std::vector<Mat> realized_from_flow(const FieldBundle& F, const FlowResult& fl, std::span<const int> ks) {
  const int d = 2 * F.dimension();
  const std::vector<double> w = simpson_weights(fl.steps);
  std::vector<Mat> out(ks.size(), Mat::Zero(d, d));
  for (int j = 0; j <= fl.steps; ++j) {
    const Mat& J = fl.jacobians[j];
    for (std::size_t q = 0; q < ks.size(); ++q) out[q] += w[j] * (J.transpose() * omega_at(F, fl.states[j], ks[q]) * J);
  }
  for (Mat& M : out) M = antisymmetrize(M);
  return out;
}

inline void check_k(int k) {
  if (k < -2 || k > 2) throw InputError("form index k must be in -2..2");
}

inline std::vector<RealizedForm> realized_forms(const FieldBundle& F, const Vec& xi, std::span<const int> ks, int m) {
  for (int k : ks) check_k(k);
  const FlowResult fl = flow(F, xi, m, true);
  const std::vector<Mat> W = realized_from_flow(F, fl, ks);
  std::vector<RealizedForm> out;
  for (std::size_t q = 0; q < ks.size(); ++q) out.push_back({ks[q], xi, W[q], m, "simpson"});
  return out;
}

inline RealizedForm realized_form(const FieldBundle& F, const Vec& xi, int k, int m = 200) {
  const int ks[] = {k};
  return realized_forms(F, xi, ks, m).front();
}

/// Closed-form W_k at the zero-section, k ∈ {0, 1}.
inline Mat zero_section_form(const FieldBundle& F, const Vec& x, int k) {
  require_in_patch(F, x);
  const int n = F.dimension();
  const Mat P = F.poisson.evaluate(x, 0).value;
  Mat W = Mat::Zero(2 * n, 2 * n);
  if (k == 0) {
    W.topRightCorner(n, n) = -Mat::Identity(n, n);
    W.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    W.bottomRightCorner(n, n) = P.transpose();
  } else if (k == 1) {
    const Mat N = F.N().evaluate(x, 0).value;
    W.topRightCorner(n, n) = -N.transpose();
    W.bottomLeftCorner(n, n) = N;
    W.bottomRightCorner(n, n) = -N * P;
  } else {
    throw InputError("zero-section formula is available for k = 0, 1");
  }
  return W;
}

inline double zero_section_formula_residual(const FieldBundle& F, const Vec& x, int k, int m = 200) {
  const int n = F.dimension();
  Vec xi = Vec::Zero(2 * n);
  xi.head(n) = x;
  return max_abs(realized_form(F, xi, k, m).matrix - zero_section_form(F, x, k));
}

/**
 * Ω_k(u, w) at ξ from the endpoint formula
 *   B(t) = ⟨θ̃_w, L ū_t⟩ − ⟨θ̃_u, L w̄_t⟩ − Π_k(θ̃_u, θ̃_w),   Ω_k(u, w) = B(1) − B(0),
 * with L = I, Π₀ = Π for k = 0 and L = N, Π₁ = Π Nᵀ for k = 1, and θ̃ solving ∇̃θ̃ = θ from θ̃(0) = 0.
 */
inline double boundary_term_form(const FieldBundle& F, const Vec& xi, const Vec& u, const Vec& w, int k, int m = 200) {
  if (k != 0 && k != 1) throw InputError("boundary-term formula is available for k = 0, 1");
  const int n = F.dimension();
  const FlowResult fl = flow(F, xi, m, true, {{Vec::Zero(n), u}, {Vec::Zero(n), w}});
  auto B = [&](int j) {
    const Vec& s = fl.states[j];
    const Vec x = s.head(n);
    const Vec y = s.tail(n);
    const ConnectionField::Sample G = F.Gamma().evaluate(x, 0);
    const Vec ub = hv_split(G, y, fl.jacobians[j] * u).base;
    const Vec wb = hv_split(G, y, fl.jacobians[j] * w).base;
    const Vec& tu = fl.transports[0][j];
    const Vec& tw = fl.transports[1][j];
    Mat P = F.poisson.evaluate(x, 0).value;
    Mat L = Mat::Identity(n, n);
    if (k == 1) {
      L = F.N().evaluate(x, 0).value;
      P = P * L.transpose();
    }
    return tw.dot(L * ub) - tu.dot(L * wb) - tu.dot(P * tw);
  };
  return B(m) - B(0);
}

/// max over a < b < c of |∂_a W_{bc} + ∂_b W_{ca} + ∂_c W_{ab}| by central differences of step h.
template <class FormField>
double closedness_residual(FormField&& form, const Vec& xi, double h) {
  const int d = static_cast<int>(xi.size());
  std::vector<Mat> dW(d);
  for (int a = 0; a < d; ++a) {
    Vec p = xi, q = xi;
    p(a) += h;
    q(a) -= h;
    dW[a] = (form(p) - form(q)) / (2.0 * h);
  }
  double worst = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      for (int c = b + 1; c < d; ++c)
        worst = std::max(worst, std::abs(dW[a](b, c) + dW[b](c, a) + dW[c](a, b)));
  return worst;
}

/// Closedness residuals of Ω_k for each k, sharing the perturbed flows.
inline std::vector<double> closedness_residuals(const FieldBundle& F, const Vec& xi, std::span<const int> ks,
                                                double h = 1e-4, int m = 200) {
  const int d = static_cast<int>(xi.size());
  std::vector<std::vector<Mat>> dW(ks.size(), std::vector<Mat>(d));
  for (int a = 0; a < d; ++a) {
    Vec p = xi, q = xi;
    p(a) += h;
    q(a) -= h;
    const std::vector<Mat> Wp = realized_from_flow(F, flow(F, p, m, true), ks);
    const std::vector<Mat> Wq = realized_from_flow(F, flow(F, q, m, true), ks);
    for (std::size_t s = 0; s < ks.size(); ++s) dW[s][a] = (Wp[s] - Wq[s]) / (2.0 * h);
  }
  std::vector<double> out(ks.size(), 0.0);
  for (std::size_t s = 0; s < ks.size(); ++s)
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        for (int c = b + 1; c < d; ++c)
          out[s] = std::max(out[s], std::abs(dW[s][a](b, c) + dW[s][b](c, a) + dW[s][c](a, b)));
  return out;
}

inline double closedness_residual(const FieldBundle& F, const Vec& xi, int k, double h = 1e-4, int m = 200) {
  const int ks[] = {k};
  return closedness_residuals(F, xi, ks, h, m).front();
}

struct Nondegeneracy {
  double min_singular = 0.0;
  double condition = 0.0;
  bool pass = false;
};

inline constexpr double kNondegenerateThreshold = 1e-8;

inline Nondegeneracy nondegeneracy_report(const Mat& W) {
  Eigen::JacobiSVD<Mat> svd(W);
  const auto& s = svd.singularValues();
  Nondegeneracy r;
  r.min_singular = s(s.size() - 1);
  r.condition = r.min_singular > 0.0 ? s(0) / r.min_singular : std::numeric_limits<double>::infinity();
  r.pass = r.min_singular > kNondegenerateThreshold;
  return r;
}

inline Nondegeneracy nondegeneracy_report(const FieldBundle& F, const Vec& xi, int k, int m = 200) {
  return nondegeneracy_report(realized_form(F, xi, k, m).matrix);
}

/// R = Ω₀^{♭−1} Ω₁^♭ with Ω^♭ = −W.
inline Mat recursion_from_forms(const Mat& W0, const Mat& W1) {
  if (min_singular_value(W0) < kNondegenerateThreshold) throw DomainError("Ω₀ is degenerate; R undefined");
  return W0.partialPivLu().solve(W1);
}

struct RecursionOperator {
  Mat R;
  double torsion = 0.0;
};

inline Mat recursion_at(const FieldBundle& F, const Vec& xi, int m) {
  const int ks[] = {0, 1};
  const std::vector<Mat> W = realized_from_flow(F, flow(F, xi, m, true), ks);
  return recursion_from_forms(W[0], W[1]);
}

/// R at ξ and the finite-difference Nijenhuis torsion of ξ ↦ R(ξ) (step h).
inline RecursionOperator recursion_operator(const FieldBundle& F, const Vec& xi, int m = 200, double h = 1e-4) {
  auto field = [&](const Vec& p) { return recursion_at(F, p, m); };
  RecursionOperator r;
  r.R = field(xi);
  r.torsion = fd_torsion(field, xi, h).max_abs();
  return r;
}

/// |W₂ − W₀ R²| with all three forms realized from one flow.
inline double omega2_identity_residual(const FieldBundle& F, const Vec& xi, int m = 200) {
  const int ks[] = {0, 1, 2};
  const std::vector<Mat> W = realized_from_flow(F, flow(F, xi, m, true), ks);
  const Mat R = recursion_from_forms(W[0], W[1]);
  return max_abs(W[2] - W[0] * R * R);
}

/// Closedness of the form W₀ R² built from realized Ω₀ and Ω₁.
inline double omega2_closedness_residual(const FieldBundle& F, const Vec& xi, double h = 1e-4, int m = 200) {
  auto form = [&](const Vec& p) {
    const int ks[] = {0, 1};
    const std::vector<Mat> W = realized_from_flow(F, flow(F, p, m, true), ks);
    const Mat R = recursion_from_forms(W[0], W[1]);
    return Mat(W[0] * R * R);
  };
  return closedness_residual(form, xi, h);
}

/// π_* Π̃_k^# π^* from a realized matrix: the (x, x) block of −W⁻¹.
inline Mat projected_bivector(const Mat& W) {
  if (min_singular_value(W) < kNondegenerateThreshold) throw DomainError("realized form is degenerate");
  const int n = static_cast<int>(W.rows()) / 2;
  const Mat inv = W.partialPivLu().inverse();
  return -inv.topLeftCorner(n, n);
}

/// max |π_* Π̃_k^# π^* − Π_{−k}| at ξ = (x, y).
inline double poisson_map_residual(const FieldBundle& F, const Vec& x, const Vec& y, int k, int m = 200) {
  check_k(k);
  const int n = F.dimension();
  Vec xi(2 * n);
  xi << x, y;
  const Mat block = projected_bivector(realized_form(F, xi, k, m).matrix);
  const Mat P = F.poisson.evaluate(x, 0).value;
  const Mat target = k == 0 ? P : hierarchy(P, F.N().evaluate(x, 0).value, -k).value;
  return max_abs(block - target);
}

/// Nodes of the (ū, θ_u) decomposition of φ_{t*} u along a flow with jacobians.
struct SplitPath {
  std::vector<Vec> base;
  std::vector<Vec> covector;
  std::vector<Vec> base_rate;  // dū/dt from the variational equation
};

inline SplitPath split_along(const FieldBundle& F, const FlowResult& fl, const Vec& u) {
  const int n = F.dimension();
  const GeodesicSpray V(F);
  SplitPath s;
  for (int j = 0; j <= fl.steps; ++j) {
    const Vec& xi = fl.states[j];
    const Vec ut = fl.jacobians[j] * u;
    const HVSplit h = hv_split(F.Gamma().evaluate(xi.head(n), 0), xi.tail(n), ut);
    s.base.push_back(h.base);
    s.covector.push_back(h.covector);
    s.base_rate.push_back((V.evaluate(xi, true).jacobian * ut).head(n));
  }
  return s;
}

/**
 * Integrated product rule along the trajectory from ξ, with θ̃ the transport of the split of
 * φ_{t*} w and ū the base of φ_{t*} u:
 *   | ⟨θ̃(1), ū(1)⟩ − ⟨θ̃(0), ū(0)⟩ − ∫₀¹ (⟨∇̃θ̃, ū⟩ + ⟨θ̃, ∇̄ū⟩) dt |.
 * ∇̃θ̃ is the transport source; ∇̄ū = dū/dt + connection term. Converges at the RK4/Simpson rate.
 */
inline double product_rule_residual(const FieldBundle& F, const Vec& xi, const Vec& u, const Vec& w, int m) {
  const int n = F.dimension();
  const FlowResult fl = flow(F, xi, m, true, {{Vec::Zero(n), w}});
  const SplitPath su = split_along(F, fl, u);
  const SplitPath sw = split_along(F, fl, w);
  const std::vector<double> wts = simpson_weights(m);
  double integral = 0.0;
  for (int j = 0; j <= m; ++j) {
    const Vec& s = fl.states[j];
    const Vec x = s.head(n);
    const Vec a = s.tail(n);
    const Vec& th = fl.transports[0][j];
    const Vec bar = su.base_rate[j] + bar_connection_term(F.poisson.evaluate(x, 1), F.Gamma().evaluate(x, 0), a, su.base[j]);
    integral += wts[j] * (sw.covector[j].dot(su.base[j]) + th.dot(bar));
  }
  const double boundary = fl.transports[0][m].dot(su.base[m]) - fl.transports[0][0].dot(su.base[0]);
  return std::abs(boundary - integral);
}

/**
 * max over grid nodes of |∇̄_{a_t} ū_t − Π^#(θ_{u_t})|, with dū/dt from a five-point finite
 * difference of the grid values (one-sided stencils near the ends).
 */
inline double base_transport_residual(const FieldBundle& F, const Vec& xi, const Vec& u, int m) {
  const int n = F.dimension();
  const FlowResult fl = flow(F, xi, m, true);
  const SplitPath su = split_along(F, fl, u);
  const double h = 1.0 / m;
  auto rate = [&](int j) -> Vec {
    const auto& v = su.base;
    if (j >= 2 && j <= m - 2) return (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / (12.0 * h);
    if (j < 2) {
      const double shift[2][5] = {{-25, 48, -36, 16, -3}, {-3, -10, 18, -6, 1}};
      Vec out = Vec::Zero(n);
      for (int i = 0; i < 5; ++i) out += shift[j][i] * v[i];
      return out / (12.0 * h);
    }
    const double shift[2][5] = {{-1, 6, -18, 10, 3}, {3, -16, 36, -48, 25}};
    Vec out = Vec::Zero(n);
    for (int i = 0; i < 5; ++i) out += shift[j - (m - 1)][i] * v[m - 4 + i];
    return out / (12.0 * h);
  };
  double worst = 0.0;
  for (int j = 0; j <= m; ++j) {
    const Vec& s = fl.states[j];
    const Vec x = s.head(n);
    const MatJet P = F.poisson.evaluate(x, 1);
    const Vec lhs = rate(j) + bar_connection_term(P, F.Gamma().evaluate(x, 0), s.tail(n), su.base[j]);
    const Vec rhs = P.value.transpose() * su.covector[j];
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// log₂(e₁ / e₂) from three successive refinements: e₁ = |q(m₁) − q(m₂)|, e₂ = |q(m₂) − q(m₃)|.
inline double empirical_order(double e1, double e2) { return std::log2(e1 / e2); }

}  // namespace pnr
