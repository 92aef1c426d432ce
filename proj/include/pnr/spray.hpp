#pragma once

// Geodesic Poisson spray on T*M and its flow.
//
//   dx^i/dt = Π^{ki}(x) y_k,      dy_k/dt = −Γ̃_k^{ij}(x) y_i y_j = −Γ^i_{kl} Π^{lj} y_i y_j
//
// (the ∂Π part of Γ̃ cancels by antisymmetry). The flow is integrated with classical fixed-step
// RK4 on t_j = j/m together with the variational equation dJ/dt = DV(φ_t ξ) J and optional
// covector transports ∇̃_{a_t} θ̃ = θ_{u_t}.

#include "pnr/connection.hpp"
#include "pnr/fields.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace pnr {

struct SprayEval {
  Vec value;     // V(ξ), 2n
  Mat jacobian;  // DV(ξ), 2n×2n (empty unless requested)
};

/// Field data reused by the transport equations at a stage point.
struct TransportContext {
  ConnectionField::Sample gamma;
  ContravariantCoeffs coeffs;
};

class GeodesicSpray {
 public:
  explicit GeodesicSpray(const FieldBundle& F) : F_(&F) { F.Gamma(); }

  int dimension() const { return F_->dimension(); }
  const Patch& patch() const { return F_->patch; }
  const FieldBundle& bundle() const { return *F_; }

  SprayEval evaluate(const Vec& xi, bool jacobian, TransportContext* ctx = nullptr) const {
    const int n = dimension();
    const Vec x = xi.head(n);
    const Vec y = xi.tail(n);
    const int pi_order = (jacobian || ctx) ? 1 : 0;
    const MatJet P = F_->poisson.evaluate(x, pi_order);
    const ConnectionField::Sample G = F_->connection->evaluate(x, jacobian ? 1 : 0);
    const Mat Gy = contract_upper(G.gamma, y);
    const Vec z = P.value * y;

    SprayEval out;
    out.value.resize(2 * n);
    out.value.head(n) = P.value.transpose() * y;
    out.value.tail(n) = -(Gy * z);
    if (jacobian) {
      Mat& D = out.jacobian;
      D = Mat::Zero(2 * n, 2 * n);
      for (int m = 0; m < n; ++m) {
        D.block(0, m, n, 1) = P.d[m].transpose() * y;
        const Mat dGy = contract_upper(G.dgamma[m], y);
        D.block(n, m, n, 1) = -(dGy * z) - Gy * (P.d[m] * y);
      }
      D.topRightCorner(n, n) = P.value.transpose();
      Mat dy = -(Gy * P.value);
      for (int p = 0; p < n; ++p) dy.col(p) -= G.gamma[p] * z;
      D.bottomRightCorner(n, n) = dy;
    }
    if (ctx) {
      ctx->coeffs = contravariant_coeffs(P, G);
      ctx->gamma = G;
    }
    return out;
  }

  /// π_* target of the spray axiom: (Π^{ki} y_k)_i.
  Vec anchor(const Vec& x, const Vec& y) const { return F_->poisson.evaluate(x, 0).value.transpose() * y; }

 private:
  const FieldBundle* F_;
};

/// (1 − s) V₀ + s V₁ for two sprays on the same patch.
class ConvexSpray {
 public:
  ConvexSpray(const FieldBundle& F0, const FieldBundle& F1, double s) : a_(F0), b_(F1), s_(s) {
    if (F0.dimension() != F1.dimension()) throw InputError("convex spray: dimension mismatch");
  }

  int dimension() const { return a_.dimension(); }
  const Patch& patch() const { return a_.patch(); }

  SprayEval evaluate(const Vec& xi, bool jacobian) const {
    SprayEval e0 = a_.evaluate(xi, jacobian);
    SprayEval e1 = b_.evaluate(xi, jacobian);
    SprayEval out{(1.0 - s_) * e0.value + s_ * e1.value, {}};
    if (jacobian) out.jacobian = (1.0 - s_) * e0.jacobian + s_ * e1.jacobian;
    return out;
  }

  Vec anchor(const Vec& x, const Vec& y) const { return (1.0 - s_) * a_.anchor(x, y) + s_ * b_.anchor(x, y); }

 private:
  GeodesicSpray a_, b_;
  double s_;
};

inline SprayEval spray(const FieldBundle& F, const Vec& xi) {
  require_in_patch(F, xi.head(F.dimension()));
  return GeodesicSpray(F).evaluate(xi, true);
}

struct SprayAxiomResidual {
  double projection = 0.0;  // max |π_* V(ξ) − Π^#(ξ)|
  double dilation = 0.0;    // max |m_{t*} V(ξ) − V(m_t ξ)/t|, t ∈ {0.5, 2}
};

/// Both Poisson-spray properties over a set of points ξ = (x, y).
template <class Spray>
SprayAxiomResidual spray_axioms_residual(const Spray& V, std::span<const Vec> samples) {
  const int n = V.dimension();
  SprayAxiomResidual r;
  for (const Vec& xi : samples) {
    const Vec x = xi.head(n);
    const Vec y = xi.tail(n);
    const Vec v = V.evaluate(xi, false).value;
    r.projection = std::max(r.projection, (v.head(n) - V.anchor(x, y)).cwiseAbs().maxCoeff());
    for (double t : {0.5, 2.0}) {
      Vec pushed = v;
      pushed.tail(n) *= t;  // m_t acts by (x, y) ↦ (x, t y)
      Vec scaled_xi = xi;
      scaled_xi.tail(n) *= t;
      const Vec rhs = V.evaluate(scaled_xi, false).value / t;
      r.dilation = std::max(r.dilation, (pushed - rhs).cwiseAbs().maxCoeff());
    }
  }
  return r;
}

/// Spray-axiom residuals of (1 − s) V_{Π₀} + s V_{Π₁} against Π_s = (1 − s) Π₀ + s Π₁.
inline SprayAxiomResidual convex_spray_residual(const FieldBundle& F0, const FieldBundle& F1, double s,
                                                std::span<const Vec> samples) {
  return spray_axioms_residual(ConvexSpray(F0, F1, s), samples);
}

/// A covector transport register: θ̃(0) = initial, source θ_{u_t} from the split of φ_{t*} u.
struct Transport {
  Vec initial;
  Vec tangent;  // u ∈ T_ξ(T*M)
};

struct FlowResult {
  int steps = 0;
  std::vector<Vec> states;                  // ξ(t_j)
  std::vector<Mat> jacobians;               // J(t_j), empty without jacobian
  std::vector<std::vector<Vec>> transports;  // transports[r][j] = θ̃_r(t_j)

  double h() const { return 1.0 / steps; }
};

namespace detail {

inline void check_state(const Patch& patch, const Vec& x, const Vec& x0, const Vec& xi, double t) {
  if (!xi.allFinite()) throw FlowEscapeError(t, "non-finite state");
  if (!patch.in_box(x)) throw FlowEscapeError(t, "left the patch box");
  for (int i : patch.excluded)
    if (x(i) == 0.0 || std::signbit(x(i)) != std::signbit(x0(i)))
      throw FlowEscapeError(t, "crossed an excluded hyperplane");
}

}  // namespace detail

/**
 * RK4 flow of V from ξ over [0, 1] with m steps.
 * With transports, V must be a GeodesicSpray and `with_jacobian` must be set.
 */
template <class Spray>
FlowResult flow(const Spray& V, const Vec& xi0, int m, bool with_jacobian,
                const std::vector<Transport>& transports = {}) {
  if (m < 10) throw InputError("flow needs at least 10 steps");
  const int n = V.dimension();
  const int d = 2 * n;
  if (xi0.size() != d) throw InputError("state dimension mismatch");
  const bool transporting = !transports.empty();
  if (transporting && !with_jacobian) throw InputError("transports need the variational equation");
  const Vec x0 = xi0.head(n);
  if (!V.patch().contains(x0)) throw DomainError("initial point outside the patch");

  struct State {
    Vec xi;
    Mat J;
    std::vector<Vec> th;
  };
  struct Deriv {
    Vec xi;
    Mat J;
    std::vector<Vec> th;
  };

  auto rhs = [&](const State& s) {
    Deriv k;
    if constexpr (requires(TransportContext* c) { V.evaluate(s.xi, true, c); }) {
      TransportContext ctx;
      SprayEval e = V.evaluate(s.xi, with_jacobian, transporting ? &ctx : nullptr);
      k.xi = std::move(e.value);
      if (with_jacobian) k.J = e.jacobian * s.J;
      if (transporting) {
        const Vec y = s.xi.tail(n);
        const Mat Gy = contract_upper(ctx.gamma.gamma, y);
        k.th.resize(transports.size());
        for (std::size_t r = 0; r < transports.size(); ++r) {
          const Vec u = s.J * transports[r].tangent;
          const Vec theta = u.tail(n) - Gy * u.head(n);
          k.th[r] = theta - tilde_connection_term(ctx.coeffs, y, s.th[r]);
        }
      }
    } else {
      if (transporting) throw InputError("transports require a geodesic spray");
      SprayEval e = V.evaluate(s.xi, with_jacobian);
      k.xi = std::move(e.value);
      if (with_jacobian) k.J = e.jacobian * s.J;
    }
    return k;
  };

  auto axpy = [&](const State& s, double a, const Deriv& k) {
    State r;
    r.xi = s.xi + a * k.xi;
    if (with_jacobian) r.J = s.J + a * k.J;
    r.th.resize(s.th.size());
    for (std::size_t i = 0; i < s.th.size(); ++i) r.th[i] = s.th[i] + a * k.th[i];
    return r;
  };

  const double h = 1.0 / m;
  FlowResult out;
  out.steps = m;
  out.states.reserve(m + 1);
  State s;
  s.xi = xi0;
  if (with_jacobian) s.J = Mat::Identity(d, d);
  for (const Transport& t : transports) {
    if (t.initial.size() != n || t.tangent.size() != d) throw InputError("transport register dimension mismatch");
    s.th.push_back(t.initial);
  }
  out.transports.assign(transports.size(), {});

  auto record = [&](const State& st) {
    out.states.push_back(st.xi);
    if (with_jacobian) out.jacobians.push_back(st.J);
    for (std::size_t r = 0; r < st.th.size(); ++r) out.transports[r].push_back(st.th[r]);
  };
  record(s);

  for (int j = 0; j < m; ++j) {
    const double t = j * h;
    const Deriv k1 = rhs(s);
    const State s2 = axpy(s, 0.5 * h, k1);
    detail::check_state(V.patch(), s2.xi.head(n), x0, s2.xi, t + 0.5 * h);
    const Deriv k2 = rhs(s2);
    const State s3 = axpy(s, 0.5 * h, k2);
    detail::check_state(V.patch(), s3.xi.head(n), x0, s3.xi, t + 0.5 * h);
    const Deriv k3 = rhs(s3);
    const State s4 = axpy(s, h, k3);
    detail::check_state(V.patch(), s4.xi.head(n), x0, s4.xi, t + h);
    const Deriv k4 = rhs(s4);

    s.xi += (h / 6.0) * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi);
    if (with_jacobian) s.J += (h / 6.0) * (k1.J + 2.0 * k2.J + 2.0 * k3.J + k4.J);
    for (std::size_t r = 0; r < s.th.size(); ++r)
      s.th[r] += (h / 6.0) * (k1.th[r] + 2.0 * k2.th[r] + 2.0 * k3.th[r] + k4.th[r]);
    detail::check_state(V.patch(), s.xi.head(n), x0, s.xi, t + h);
    record(s);
  }
  return out;
}

inline FlowResult flow(const FieldBundle& F, const Vec& xi0, int m, bool with_jacobian,
                       const std::vector<Transport>& transports = {}) {
  return flow(GeodesicSpray(F), xi0, m, with_jacobian, transports);
}

}  // namespace pnr
