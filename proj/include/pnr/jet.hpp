#pragma once

#include <Eigen/Dense>

#include <cassert>

namespace pnr {

/// Largest coordinate dimension supported by jets; storage lives inline, no heap traffic.
inline constexpr int kMaxDim = 8;

using JetVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using JetMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/**
 * Truncated Taylor jet of a scalar function of n coordinates: value, gradient and Hessian.
 *
 * `order` selects how much is carried (0: value, 1: + gradient, 2: + Hessian); the unused
 * parts are left empty. Arithmetic is exact for rational functions up to round-off.
 */
struct Jet2 {
  double value = 0.0;
  JetVector gradient;
  JetMatrix hessian;
  int order = 2;

  static Jet2 constant(double c, int n, int order = 2) {
    Jet2 j;
    j.value = c;
    j.order = order;
    if (order >= 1) j.gradient = JetVector::Zero(n);
    if (order >= 2) j.hessian = JetMatrix::Zero(n, n);
    return j;
  }

  static Jet2 variable(int index, double v, int n, int order = 2) {
    Jet2 j = constant(v, n, order);
    if (order >= 1) j.gradient(index) = 1.0;
    return j;
  }

  int dimension() const { return static_cast<int>(gradient.size()); }
};

inline Jet2 operator-(const Jet2& a) {
  Jet2 r = a;
  r.value = -a.value;
  if (a.order >= 1) r.gradient = -a.gradient;
  if (a.order >= 2) r.hessian = -a.hessian;
  return r;
}

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  assert(a.order == b.order);
  Jet2 r;
  r.order = a.order;
  r.value = a.value + b.value;
  if (a.order >= 1) r.gradient = a.gradient + b.gradient;
  if (a.order >= 2) r.hessian = a.hessian + b.hessian;
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  assert(a.order == b.order);
  Jet2 r;
  r.order = a.order;
  r.value = a.value - b.value;
  if (a.order >= 1) r.gradient = a.gradient - b.gradient;
  if (a.order >= 2) r.hessian = a.hessian - b.hessian;
  return r;
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  assert(a.order == b.order);
  Jet2 r;
  r.order = a.order;
  r.value = a.value * b.value;
  if (a.order >= 1) r.gradient = b.value * a.gradient + a.value * b.gradient;
  if (a.order >= 2) {
    // a_k b_l + b_k a_l is symmetric bit-for-bit since both summands commute.
    r.hessian = b.value * a.hessian + a.value * b.hessian + a.gradient * b.gradient.transpose() +
                b.gradient * a.gradient.transpose();
  }
  return r;
}

/// 1/b; the caller guarantees b.value != 0.
inline Jet2 reciprocal(const Jet2& b) {
  Jet2 r;
  r.order = b.order;
  const double inv = 1.0 / b.value;
  r.value = inv;
  if (b.order >= 1) r.gradient = -(inv * inv) * b.gradient;
  if (b.order >= 2) {
    r.hessian = -(inv * inv) * b.hessian + (2.0 * inv * inv * inv) * (b.gradient * b.gradient.transpose());
  }
  return r;
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

/// a^p for a non-negative integer p.
inline Jet2 pow(const Jet2& a, int p) {
  assert(p >= 0);
  const int n = a.order >= 1 ? a.dimension() : 0;
  if (p == 0) return Jet2::constant(1.0, n, a.order);
  if (p == 1) return a;
  Jet2 r;
  r.order = a.order;
  const double vpm1 = std::pow(a.value, p - 1);
  r.value = vpm1 * a.value;
  if (a.order >= 1) r.gradient = (p * vpm1) * a.gradient;
  if (a.order >= 2) {
    const double vpm2 = p >= 2 ? std::pow(a.value, p - 2) : 0.0;
    r.hessian = (p * vpm1) * a.hessian + (p * (p - 1) * vpm2) * (a.gradient * a.gradient.transpose());
  }
  return r;
}

}  // namespace pnr
