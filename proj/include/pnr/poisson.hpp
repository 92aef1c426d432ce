#pragma once

// Pointwise Poisson–Nijenhuis algebra: Schouten bracket of bivectors, Nijenhuis torsion,
// the intertwining N Π = Π Nᵀ, the Magri–Morosi concomitant, the hierarchy N^k Π and the
// Koszul bracket of 1-forms.
//
// Convention: Π^#(α) = Π^{ij} α_i ∂_j, so Π(α, β) = Π^{ij} α_i β_j and Π^#(dx^i) = Π^{ij} ∂_j.

#include "pnr/fields.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace pnr {

/// Fully antisymmetric 3-tensor; only the components with i < j < k are stored.
class Trivector {
 public:
  explicit Trivector(int n) : n_(n), data_(n * n * n, 0.0) {}

  int dimension() const { return n_; }

  double operator()(int i, int j, int k) const {
    if (i == j || j == k || i == k) return 0.0;
    int sign = 1;
    // sort three indices, tracking the permutation parity
    if (i > j) std::swap(i, j), sign = -sign;
    if (j > k) std::swap(j, k), sign = -sign;
    if (i > j) std::swap(i, j), sign = -sign;
    return sign * data_[(i * n_ + j) * n_ + k];
  }

  void set_sorted(int i, int j, int k, double v) { data_[(i * n_ + j) * n_ + k] = v; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int n_;
  std::vector<double> data_;
};

/// T^i_{jk}, antisymmetric in (j, k); stored for j < k.
class SkewTensor3 {
 public:
  explicit SkewTensor3(int n) : n_(n), data_(n * n * n, 0.0) {}

  int dimension() const { return n_; }

  double operator()(int i, int j, int k) const {
    if (j == k) return 0.0;
    return j < k ? data_[(i * n_ + j) * n_ + k] : -data_[(i * n_ + k) * n_ + j];
  }

  void set(int i, int j, int k, double v) {
    if (j < k)
      data_[(i * n_ + j) * n_ + k] = v;
    else if (k < j)
      data_[(i * n_ + k) * n_ + j] = -v;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int n_;
  std::vector<double> data_;
};

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// [P, Q]^{ijk} = Σ_l (P^{li} ∂_l Q^{jk} + Q^{li} ∂_l P^{jk}) + cyclic(i, j, k).
inline Trivector schouten_bracket(const MatJet& P, const MatJet& Q) {
  const int n = static_cast<int>(P.value.rows());
  if (Q.value.rows() != n) throw InputError("Schouten bracket: dimension mismatch");
  if (static_cast<int>(P.d.size()) != n || static_cast<int>(Q.d.size()) != n)
    throw InputError("Schouten bracket needs first derivatives");
  auto term = [&](int i, int j, int k) {
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += P.value(l, i) * Q.d[l](j, k) + Q.value(l, i) * P.d[l](j, k);
    return s;
  };
  Trivector out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) out.set_sorted(i, j, k, term(i, j, k) + term(j, k, i) + term(k, i, j));
  return out;
}

inline Trivector schouten_bracket(const BivectorField& P, const BivectorField& Q, const Vec& x) {
  if (P.dimension() != Q.dimension()) throw InputError("Schouten bracket: dimension mismatch");
  return schouten_bracket(P.evaluate(x, 1), Q.evaluate(x, 1));
}

/// T(N)(∂_j, ∂_k)^i = ν^l_j ∂_l ν^i_k − ν^l_k ∂_l ν^i_j − ν^i_l (∂_j ν^l_k − ∂_k ν^l_j).
inline SkewTensor3 nijenhuis_torsion(const MatJet& N) {
  const int n = static_cast<int>(N.value.rows());
  SkewTensor3 T(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          s += N.value(l, j) * N.d[l](i, k) - N.value(l, k) * N.d[l](i, j);
          s -= N.value(i, l) * (N.d[j](l, k) - N.d[k](l, j));
        }
        T.set(i, j, k, s);
      }
  return T;
}

inline SkewTensor3 nijenhuis_torsion(const EndomorphismField& N, const Vec& x) {
  return nijenhuis_torsion(N.evaluate(x, 1));
}

/// N Π − Π Nᵀ; vanishes iff N∘Π^# = Π^#∘ᵗN at the point.
inline Mat intertwine_residual(const Mat& Pi, const Mat& N) { return N * Pi - Pi * N.transpose(); }

inline Mat intertwine_residual(const BivectorField& Pi, const EndomorphismField& N, const Vec& x) {
  return intertwine_residual(Pi.evaluate(x, 0).value, N.evaluate(x, 0).value);
}

/**
 * Magri–Morosi concomitant on coordinate coframes.
 *
 * Returns C with C(k, i, j) = C(Π, N)(dx^i, dx^j)_k, where
 *   C(α, β) = (L_{Π^#α} ᵗN) β − (L_{Π^#β} ᵗN) α + ᵗN d(Π(α, β)) − d(Π₁(α, β)),  Π₁ = Π Nᵀ.
 * For flat α = dx^i and X = Π^#(dx^i):
 *   ((L_X ᵗN) dx^j)_k = X^l ∂_l ν^j_k + ν^j_m ∂_k X^m − ν^m_k ∂_m X^j.
 */
inline SkewTensor3 concomitant(const MatJet& Pi, const MatJet& N) {
  const int n = static_cast<int>(Pi.value.rows());
  auto lie_tN = [&](int i, int j, int k) {
    // X^m = Π^{im}
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += Pi.value(i, l) * N.d[l](j, k);
    for (int m = 0; m < n; ++m) s += N.value(j, m) * Pi.d[k](i, m) - N.value(m, k) * Pi.d[m](i, j);
    return s;
  };
  SkewTensor3 C(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double s = lie_tN(i, j, k) - lie_tN(j, i, k);
        for (int m = 0; m < n; ++m) {
          s += N.value(m, k) * Pi.d[m](i, j);
          s -= Pi.d[k](i, m) * N.value(j, m) + Pi.value(i, m) * N.d[k](j, m);
        }
        C.set(k, i, j, s);
      }
  return C;
}

inline SkewTensor3 concomitant(const BivectorField& Pi, const EndomorphismField& N, const Vec& x) {
  return concomitant(Pi.evaluate(x, 1), N.evaluate(x, 1));
}

/// Smallest singular value of a square matrix.
inline double min_singular_value(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline constexpr double kSingularThreshold = 1e-10;

/// N(x)^k Π(x) together with its first derivatives. k < 0 requires N invertible.
inline MatJet hierarchy_jet(const MatJet& Pi, const MatJet& N, int k) {
  const int n = static_cast<int>(Pi.value.rows());
  const bool with_d = !Pi.d.empty() && !N.d.empty();
  MatJet step;  // N or N^{-1}
  if (k >= 0) {
    step = N;
  } else {
    if (min_singular_value(N.value) < kSingularThreshold) throw DomainError("N is singular; negative hierarchy undefined");
    step.value = N.value.inverse();
    if (with_d) {
      step.d.resize(n);
      for (int m = 0; m < n; ++m) step.d[m] = -step.value * N.d[m] * step.value;
    }
  }
  MatJet out;
  out.value = Pi.value;
  if (with_d) out.d = Pi.d;
  for (int s = 0; s < std::abs(k); ++s) {
    if (with_d)
      for (int m = 0; m < n; ++m) out.d[m] = step.d[m] * out.value + step.value * out.d[m];
    out.value = step.value * out.value;
  }
  return out;
}

struct HierarchyValue {
  Mat value;          // antisymmetrized N^k Π
  double asymmetry;   // max |M + Mᵀ| / 2 before antisymmetrization
  double condition;   // condition number of N (inf when not computed)
};

inline HierarchyValue hierarchy(const Mat& Pi, const Mat& N, int k) {
  Eigen::JacobiSVD<Mat> svd(N);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (k < 0 && smin < kSingularThreshold) throw DomainError("N is singular; negative hierarchy undefined");
  MatJet P;
  P.value = Pi;
  MatJet NN;
  NN.value = N;
  const Mat M = hierarchy_jet(P, NN, k).value;
  return {0.5 * (M - M.transpose()), 0.5 * max_abs(M + M.transpose()), cond};
}

inline HierarchyValue hierarchy(const BivectorField& Pi, const EndomorphismField& N, int k, const Vec& x) {
  return hierarchy(Pi.evaluate(x, 0).value, N.evaluate(x, 0).value, k);
}

/// Components of a 1-form whose coefficients are expressions.
using OneFormExpr = std::vector<Expr>;

/**
 * Koszul bracket [α, β]_Π = L_{Π^#α} β − L_{Π^#β} α − d(Π(α, β)) at x.
 * (L_X β)_k = X^l ∂_l β_k + β_l ∂_k X^l.
 */
inline Vec one_form_bracket(const BivectorField& Pi, const OneFormExpr& alpha, const OneFormExpr& beta,
                            const Vec& x) {
  const int n = Pi.dimension();
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
    throw InputError("one-form dimension mismatch");
  const MatJet P = Pi.evaluate(x, 1);
  std::vector<Jet2> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(alpha[i].jet(as_span(x), 1));
    b.push_back(beta[i].jet(as_span(x), 1));
  }
  // X = Π^#(form): X^l = Π^{ml} f_m ; ∂_k X^l = ∂_k Π^{ml} f_m + Π^{ml} ∂_k f_m
  auto sharp = [&](const std::vector<Jet2>& f, Vec& X, Mat& dX) {
    X = Vec::Zero(n);
    dX = Mat::Zero(n, n);  // dX(l, k) = ∂_k X^l
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) {
        X(l) += P.value(m, l) * f[m].value;
        for (int k = 0; k < n; ++k) dX(l, k) += P.d[k](m, l) * f[m].value + P.value(m, l) * f[m].gradient(k);
      }
  };
  auto lie = [&](const Vec& X, const Mat& dX, const std::vector<Jet2>& f) {
    Vec out = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) out(k) += X(l) * f[k].gradient(l) + f[l].value * dX(l, k);
    return out;
  };
  Vec Xa, Xb;
  Mat dXa, dXb;
  sharp(a, Xa, dXa);
  sharp(b, Xb, dXb);
  Vec out = lie(Xa, dXa, b) - lie(Xb, dXb, a);
  // d(Π^{ij} a_i b_j)
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s += P.d[k](i, j) * a[i].value * b[j].value + P.value(i, j) * (a[i].gradient(k) * b[j].value +
                                                                        a[i].value * b[j].gradient(k));
    out(k) -= s;
  }
  return out;
}

/**
 * Returns N when |det N| > 1e-8 at every sample, else I + N.
 * Throws when I + N is still degenerate somewhere on the samples.
 */
inline EndomorphismField make_nondegenerate(const EndomorphismField& N, const std::vector<Vec>& samples) {
  constexpr double kDetFloor = 1e-8;
  auto min_det = [&](const EndomorphismField& F) {
    double m = std::numeric_limits<double>::infinity();
    for (const Vec& x : samples) m = std::min(m, std::abs(F.evaluate(x, 0).value.determinant()));
    return m;
  };
  if (min_det(N) > kDetFloor) return N;
  const int n = N.dimension();
  EndomorphismField shifted(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Expr& e = N.at(i, j);
      if (i != j)
        shifted.set(i, j, e);
      else
        shifted.set(i, j, e.is_constant() ? Expr::constant(e.root().constant + 1.0) : Expr::constant(1.0) + e);
    }
  if (min_det(shifted) <= kDetFloor)
    throw DomainError("I + N is degenerate on the samples; use a shift λI + N with a different λ");
  return shifted;
}

}  // namespace pnr
