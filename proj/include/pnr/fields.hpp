#pragma once

// Coordinate tensor fields on a patch: the Poisson bivector, the (1,1) tensor N and the
// torsion-free connection, plus the box domain they live on.

#include "pnr/errors.hpp"
#include "pnr/expr.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace pnr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Matrix-valued field sampled with its partial derivatives: d[k] = ∂_k M, d2[k][l] = ∂_k∂_l M.
struct MatJet {
  Mat value;
  std::vector<Mat> d;
  std::vector<std::vector<Mat>> d2;

  static MatJet zero(int rows, int cols, int n, int order) {
    MatJet m;
    m.value = Mat::Zero(rows, cols);
    if (order >= 1) m.d.assign(n, Mat::Zero(rows, cols));
    if (order >= 2) m.d2.assign(n, std::vector<Mat>(n, Mat::Zero(rows, cols)));
    return m;
  }

  void set(int r, int c, const Jet2& j) {
    value(r, c) = j.value;
    for (std::size_t k = 0; k < d.size(); ++k) d[k](r, c) = j.gradient(k);
    for (std::size_t k = 0; k < d2.size(); ++k)
      for (std::size_t l = 0; l < d2.size(); ++l) d2[k][l](r, c) = j.hessian(k, l);
  }
};

inline std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Axis-aligned box with excluded coordinate hyperplanes {x^i = 0}.
struct Patch {
  Vec center;
  Vec half_widths;
  std::vector<int> excluded;  // 0-based coordinate indices

  int dimension() const { return static_cast<int>(center.size()); }

  bool in_box(const Vec& x) const {
    for (int i = 0; i < dimension(); ++i)
      if (!(std::abs(x(i) - center(i)) <= half_widths(i))) return false;
    return true;
  }

  bool on_excluded(const Vec& x) const {
    for (int i : excluded)
      if (x(i) == 0.0) return true;
    return false;
  }

  bool contains(const Vec& x) const { return in_box(x) && !on_excluded(x); }

  /// Sampling margin: points closer than 0.1 half-width to an excluded hyperplane are rejected.
  bool admissible_sample(const Vec& x) const {
    for (int i : excluded)
      if (std::abs(x(i)) < 0.1 * half_widths(i)) return false;
    return true;
  }
};

/// Π^{ij} stored strictly upper-triangular; Π^{ji} = -Π^{ij} and the diagonal vanish by construction.
class BivectorField {
 public:
  BivectorField() = default;
  explicit BivectorField(int n) : n_(n) {}

  int dimension() const { return n_; }

  void set(int i, int j, Expr e) {
    if (i == j) throw InputError("bivector diagonal entries are identically zero");
    if (i > j) {
      std::swap(i, j);
      e = -e;
    }
    check_index(i);
    check_index(j);
    entries_[{i, j}] = std::move(e);
  }

  const std::map<std::pair<int, int>, Expr>& entries() const { return entries_; }

  MatJet evaluate(const Vec& x, int order) const {
    MatJet m = MatJet::zero(n_, n_, n_, order);
    for (const auto& [ij, e] : entries_) {
      if (e.is_zero()) continue;
      const Jet2 j = e.jet(as_span(x), order);
      m.set(ij.first, ij.second, j);
      m.set(ij.second, ij.first, -j);
    }
    return m;
  }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= n_) throw InputError("bivector index out of range");
  }
  int n_ = 0;
  std::map<std::pair<int, int>, Expr> entries_;
};

/// ν^i_j stored dense; row i = output index, column j = input index.
class EndomorphismField {
 public:
  EndomorphismField() = default;
  explicit EndomorphismField(int n) : n_(n), entries_(n * n) {}

  static EndomorphismField identity(int n) {
    EndomorphismField f(n);
    for (int i = 0; i < n; ++i) f.set(i, i, Expr::constant(1.0));
    return f;
  }

  int dimension() const { return n_; }
  void set(int i, int j, Expr e) { entries_.at(i * n_ + j) = std::move(e); }
  const Expr& at(int i, int j) const { return entries_.at(i * n_ + j); }

  MatJet evaluate(const Vec& x, int order) const {
    MatJet m = MatJet::zero(n_, n_, n_, order);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const Expr& e = at(i, j);
        if (e.is_zero()) continue;
        m.set(i, j, e.jet(as_span(x), order));
      }
    return m;
  }

 private:
  int n_ = 0;
  std::vector<Expr> entries_;
};

/// Γ^k_{ij} stored for i <= j only, so lower-index symmetry holds structurally.
class ConnectionField {
 public:
  ConnectionField() = default;
  explicit ConnectionField(int n) : n_(n) {}

  int dimension() const { return n_; }

  void set(int k, int i, int j, Expr e) {
    if (i > j) std::swap(i, j);
    if (k < 0 || k >= n_ || i < 0 || j >= n_) throw InputError("connection index out of range");
    entries_[{k, i, j}] = std::move(e);
  }

  const std::map<std::tuple<int, int, int>, Expr>& entries() const { return entries_; }

  /// gamma[k](i,j) = Γ^k_{ij}; dgamma[m][k](i,j) = ∂_m Γ^k_{ij}.
  struct Sample {
    std::vector<Mat> gamma;
    std::vector<std::vector<Mat>> dgamma;
  };

  Sample evaluate(const Vec& x, int order) const {
    Sample s;
    s.gamma.assign(n_, Mat::Zero(n_, n_));
    if (order >= 1) s.dgamma.assign(n_, std::vector<Mat>(n_, Mat::Zero(n_, n_)));
    for (const auto& [kij, e] : entries_) {
      if (e.is_zero()) continue;
      const auto [k, i, j] = kij;
      const Jet2 jet = e.jet(as_span(x), std::min(order, 1));
      s.gamma[k](i, j) = jet.value;
      s.gamma[k](j, i) = jet.value;
      if (order >= 1)
        for (int m = 0; m < n_; ++m) {
          s.dgamma[m][k](i, j) = jet.gradient(m);
          s.dgamma[m][k](j, i) = jet.gradient(m);
        }
    }
    return s;
  }

 private:
  int n_ = 0;
  std::map<std::tuple<int, int, int>, Expr> entries_;
};

/// Π, optional N, optional Γ on one coordinate patch.
struct FieldBundle {
  BivectorField poisson;
  std::optional<EndomorphismField> nijenhuis;
  std::optional<ConnectionField> connection;
  Patch patch;

  int dimension() const { return poisson.dimension(); }

  void validate() const {
    const int n = dimension();
    if (n < 1 || n > kMaxDim) throw InputError("dimension must be in 1.." + std::to_string(kMaxDim));
    if (nijenhuis && nijenhuis->dimension() != n) throw InputError("N dimension mismatch");
    if (connection && connection->dimension() != n) throw InputError("connection dimension mismatch");
    if (patch.dimension() != n || patch.half_widths.size() != n) throw InputError("patch dimension mismatch");
    for (int i : patch.excluded)
      if (i < 0 || i >= n) throw InputError("excluded coordinate index out of range");
  }

  const EndomorphismField& N() const {
    if (!nijenhuis) throw InputError("operation requires a Nijenhuis tensor N");
    return *nijenhuis;
  }
  const ConnectionField& Gamma() const {
    if (!connection) throw InputError("operation requires a connection");
    return *connection;
  }
};

/// Dense field arrays at a point. Absent fields are left empty.
struct FieldSample {
  MatJet pi;  // order 2
  std::optional<MatJet> N;
  std::optional<ConnectionField::Sample> gamma;
};

inline void require_in_patch(const FieldBundle& F, const Vec& x) {
  if (!F.patch.in_box(x)) throw DomainError("point outside the patch box");
  if (F.patch.on_excluded(x)) throw DomainError("point on an excluded hyperplane");
}

/// Π with first and second derivatives, N with first derivatives, Γ with first derivatives.
inline FieldSample eval_field(const FieldBundle& F, const Vec& x) {
  require_in_patch(F, x);
  FieldSample s;
  s.pi = F.poisson.evaluate(x, 2);
  if (F.nijenhuis) s.N = F.nijenhuis->evaluate(x, 1);
  if (F.connection) s.gamma = F.connection->evaluate(x, 1);
  return s;
}

/// Portable uniform double in [0,1) from a 64-bit engine (std distributions differ across libraries).
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Seeded uniform samples in the patch box, rejecting points near excluded hyperplanes.
inline std::vector<Vec> sample_points(const Patch& patch, int count, std::uint64_t seed) {
  if (count < 1) throw InputError("sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  out.reserve(count);
  const long max_draws = 1000L * count;
  const int n = patch.dimension();
  for (long draw = 0; draw < max_draws && static_cast<int>(out.size()) < count; ++draw) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = patch.center(i) + (2.0 * uniform01(rng) - 1.0) * patch.half_widths(i);
    if (patch.admissible_sample(x)) out.push_back(std::move(x));
  }
  if (static_cast<int>(out.size()) < count)
    throw DomainError("sampling rejected too many points; the patch is almost entirely excluded");
  return out;
}

inline std::vector<Vec> sample_points(const FieldBundle& F, int count, std::uint64_t seed) {
  return sample_points(F.patch, count, seed);
}

}  // namespace pnr
