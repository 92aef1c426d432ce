#include "pnr/catalog.hpp"
#include "pnr/realization.hpp"

#include <gtest/gtest.h>

using namespace pnr;

namespace {

Vec state(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) out(i++) = a;
  return out;
}

Vec dq3_state() { return state({1.05, 0.95, 1.1, 0.2, -0.15, 0.1}); }

Vec f0_state() { return state({1.05, 0.95, 1.1, 0.1, -0.05, 0.02, 0.15, -0.1, 0.12, 0.1, -0.08, 0.05}); }

}  // namespace

TEST(Simpson, WeightsAreExactOnCubics) {
  const auto w = simpson_weights(10);
  double s0 = 0.0, s3 = 0.0;
  for (int j = 0; j <= 10; ++j) {
    const double t = j / 10.0;
    s0 += w[j];
    s3 += w[j] * t * t * t;
  }
  EXPECT_NEAR(s0, 1.0, 1e-15);
  EXPECT_NEAR(s3, 0.25, 1e-15);
  EXPECT_THROW(simpson_weights(9), InputError);
}

TEST(Realized, ConstantStructureHasClosedForm) {
  const FieldBundle F = constant_symplectic(2).bundle;
  const Mat P = F.poisson.evaluate(Vec::Zero(2), 0).value;
  Mat expect = omega_can(2);
  expect.bottomRightCorner(2, 2) = P.transpose();
  for (const Vec& xi : {state({0.1, -0.2, 0.3, 0.4}), state({0.0, 0.0, 0.0, 0.0})})
    EXPECT_LT(max_abs(realized_form(F, xi, 0, 20).matrix - expect), 1e-14);
}

TEST(Realized, ZeroPoissonGivesCanonicalForm) {
  const FieldBundle F = zero_poisson(2).bundle;
  EXPECT_LT(max_abs(realized_form(F, state({0.3, 0.1, -0.4, 0.2}), 0, 20).matrix - omega_can(2)), 1e-15);
}

TEST(Realized, IdentityNGivesEqualForms) {
  const FieldBundle F = identity_N(2).bundle;
  const Vec xi = state({1.1, 0.9, 0.3, -0.2});
  const int ks[] = {0, 1};
  const auto W = realized_forms(F, xi, ks, 100);
  EXPECT_LT(max_abs(W[0].matrix - W[1].matrix), 1e-14);
  EXPECT_EQ(W[1].k, 1);
  EXPECT_EQ(W[1].steps, 100);
  EXPECT_EQ(W[1].rule, "simpson");
}

TEST(Realized, RejectsUnsupportedPowers) {
  const FieldBundle F = diagonal_quadratic_2d().bundle;
  EXPECT_THROW(realized_form(F, state({1.0, 1.0, 0.1, 0.1}), 3, 20), InputError);
  EXPECT_THROW(realized_form(F, state({1.0, 1.0, 0.1, 0.1}), 0, 21), InputError);
}

TEST(Realized, ZeroSectionFormulas) {
  for (const char* name : {"diagonal-quadratic-3", "toda-volterra", "toda-volterra-f0"}) {
    const FieldBundle F = catalog_entry(name).bundle;
    for (const Vec& x : sample_points(F, 3, 5))
      for (int k : {0, 1}) EXPECT_LT(zero_section_formula_residual(F, x, k, 50), 1e-13) << name << " k=" << k;
  }
}

TEST(Realized, AgreesWithBoundaryTermFormula) {
  for (const char* name : {"diagonal-quadratic-3", "toda-volterra-f0"}) {
    const FieldBundle F = catalog_entry(name).bundle;
    const Vec xi = F.dimension() == 3 ? dq3_state() : f0_state();
    const int d = static_cast<int>(xi.size());
    const Vec u = Vec::LinSpaced(d, -1.0, 1.0);
    Vec w = Vec::LinSpaced(d, 0.5, -0.3);
    w(0) = 2.0;
    for (int k : {0, 1}) {
      const double quad = form_apply(realized_form(F, xi, k, 200).matrix, u, w);
      const double bt = boundary_term_form(F, xi, u, w, k, 200);
      EXPECT_GT(std::abs(quad), 1e-3);
      EXPECT_NEAR(quad, bt, 1e-9) << name << " k=" << k;
    }
  }
  EXPECT_THROW(boundary_term_form(diagonal_quadratic_2d().bundle, state({1, 1, 0, 0}), Vec::Ones(4), Vec::Ones(4), 2),
               InputError);
}

TEST(Realized, FormsAreClosed) {
  const FieldBundle F = diagonal_quadratic_3d().bundle;
  const int ks[] = {0, 1, -1};
  for (double r : closedness_residuals(F, dq3_state(), ks, 1e-4, 100)) EXPECT_LT(r, 1e-7);
  // a non-closed control: ω_can with an x-dependent coefficient
  auto bent = [](const Vec& p) {
    Mat W = omega_can(2);
    W(3, 0) = 1.0 + p(1);
    W(0, 3) = -W(3, 0);
    return W;
  };
  EXPECT_GT(closedness_residual(bent, state({0.1, 0.2, 0.3, 0.4}), 1e-4), 0.5);
}

TEST(Realized, NondegeneracyReport) {
  const Nondegeneracy a = nondegeneracy_report(omega_can(3));
  EXPECT_TRUE(a.pass);
  EXPECT_NEAR(a.min_singular, 1.0, 1e-15);
  EXPECT_NEAR(a.condition, 1.0, 1e-15);
  const Nondegeneracy b = nondegeneracy_report(Mat::Zero(4, 4));
  EXPECT_FALSE(b.pass);
  EXPECT_TRUE(std::isinf(b.condition));
  EXPECT_THROW(projected_bivector(Mat::Zero(4, 4)), DomainError);
}

TEST(Realized, PoissonMapsAcrossTheHierarchy) {
  for (const char* name : {"diagonal-quadratic-2", "diagonal-quadratic-3", "toda-volterra-f0"}) {
    const FieldBundle F = catalog_entry(name).bundle;
    const int n = F.dimension();
    const Vec x = sample_points(F, 1, 6).front();
    const Vec y = Vec::LinSpaced(n, -0.1, 0.12);
    for (int k : {-1, 0, 1, 2}) EXPECT_LT(poisson_map_residual(F, x, y, k, 200), 1e-8) << name << " k=" << k;
  }
}

TEST(Realized, RecursionOperatorAndOmegaTwo) {
  const FieldBundle F = diagonal_quadratic_3d().bundle;
  const Vec xi = dq3_state();
  const RecursionOperator R = recursion_operator(F, xi, 100);
  EXPECT_LT(R.torsion, 1e-6);
  const int ks[] = {0, 1};
  const auto W = realized_forms(F, xi, ks, 100);
  EXPECT_LT(max_abs(W[0].matrix * R.R - W[1].matrix), 1e-12);
  EXPECT_LT(omega2_identity_residual(F, xi, 100), 1e-9);
  EXPECT_LT(omega2_closedness_residual(F, xi, 1e-4, 100), 1e-6);
}

TEST(Realized, RecursionNeedsNondegenerateOmegaZero) {
  EXPECT_THROW(recursion_from_forms(Mat::Zero(2, 2), Mat::Identity(2, 2)), DomainError);
}

TEST(PathIdentities, ProductRuleConvergesAtFourthOrder) {
  const FieldBundle F = diagonal_quadratic_3d().bundle;
  Vec xi = dq3_state();
  xi.tail(3) *= 2.0;
  const Vec u = Vec::LinSpaced(6, -1.0, 1.0), w = Vec::LinSpaced(6, 0.7, -0.4);
  const double e1 = product_rule_residual(F, xi, u, w, 20);
  const double e2 = product_rule_residual(F, xi, u, w, 40);
  EXPECT_LT(e2, 1e-8);
  EXPECT_GT(empirical_order(e1, e2), 3.5);
}

TEST(PathIdentities, BaseTransportEquation) {
  const FieldBundle F = toda_volterra_f0().bundle;
  const Vec xi = f0_state();
  const Vec u = Vec::LinSpaced(12, -1.0, 1.0);
  const double e1 = base_transport_residual(F, xi, u, 50);
  const double e2 = base_transport_residual(F, xi, u, 100);
  EXPECT_LT(e2, 1e-7);
  EXPECT_GT(empirical_order(e1, e2), 3.0);
}
