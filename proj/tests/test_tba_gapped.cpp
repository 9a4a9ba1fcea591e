#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tdgge/observables.hpp"
#include "tdgge/tba_gapped.hpp"
#include "tdgge/ysystem.hpp"

using namespace tdgge;

namespace {

DerivedParams with_x(DerivedParams p, double x) {
  p.x = cplx(x, 0.0);
  p.shift = x;
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::NotSupported;
}

}  // namespace

TEST(Afrak, ZeroShiftCollapses) {
  const auto p = with_x(derive_params(3.0, 0.4), 0.0);
  const cplx ie = I * p.eta;
  const double l = pi / 4;
  const cplx expect = std::sin(pi / 2 + ie) / std::sin(pi / 2 - ie) * (std::sin(l - ie) / std::sin(l + ie));
  EXPECT_LT(std::abs(afrak(l, p) - expect), 1e-14);
}

TEST(Afrak, Reflection) {
  const auto p = derive_params(3.0, 0.4);
  const auto g = solver_grid(Domain::PeriodicBrillouin, 64);
  for (int k = 0; k < 64; ++k) {
    const cplx l = g.nodes[k];
    EXPECT_LT(std::abs(afrak(-l, p) * afrak(l, p) - 1.0), 1e-12);
  }
}

TEST(Afrak, QtmLimit) {
  const auto p = derive_params(3.0, 0.4);
  // the QTM limit carries the opposite sign of x
  const auto pm = with_x(p, -p.x.real());
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 10; ++i) {
    const double l = u(rng);
    const cplx a = afrak(l, pm), b = afrak_qtm_limit(l, p);
    EXPECT_LT(std::abs(a - b) / std::abs(a), 1e-10) << l;
  }
}

TEST(Eta1, EvenAndReal) {
  const auto p = derive_params(3.0, 0.4);
  const auto g = solver_grid(Domain::PeriodicBrillouin, 128);
  for (int k = 0; k < 128; ++k) {
    const cplx v = eta1(g.nodes[k], p);
    EXPECT_LT(std::abs(v.imag()), 1e-9);
    EXPECT_LT(std::abs(v - eta1(-g.nodes[k], p)), 1e-10);
    EXPECT_GE(v.real(), 0.0);
  }
}

TEST(EtaRecursion, EtaZeroVanishes) {
  EtaFamilyGapped fam(derive_params(3.0, 0.4), 4);
  EXPECT_EQ(fam.eta(0, 0.3), cplx(0.0));
}

TEST(EtaRecursion, EtaTwoMatchesYFunction) {
  const auto p = derive_params(3.0, 1e-4);
  EtaFamilyGapped fam(p, 3);
  const cplx a = fam.eta(2, 0.0), b = eta_gapped_qtm(2, 0.0, p);
  EXPECT_LT(std::abs(a - b) / std::abs(a), 1e-8);
}

TEST(EtaRecursion, NonNegativeOnGrid) {
  const auto g = solver_grid(Domain::PeriodicBrillouin, 64);
  for (double tau : {0.2, 0.8, 1.4}) {
    EtaFamilyGapped fam(derive_params(3.0, tau), 8);
    double imag = 0;
    const auto S = fam.sample(g, &imag);
    EXPECT_LT(imag, 1e-9);
    EXPECT_GE(S.minCoeff(), 0.0) << tau;
    for (int k = 0; k < 64; ++k)
      for (int n = 0; n < 8; ++n) EXPECT_NEAR(S(n, k), S(n, 63 - k), 1e-9 * std::max(1.0, std::abs(S(n, k))));
  }
}

TEST(EtaRecursionProperty, YSystemOnRealAxis) {
  const auto p = derive_params(3.0, 0.4);
  EtaFamilyGapped fam(p, 8);
  const cplx h = 0.5 * I * p.eta;
  const auto g = solver_grid(Domain::PeriodicBrillouin, 32);
  for (int k = 0; k < g.size(); ++k) {
    const double l = g.nodes[k];
    const auto c = fam.evaluate(l), up = fam.evaluate(l + h), dn = fam.evaluate(l - h);
    for (int n = 1; n <= 6; ++n) {
      const cplx lhs = up[n - 1] * dn[n - 1];
      const cplx rhs = (1.0 + c[n]) * (1.0 + (n >= 2 ? c[n - 2] : cplx(0.0)));
      EXPECT_LT(std::abs(lhs - rhs) / std::abs(rhs), 1e-7) << n << " " << l;
    }
  }
}

TEST(EtaRecursion, ShiftedBranchNotSupported) {
  EXPECT_EQ(code_of([] { solve_gapped(derive_params(-3.0, 0.4), 4, 64); }), ErrorCode::NotSupported);
  EXPECT_EQ(code_of([] { EtaFamilyGapped(derive_params(2.5, 2.15), 4); }), ErrorCode::InvalidArgument);
}

class GappedSolve : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { st_ = new TbaStateGapped(solve_gapped(derive_params(3.0, 0.4), 20, 512)); }
  static void TearDownTestSuite() { delete st_; }
  static TbaStateGapped* st_;
};
TbaStateGapped* GappedSolve::st_ = nullptr;

TEST_F(GappedSolve, FillingSumRule) { EXPECT_LT(std::abs(st_->sum_rule()), 2e-4); }

TEST_F(GappedSolve, EvenDensities) {
  const int N = st_->grid.size();
  for (int n = 0; n < st_->n_max; ++n)
    for (int k = 0; k < N; ++k) EXPECT_NEAR(st_->rho(n, k), st_->rho(n, N - 1 - k), 1e-10);
}

TEST_F(GappedSolve, StringWeightsDecrease) {
  // strictly decreasing until the weights reach the roundoff floor
  for (int n = 1; n < st_->n_max && st_->string_weight(n) > 1e-12; ++n)
    EXPECT_LT(st_->string_weight(n + 1), st_->string_weight(n)) << n;
  EXPECT_GT(st_->string_weight(12), 1e-12);
}

TEST_F(GappedSolve, StateInvariants) {
  EXPECT_GE(st_->rho.minCoeff(), -1e-10);
  EXPECT_GE(st_->rho_h.minCoeff(), -1e-10);
  EXPECT_LT((st_->rho_h - st_->eta.cwiseProduct(st_->rho)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(st_->report.residual, 1e-10);
}

TEST(GappedSolveProperty, InitialGuessIndependent) {
  const auto p = derive_params(2.5, 1.5);
  GappedSolveOptions a, b;
  b.guess_from_driving = true;
  const auto s1 = solve_gapped(p, 12, 256, a), s2 = solve_gapped(p, 12, 256, b);
  EXPECT_LT((s1.rho - s2.rho).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(GappedSolveProperty, DenseAgreesWithKrylov) {
  const auto p = derive_params(3.0, 0.9);
  GappedSolveOptions d;
  d.method = LinearMethod::Dense;
  const auto s1 = solve_gapped(p, 6, 128), s2 = solve_gapped(p, 6, 128, d);
  EXPECT_LT((s1.rho - s2.rho).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GappedSolveProperty, TruncationConvergence) {
  const auto p = derive_params(3.0, 0.4);
  const double a = stag_mag_gapped(solve_gapped(p, 20, 512)).staggered;
  const double b = stag_mag_gapped(solve_gapped(p, 30, 512)).staggered;
  EXPECT_LT(std::abs(a - b), 1e-6);
}

TEST(GappedSolveProperty, ZeroShiftLimit) {
  const auto p = derive_params(3.0, 1e-4);
  const auto g = solver_grid(Domain::PeriodicBrillouin, 256);
  const auto s1 = solve_rho_gapped(EtaFamilyGapped(p, 12), g);
  const auto s0 = solve_rho_gapped(EtaFamilyGapped(with_x(p, 0.0), 12), g);
  EXPECT_LT((s1.rho - s0.rho).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GappedSolveProperty, SumRuleShrinksWithNmax) {
  const auto p = derive_params(3.0, 0.4);
  double prev = 1.0;
  for (int n : {2, 4, 8, 16}) {
    const double r = std::abs(solve_gapped(p, n, 256).sum_rule());
    EXPECT_LT(r, 0.5 * prev) << n;
    prev = r;
  }
}

TEST(GappedSolveErrors, Codes) {
  const auto p = derive_params(3.0, 0.4);
  GappedSolveOptions o;
  o.max_iter = 1;
  o.tol = 1e-14;
  EXPECT_EQ(code_of([&] { solve_gapped(p, 10, 256, o); }), ErrorCode::NoConvergence);
  EXPECT_EQ(code_of([&] { solve_rho_gapped(EtaFamilyGapped(p, 3), solver_grid(Domain::TruncatedLine, 64)); }),
            ErrorCode::GridMismatch);
  EXPECT_EQ(code_of([&] { EtaFamilyGapped(p, 0); }), ErrorCode::InvalidArgument);
}
