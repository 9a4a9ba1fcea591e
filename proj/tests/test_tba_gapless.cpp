#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "tdgge/tba_gapless.hpp"

using namespace tdgge;

namespace {

double tau_at(double delta, int k) { return tau_for_gamma(delta, pi / k, threshold_tau(delta) + 1e-9, 3.0); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::NotSupported;
}

double weight(const TbaStateGapless& st, int j) { return st.grid.integrate(st.rho.row(j).transpose()); }

}  // namespace

class GaplessSolve : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    p_ = derive_params(2.5, tau_at(2.5, GetParam()));
    st_ = std::make_unique<TbaStateGapless>(solve_gapless(p_, 1024, 20.0));
  }
  DerivedParams p_;
  std::unique_ptr<TbaStateGapless> st_;
};

TEST_P(GaplessSolve, FillingSumRule) {
  EXPECT_LT(std::abs(st_->sum_rule()), 1e-3);
  EXPECT_LT(std::abs(st_->sum_rule()), 1e-9);
}

TEST_P(GaplessSolve, NonNegativeAndHoles) {
  EXPECT_GE(st_->rho.minCoeff(), -1e-10);
  EXPECT_GE(st_->rho_h.minCoeff(), -1e-10);
  EXPECT_LT((st_->rho_h - st_->eta.cwiseProduct(st_->rho)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(st_->eta_imag_residue, 1e-7);
}

TEST_P(GaplessSolve, TailsDecay) {
  const int N = st_->grid.size();
  for (int j = 0; j < st_->size(); ++j) {
    EXPECT_LT(std::abs(st_->rho(j, 0)), 1e-10);
    EXPECT_LT(std::abs(st_->rho(j, N - 1)), 1e-10);
  }
}

// first Nb-2 densities even; last pair: rho^h_{Nb}(l) = rho_{Nb-1}(-l) and vice versa
TEST_P(GaplessSolve, ReflectionStructure) {
  const int N = st_->grid.size(), nb = st_->size();
  for (int i = 0; i < N; ++i) {
    const int m = N - 1 - i;
    for (int j = 0; j < nb - 2; ++j) EXPECT_NEAR(st_->rho(j, i), st_->rho(j, m), 1e-12);
    EXPECT_NEAR(st_->rho_h(nb - 1, i), st_->rho(nb - 2, m), 1e-12);
    EXPECT_NEAR(st_->rho_h(nb - 2, i), st_->rho(nb - 1, m), 1e-12);
  }
}

// pi/4 has a narrow (1,-) feature: weights settle only near N = 2048
TEST_P(GaplessSolve, GridRefinement) {
  const auto coarse = solve_gapless(p_, 512, 20.0), fine = solve_gapless(p_, 2048, 20.0);
  double d1 = 0, d2 = 0;
  for (int j = 0; j < st_->size(); ++j) {
    d1 = std::max(d1, std::abs(weight(coarse, j) - weight(*st_, j)));
    d2 = std::max(d2, std::abs(weight(*st_, j) - weight(fine, j)));
  }
  EXPECT_LT(d2, 1e-5);
  EXPECT_TRUE(d2 < 0.1 * d1 || d2 < 1e-12) << d1 << " " << d2;
}

TEST_P(GaplessSolve, InitialGuessIndependent) {
  GaplessSolveOptions o;
  o.guess_from_driving = true;
  const auto b = solve_gapless(p_, 1024, 20.0, o);
  EXPECT_LT((b.rho - st_->rho).cwiseAbs().maxCoeff(), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Roots, GaplessSolve, ::testing::Values(3, 4));

TEST(GaplessSolveProperty, DenseAgreesWithKrylov) {
  const auto p = derive_params(2.5, tau_at(2.5, 3));
  GaplessSolveOptions o;
  o.method = LinearMethod::Dense;
  const auto a = solve_gapless(p, 128, 12.0), b = solve_gapless(p, 128, 12.0, o);
  EXPECT_LT((a.rho - b.rho).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GaplessSolveProperty, CutoffLadder) {
  const auto p = derive_params(2.5, tau_at(2.5, 3));
  double prev = 1.0;
  for (double c : {2.0, 4.0, 6.0, 8.0}) {
    const double s = std::abs(solve_gapless(p, 1024, c).sum_rule());
    EXPECT_LT(s, 0.5 * prev) << "cutoff " << c;
    prev = s;
  }
}

TEST(GaplessSolveProperty, OtherRoots) {
  for (auto [n1, n2] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{4, 1}}) {
    const RootOfUnityPoint r{n1, n2};
    const auto p = derive_params(2.5, tau_for_gamma(2.5, r.gamma(), threshold_tau(2.5) + 1e-9, 3.0));
    const auto st = solve_gapless(p, 1024, 20.0);
    EXPECT_LT(std::abs(st.sum_rule()), 1e-6) << n1 << "," << n2;
  }
}

// with (nu1, -) as the last string the densities no longer fill the Neel state
TEST(GaplessSolveProperty, LastParityMinusBreaksFilling) {
  const auto p = derive_params(2.5, tau_at(2.5, 3));
  const auto r = *detect_root_of_unity(p.gamma.real());
  const EtaFamilyGapless fam(r, p);
  const auto g = solver_grid(Domain::TruncatedLine, 512, 20.0);
  const Eigen::MatrixXd eta = fam.sample(g);
  auto t = build_string_table(r);
  t.entries.back().upsilon = -1;
  try {
    const auto st = solve_rho_gapless_sampled(eta, t, p, g);
    EXPECT_GT(std::abs(st.sum_rule()), 0.05);
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::NegativeDensity || e.code() == ErrorCode::NoConvergence);
  }
}

TEST(GaplessSolveErrors, Codes) {
  const auto p = derive_params(2.5, tau_at(2.5, 3));
  EXPECT_EQ(code_of([] { solve_gapless(derive_params(3.0, 0.4)); }), ErrorCode::InvalidArgument);
  const auto q = derive_params(2.5, tau_for_gamma(2.5, 1.0, threshold_tau(2.5) + 1e-9, 3.0));
  EXPECT_EQ(code_of([&] { solve_gapless(q); }), ErrorCode::UnsupportedRoot);
  const auto r = *detect_root_of_unity(p.gamma.real());
  const EtaFamilyGapless fam(r, p);
  const auto t = build_string_table(r);
  EXPECT_EQ(code_of([&] { solve_rho_gapless(fam, t, solver_grid(Domain::PeriodicBrillouin, 64)); }),
            ErrorCode::GridMismatch);
  const auto g = solver_grid(Domain::TruncatedLine, 64, 10.0);
  EXPECT_EQ(code_of([&] { solve_rho_gapless_sampled(Eigen::MatrixXd::Zero(2, 64), t, p, g); }),
            ErrorCode::GridMismatch);
  GaplessSolveOptions o;
  o.max_iter = 1;
  o.tol = 1e-16;
  o.method = LinearMethod::Krylov;
  EXPECT_NO_THROW(solve_rho_gapless(fam, t, g, o));  // small systems fall back to a dense solve
}
