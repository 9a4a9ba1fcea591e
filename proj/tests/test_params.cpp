#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tdgge/params.hpp"

using namespace tdgge;

namespace {

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

TEST(ThresholdTau, ClosedFormValues) {
  EXPECT_NEAR(threshold_tau(3.0), pi / 2, 1e-15);
  EXPECT_NEAR(threshold_tau(1.0), pi, 1e-15);
  EXPECT_NEAR(threshold_tau(2.5), 1.7952, 1e-4);
  EXPECT_NEAR(threshold_tau(2.5), 2 * pi / 3.5, 1e-15);
}

TEST(ThresholdTau, RejectsDeltaBelowMinusOne) {
  EXPECT_EQ(code_of([] { threshold_tau(-1.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { threshold_tau(-3.0); }), ErrorCode::InvalidArgument);
}

TEST(ThresholdTau, BoundaryEquality) {
  for (double d : {-0.5, 0.3, 1.7, 2.5, 3.0, 6.0}) {
    const double t = threshold_tau(d);
    EXPECT_NEAR(std::abs(std::sin(d * t / 2)), std::abs(std::sin(t / 2)), 1e-12) << d;
  }
}

TEST(DeriveParams, RootOfUnityNearTau215) {
  const auto d = derive_params(2.5, 2.15);
  EXPECT_EQ(d.regime, Regime::Gapless);
  EXPECT_NEAR(d.gamma.real(), pi / 3, 1e-2);
  EXPECT_EQ(d.gamma.imag(), 0.0);
}

TEST(DeriveParams, ZeroDeltaIsHalfPi) {
  const auto d = derive_params(0.0, 1.0);
  EXPECT_DOUBLE_EQ(d.gamma.real(), pi / 2);
  EXPECT_EQ(d.gamma.imag(), 0.0);
  EXPECT_EQ(d.regime, Regime::FreePoint);
}

TEST(DeriveParams, GappedDelta3Tau04) {
  const auto d = derive_params(3.0, 0.4);
  const double s = std::sin(0.6) / std::sin(0.2);
  EXPECT_NEAR(s, 2.842, 1e-3);
  EXPECT_EQ(d.regime, Regime::Gapped);
  EXPECT_NEAR(d.eta, std::acosh(s), 1e-14);
  EXPECT_NEAR(d.gamma.real(), 0.0, 1e-12);
  EXPECT_NEAR(d.gamma.imag(), d.eta, 1e-14);
  EXPECT_NEAR(d.x.imag(), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(d.shift, d.x.real());
  EXPECT_NEAR(d.tau_th, pi / 2, 1e-15);
}

TEST(DeriveParams, ErrorsOnBadInput) {
  EXPECT_EQ(code_of([] { derive_params(2.0, 2 * pi); }), ErrorCode::DegenerateParams);
  EXPECT_EQ(code_of([] { derive_params(2.0, 0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { derive_params(2.0, -1.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { derive_params(ModelParams{2.0, 1.0, 7}); }), ErrorCode::InvalidSize);
  EXPECT_EQ(code_of([] { derive_params(ModelParams{2.0, 1.0, 2}); }), ErrorCode::InvalidSize);
  EXPECT_NO_THROW(derive_params(ModelParams{2.0, 1.0, 8}));
}

TEST(DeriveParams, IsotropicPointTaggedDegenerate) {
  EXPECT_EQ(derive_params(1.0, 0.7).regime, Regime::Degenerate);
}

TEST(DeriveParams, EqualityCaseIsGapless) {
  const auto d = derive_params(3.0, threshold_tau(3.0));
  EXPECT_EQ(d.regime, Regime::Gapless);
  EXPECT_NEAR(d.gamma.real(), 0.0, 1e-7);
}

TEST(DeriveParamsProperty, ResidualsAndRegimeInvariants) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dd(-0.95, 6.0), tt(1e-3, 6.2);
  for (int i = 0; i < 2000; ++i) {
    const double delta = dd(rng), tau = tt(rng);
    if (std::abs(delta - 1.0) < 1e-6) continue;
    const auto d = derive_params(delta, tau);
    const auto [r1, r2] = param_residuals(d);
    EXPECT_LT(r1, 1e-12);
    EXPECT_LT(r2, 1e-12 * std::max(1.0, std::abs(std::tan(tau / 2))));
    const double s = std::sin(delta * tau / 2) / std::sin(tau / 2);
    if (d.regime == Regime::Gapped) {
      EXPECT_GT(std::abs(s), 1.0);
      EXPECT_NEAR(std::remainder(d.gamma.real(), pi), 0.0, 1e-12);
      EXPECT_NEAR(d.x.imag(), 0.0, 1e-12);
      EXPECT_GE(d.eta, 0.0);
    } else {
      EXPECT_LE(std::abs(s), 1.0 + 1e-12);
      EXPECT_EQ(d.gamma.imag(), 0.0);
      EXPECT_NEAR(d.x.real(), 0.0, 1e-12);
      EXPECT_GE(d.gamma.real(), 0.0);
      EXPECT_LE(d.gamma.real(), pi);
      EXPECT_DOUBLE_EQ(d.shift, d.x.imag());
    }
  }
}

TEST(DeriveParamsProperty, ContinuumLimit) {
  for (double delta : {-0.7, 0.0, 0.4, 0.9}) {
    const auto d = derive_params(delta, 1e-6);
    EXPECT_NEAR(d.gamma.real(), std::acos(delta), 1e-5) << delta;
  }
  for (double delta : {1.5, 3.0, 5.0}) {
    const auto d = derive_params(delta, 1e-6);
    EXPECT_NEAR(d.eta, std::acosh(delta), 1e-5) << delta;
  }
}

TEST(RootOfUnity, Detection) {
  auto r = detect_root_of_unity(pi / 3);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->nu1, 2);
  EXPECT_EQ(r->nu2, 1);
  r = detect_root_of_unity(pi / 4);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->nu1, 3);
  EXPECT_EQ(r->nu2, 1);
  EXPECT_FALSE(detect_root_of_unity(1.0, 8, 1e-9));
  r = detect_root_of_unity(2 * pi / 5);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->nu1, 2);
  EXPECT_EQ(r->nu2, 2);
  EXPECT_EQ(r->Nb(), 4);
  EXPECT_NEAR(r->gamma(), 2 * pi / 5, 1e-15);
}

TEST(TauForGamma, PiOverThreeNear215) {
  const double t = tau_for_gamma(2.5, pi / 3, 1.8, 2.5);
  EXPECT_NEAR(t, 2.15, 1e-2);
  EXPECT_NEAR(derive_params(2.5, t).gamma.real(), pi / 3, 1e-12);
}

TEST(TauForGamma, SmallGammaApproachesThreshold) {
  const double th = threshold_tau(2.5);
  const double t = tau_for_gamma(2.5, 1e-6, th, 2.5);
  EXPECT_NEAR(t, 2 * pi / 3.5, 1e-6);
}

TEST(TauForGamma, PiOverFourForwardCheck) {
  const double t = tau_for_gamma(2.5, pi / 4, threshold_tau(2.5) + 1e-9, 3.0);
  const auto d = derive_params(2.5, t);
  EXPECT_EQ(d.regime, Regime::Gapless);
  EXPECT_NEAR(d.gamma.real(), pi / 4, 1e-12);
}

TEST(TauForGamma, NoBracket) {
  EXPECT_EQ(code_of([] { tau_for_gamma(2.5, pi / 3, 1.8, 1.9); }), ErrorCode::NoBracket);
}

TEST(TauForGammaProperty, RoundTrip) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> g(0.05, 1.4);
  for (double delta : {2.0, 2.5, 3.0}) {
    for (int i = 0; i < 20; ++i) {
      const double target = g(rng);
      const double t = tau_for_gamma(delta, target, threshold_tau(delta) + 1e-9, 2 * pi / delta);
      EXPECT_NEAR(derive_params(delta, t).gamma.real(), target, 1e-10);
    }
  }
}
