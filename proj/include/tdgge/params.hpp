#ifndef TDGGE_PARAMS_HPP
#define TDGGE_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "tdgge/errors.hpp"

namespace tdgge {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

struct ModelParams {
  double delta = 0.0;
  double tau = 0.0;
  std::optional<int> L;
};

enum class Regime { Gapped, Gapless, FreePoint, Degenerate };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Gapped: return "Gapped";
    case Regime::Gapless: return "Gapless";
    case Regime::FreePoint: return "FreePoint";
    case Regime::Degenerate: return "Degenerate";
  }
  return "?";
}

struct DerivedParams {
  double delta = 0.0;
  double tau = 0.0;
  cplx gamma;
  double eta = 0.0;  // Im(gamma) when gapped
  cplx x;
  // branch of x entering the R-matrix: R(x_tm) is proportional to V.P
  cplx x_tm;
  double shift = 0.0;
  Regime regime = Regime::Gapless;
  double tau_th = 0.0;
  double s = 0.0;  // sin(delta tau/2)/sin(tau/2)

  bool gapped() const { return regime == Regime::Gapped; }
  // gamma = pi + i eta branch, reached for s < -1
  bool gapped_shifted() const { return gapped() && s < 0.0; }
};

struct RootOfUnityPoint {
  int nu1 = 1;
  int nu2 = 1;
  double gamma() const { return pi / (nu1 + 1.0 / nu2); }
  int Nb() const { return nu1 + nu2; }
};

inline double threshold_tau(double delta) {
  if (!(delta > -1.0))
    throw Error(ErrorCode::InvalidArgument, "params", "threshold_tau needs delta > -1");
  return 2.0 * pi / (delta + 1.0);
}

inline void validate(const ModelParams& p) {
  if (!(p.tau > 0.0) || !std::isfinite(p.tau))
    throw Error(ErrorCode::InvalidArgument, "params", "tau must be positive");
  if (!std::isfinite(p.delta))
    throw Error(ErrorCode::InvalidArgument, "params", "delta must be finite");
  if (p.L && (*p.L < 4 || *p.L % 2 != 0))
    throw Error(ErrorCode::InvalidSize, "params", "L must be even and >= 4");
}

inline DerivedParams derive_params(const ModelParams& p) {
  validate(p);
  const double st = std::sin(p.tau / 2);
  if (std::abs(st) < 1e-14)
    throw Error(ErrorCode::DegenerateParams, "params", "sin(tau/2) = 0");
  DerivedParams d;
  d.delta = p.delta;
  d.tau = p.tau;
  d.s = std::sin(p.delta * p.tau / 2) / st;
  const double tn = std::tan(p.tau / 2);
  // |s| = 1 up to roundoff counts as the gapless boundary
  if (std::abs(d.s) > 1.0 + 1e-13) {
    d.regime = Regime::Gapped;
    d.eta = std::acosh(std::abs(d.s));
    d.gamma = d.s > 0 ? cplx(0.0, d.eta) : cplx(pi, d.eta);
    // sinh(eta)|tan(tau/2)| <= 1 always holds here; clamp roundoff
    double arg = std::sinh(d.eta) * tn;
    arg = std::clamp(arg, -1.0, 1.0);
    d.x = d.s > 0 ? cplx(-std::asin(arg), 0.0) : cplx(std::asin(arg), 0.0);
    d.shift = d.x.real();
  } else {
    d.gamma = cplx(std::acos(std::clamp(d.s, -1.0, 1.0)), 0.0);
    d.x = cplx(0.0, std::asinh(std::sin(d.gamma.real()) * tn));
    d.shift = d.x.imag();
    if (std::abs(p.delta - 1.0) < 1e-14)
      d.regime = Regime::Degenerate;
    else if (std::abs(d.s) < 1e-14)
      d.regime = Regime::FreePoint;
    else
      d.regime = Regime::Gapless;
  }
  const double ratio = std::cos(p.delta * p.tau / 2) / std::cos(p.tau / 2);
  d.x_tm = ratio > 0 ? -d.x : d.x + pi;
  d.tau_th = p.delta > -1.0 ? threshold_tau(p.delta) : std::numeric_limits<double>::infinity();
  return d;
}

inline DerivedParams derive_params(double delta, double tau) {
  return derive_params(ModelParams{delta, tau, std::nullopt});
}

// residuals of cos(gamma) sin(tau/2) = sin(delta tau/2) and sinh(x/i) = sin(gamma) tan(tau/2)
inline std::pair<double, double> param_residuals(const DerivedParams& d) {
  const double r1 = std::abs(std::cos(d.gamma) * std::sin(d.tau / 2) - std::sin(d.delta * d.tau / 2));
  const double r2 = std::abs(std::sinh(d.x / I) - std::sin(d.gamma) * std::tan(d.tau / 2));
  return {r1, r2};
}

inline std::optional<RootOfUnityPoint> detect_root_of_unity(double gamma, int max_nu = 8,
                                                            double tol = 1e-9) {
  if (!(gamma > 0.0 && gamma < pi)) return std::nullopt;
  for (int n1 = 1; n1 <= max_nu; ++n1)
    for (int n2 = 1; n2 <= max_nu; ++n2)
      if (std::abs(gamma - pi / (n1 + 1.0 / n2)) < tol) return RootOfUnityPoint{n1, n2};
  return std::nullopt;
}

// bisection on Re(gamma(tau)) - target
inline double tau_for_gamma(double delta, double gamma_target, double lo, double hi) {
  auto f = [&](double t) { return derive_params(delta, t).gamma.real() - gamma_target; };
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0) == (fhi < 0))
    throw Error(ErrorCode::NoBracket, "params", "gamma target not straddled by bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace tdgge

#endif
