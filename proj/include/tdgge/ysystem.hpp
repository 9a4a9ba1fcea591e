#ifndef TDGGE_YSYSTEM_HPP
#define TDGGE_YSYSTEM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"

namespace tdgge {

// Boundary QTM data for regulator beta. All shifts f^{[k]}(u) = f(u + k gamma/2).
struct QtmData {
  cplx gamma, x, beta;
  cplx xi1, xi2, xi_plus, xi_minus;

  QtmData(cplx g, cplx x_, cplx b) : gamma(g), x(x_), beta(b) {
    xi1 = b + x_ / 2.0 + g;
    xi2 = b + x_ / 2.0;
    xi_plus = x_ / 2.0 + g / 2.0;
    xi_minus = x_ / 2.0 - g / 2.0;
  }

  cplx sh(double k) const { return k * gamma / 2.0; }

  cplx Q(cplx u) const {
    const cplx c = beta + x / 2.0;
    return std::sin(u - c) * std::sin(u + c);
  }
  cplx phi(cplx u) const {
    const cplx g2 = gamma / 2.0;
    return std::sin(u - g2 + xi1) * std::sin(u + g2 - xi1) * std::sin(u - g2 + xi2) *
           std::sin(u + g2 - xi2);
  }
  cplx omega1(cplx u) const {
    const cplx g2 = gamma / 2.0;
    return std::sin(2.0 * u + gamma) * std::sin(u + xi_plus - g2) * std::sin(u + xi_minus - g2) /
           sin2u(u);
  }
  cplx omega2(cplx u) const {
    const cplx g2 = gamma / 2.0;
    return std::sin(2.0 * u - gamma) * std::sin(u - xi_plus + g2) * std::sin(u - xi_minus + g2) /
           sin2u(u);
  }
  cplx f(cplx v) const {
    return phi(v + sh(3)) * phi(v - sh(1)) * omega1(v + gamma) * omega2(v);
  }

 private:
  static cplx sin2u(cplx u) {
    const cplx s = std::sin(2.0 * u);
    if (std::abs(s) < 1e-12) throw Error(ErrorCode::PoleProximity, "ysystem", "sin(2u) vanishes");
    return s;
  }
};

inline cplx checked(cplx d, const char* what) {
  if (std::abs(d) < 1e-300 || !std::isfinite(std::abs(d)))
    throw Error(ErrorCode::PoleProximity, "ysystem", what);
  return d;
}

inline cplx lambda_beta(cplx u, const QtmData& q) {
  const cplx Qu = checked(q.Q(u), "Q(u) vanishes");
  return (q.omega1(u) * q.phi(u + q.sh(1)) * q.Q(u - q.gamma) +
          q.omega2(u) * q.phi(u - q.sh(1)) * q.Q(u + q.gamma)) /
         Qu;
}

inline cplx afrak_beta(cplx u, const QtmData& q) {
  return q.omega1(u) / q.omega2(u) * q.phi(u + q.sh(1)) / q.phi(u - q.sh(1)) * q.Q(u - q.gamma) /
         q.Q(u + q.gamma);
}

// T_j from T_j(u) = T_{j-1}(u - g/2) Lambda(u + (j-1)g/2) - f(u + (j-3)g/2) T_{j-2}(u - g)
inline cplx t_recursive_raw(int j, cplx u, const QtmData& q) {
  if (j == 0) return 1.0;
  if (j == 1) return lambda_beta(u, q);
  return t_recursive_raw(j - 1, u - q.sh(1), q) * lambda_beta(u + q.sh(j - 1), q) -
         q.f(u + q.sh(j - 3)) * t_recursive_raw(j - 2, u - q.gamma, q);
}

// explicit sum over k = 1..j+1, not divided by the phi prefactor
inline cplx t_explicit_raw(int j, cplx u, const QtmData& q) {
  auto P = [&](double k) { return u + q.sh(k); };
  cplx pre = 1.0;
  for (int l = 1; l < j; ++l) pre *= q.phi(P(2 * l - j));
  cplx tot = 0.0;
  const cplx QQ = q.Q(P(j + 1)) * q.Q(P(-j - 1));
  for (int k = 1; k <= j + 1; ++k) {
    cplx t = q.phi(P(2 * k - j - 2));
    for (int l = 1; l < k; ++l) t *= q.omega1(P(2 * l - j - 1));
    for (int l = k; l <= j; ++l) t *= q.omega2(P(2 * l - j - 1));
    t *= QQ / checked(q.Q(P(2 * k - j - 3)) * q.Q(P(2 * k - j - 1)), "Q product vanishes");
    tot += t;
  }
  return pre * tot;
}

inline cplx t_prefactor(int j, cplx u, const QtmData& q) {
  cplx pre = 1.0;
  for (int l = 1; l < j; ++l) pre *= q.phi(u + q.sh(2 * l - j));
  return pre;
}

// rescaled t_j; t_0 = phi, t_{-1} = 0
inline cplx t_function(int j, cplx u, const QtmData& q) {
  if (j < 0) return 0.0;
  if (j == 0) return q.phi(u);
  return t_explicit_raw(j, u, q) / checked(t_prefactor(j, u, q), "phi prefactor vanishes");
}

inline cplx t_recursive(int j, cplx u, const QtmData& q) {
  if (j < 0) return 0.0;
  if (j == 0) return q.phi(u);
  return t_recursive_raw(j, u, q) / checked(t_prefactor(j, u, q), "phi prefactor vanishes");
}

inline cplx psi_function(int j, cplx u, const QtmData& q) {
  cplx r = 1.0;
  for (int l = 1; l <= j; ++l) r *= q.omega1(u + q.sh(2 * l - j)) * q.omega2(u + q.sh(2 * l - j - 2));
  return r;
}

inline cplx y_gapped(int j, cplx u, const QtmData& q) {
  if (j == 0) return 0.0;
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "ysystem", "Y index must be >= 0");
  return t_function(j - 1, u, q) * t_function(j + 1, u, q) /
         checked(psi_function(j, u, q) * q.phi(u + q.sh(j + 1)) * q.phi(u - q.sh(j + 1)),
                 "Y denominator vanishes");
}

// 1 + Y_1 = (1 + a(u - g/2))(1 + 1/a(u + g/2))
inline cplx y1_from_afrak(cplx u, const QtmData& q) {
  return (1.0 + afrak_beta(u - q.sh(1), q)) * (1.0 + 1.0 / afrak_beta(u + q.sh(1), q)) - 1.0;
}

inline cplx y1_from_lambda(cplx u, const QtmData& q) {
  return lambda_beta(u + q.sh(1), q) * lambda_beta(u - q.sh(1), q) / q.f(u - q.sh(1)) - 1.0;
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

// t_j(u + m g/2) t_j(u - m g/2) = t_{j+m} t_{j-m} + Psi_{j-m+1} t_{m-1}^{[j+1]} t_{m-1}^{[-j-1]}
inline double tsystem_residual(int j, int m, cplx u, const QtmData& q) {
  const cplx l = t_function(j, u + q.sh(m), q) * t_function(j, u - q.sh(m), q);
  const cplx r = t_function(j + m, u, q) * t_function(j - m, u, q) +
                 psi_function(j - m + 1, u, q) * t_function(m - 1, u + q.sh(j + 1), q) *
                     t_function(m - 1, u - q.sh(j + 1), q);
  return rel(l, r);
}

// Y_j(u + g/2) Y_j(u - g/2) = (1 + Y_{j+1})(1 + Y_{j-1})
inline double ysystem_residual(int j, cplx u, const QtmData& q) {
  const cplx l = y_gapped(j, u + q.sh(1), q) * y_gapped(j, u - q.sh(1), q);
  const cplx r = (1.0 + y_gapped(j + 1, u, q)) * (1.0 + y_gapped(j - 1, u, q));
  return rel(l, r);
}

inline cplx transfer_prefactor(cplx gamma, cplx x, int L) {
  const cplx sg = std::sin(gamma);
  return std::pow(sg * sg / (std::sin(gamma + x) * std::sin(gamma - x)), L / 2);
}

// beta -> 0 via three regulators and one Richardson step (ratio 10, first order)
struct BetaLimit {
  std::array<double, 3> betas{1e-5, 1e-6, 1e-7};
  double tol = 1e-7;
};

template <class F>
inline cplx beta_limit(const F& eval, const BetaLimit& cfg, const char* module = "ysystem") {
  const double r = cfg.betas[0] / cfg.betas[1];
  const cplx v0 = eval(cfg.betas[0]), v1 = eval(cfg.betas[1]), v2 = eval(cfg.betas[2]);
  const cplx e1 = v1 + (v1 - v0) / (r - 1.0);
  const cplx e2 = v2 + (v2 - v1) / (r - 1.0);
  if (!(std::abs(e1 - e2) < cfg.tol * std::max(1.0, std::abs(e2))))
    throw Error(ErrorCode::LimitNotConverged, module, "beta -> 0 extrapolants disagree");
  return e2;
}

// retry with u nudged by 1e-9 when a denominator vanishes
template <class F>
inline cplx nudged(const F& eval, cplx u) {
  try {
    return eval(u);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PoleProximity) throw;
    return eval(u + 1e-9);
  }
}

// gapped eta_m(lambda) = lim Y_m(u = lambda)
inline cplx eta_gapped_qtm(int m, double lambda, const DerivedParams& p, const BetaLimit& cfg = {}) {
  if (!p.gapped()) throw Error(ErrorCode::InvalidArgument, "ysystem", "gapped parameters required");
  return beta_limit(
      [&](double b) {
        QtmData q(p.gamma, p.x, b);
        return nudged([&](cplx u) { return y_gapped(m, u, q); }, cplx(lambda, 0.0));
      },
      cfg);
}

// lim afrak_beta(lambda); equals the closed-form afrak with x -> -x
inline cplx afrak_qtm_limit(double lambda, const DerivedParams& p, const BetaLimit& cfg = {}) {
  return beta_limit(
      [&](double b) {
        QtmData q(p.gamma, p.x, b);
        return afrak_beta(cplx(lambda, 0.0), q);
      },
      cfg);
}

}  // namespace tdgge

#endif
