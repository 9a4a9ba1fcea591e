#ifndef TDGGE_FREE_FERMION_HPP
#define TDGGE_FREE_FERMION_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"

namespace tdgge {

// Gaussian lines: Delta != 0 with tau = 2 pi n/Delta, or Delta = 0
struct FreePointSpec {
  double delta = 0.0;
  double tau = 0.0;
  int n = 0;                // 0 on the Delta = 0 line
  std::optional<cplx> x;    // i asinh(tan(tau/2)); empty when tan diverges
};

inline FreePointSpec make_free_point(double delta, double tau, double tol = 1e-9) {
  if (!std::isfinite(delta) || !std::isfinite(tau) || tau <= 0)
    throw Error(ErrorCode::InvalidFreePoint, "free_fermion", "delta must be finite and tau > 0");
  FreePointSpec s;
  s.delta = delta;
  s.tau = tau;
  if (delta != 0.0) {
    const double r = tau * delta / (2 * pi);
    s.n = static_cast<int>(std::lround(r));
    if (s.n == 0 || std::abs(r - s.n) > tol * std::max(1.0, std::abs(r)))
      throw Error(ErrorCode::InvalidFreePoint, "free_fermion", "tau is not 2 pi n/delta");
  }
  const double c = std::cos(tau / 2);
  if (std::abs(c) > 1e-12) s.x = I * std::asinh(std::tan(tau / 2));
  return s;
}

struct FreeModeData {
  Eigen::VectorXd k;        // (0, pi]
  Eigen::VectorXd epsilon;  // [0, pi]
  Eigen::VectorXd phi;      // atan(sin k tan(tau/2))
  Eigen::VectorXd n_k;      // Neel occupation of b_k
  Eigen::VectorXd n_k_minus_pi;
};

struct FreeCoefficients {
  double a, b, d;
};

// e^A e^B = a + i b sigma^x + i d sigma^z
inline FreeCoefficients free_coefficients(double k, double tau) {
  const double c2 = std::cos(tau / 2) * std::cos(tau / 2), s2 = std::sin(tau / 2) * std::sin(tau / 2);
  return {c2 - std::cos(2 * k) * s2, s2 * std::sin(2 * k), std::cos(k) * std::sin(tau)};
}

inline double free_epsilon(double k, double tau) {
  const auto c = free_coefficients(k, tau);
  return std::atan2(std::hypot(c.b, c.d), c.a);
}

inline double free_phi(double k, double tau) { return std::atan(std::sin(k) * std::tan(tau / 2)); }

inline FreeModeData free_modes(const FreePointSpec& s, const Eigen::VectorXd& k) {
  FreeModeData m;
  m.k = k;
  const Eigen::Index n = k.size();
  m.epsilon.resize(n);
  m.phi.resize(n);
  m.n_k.resize(n);
  m.n_k_minus_pi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.epsilon[i] = free_epsilon(k[i], s.tau);
    m.phi[i] = free_phi(k[i], s.tau);
    m.n_k[i] = 0.5 + 0.5 * std::sin(m.phi[i]);
    m.n_k_minus_pi[i] = 0.5 - 0.5 * std::sin(m.phi[i]);
  }
  return m;
}

// k = 2 pi j/L in (0, pi]
inline FreeModeData free_modes(const FreePointSpec& s, int L) {
  if (L < 2 || L % 2 != 0) throw Error(ErrorCode::InvalidSize, "free_fermion", "L must be even");
  Eigen::VectorXd k(L / 2);
  for (int j = 1; j <= L / 2; ++j) k[j - 1] = 2 * pi * j / L;
  return free_modes(s, k);
}

// Bloch blocks on a two-site cell (A = odd site, B = even site) for the circuit gate
// -i sin(tau/2) hopping. Fermions are up spins; the Neel state fills every A orbital.
inline Eigen::Matrix2cd free_cell_step(double K, double tau) {
  const double c = std::cos(tau / 2), s = std::sin(tau / 2);
  Eigen::Matrix2cd O, E;
  O << c, -I * s * std::exp(-I * K), -I * s * std::exp(I * K), c;
  E << c, -I * s, -I * s, c;
  return E * O;
}

// Cell momenta on the ring: the wrap bond carries the Jordan-Wigner sign (-1)^{N_f - 1}, N_f = L/2
inline std::vector<double> free_cell_momenta(int L) {
  const int nc = L / 2;
  const double twist = (nc % 2 == 1) ? 0.0 : pi;
  std::vector<double> K;
  for (int m = 0; m < nc; ++m) K.push_back((2 * pi * m + twist) / nc);
  return K;
}

struct FreeMagnetizationSeries {
  std::vector<double> site0;  // odd sites; even sites carry -site0
};

// <sigma^z> on odd sites for t = 0..t_max from the mode sum
inline FreeMagnetizationSeries magnetization_series(const FreePointSpec& s, int L, int t_max) {
  if (L < 2 || L % 2 != 0) throw Error(ErrorCode::InvalidSize, "free_fermion", "L must be even");
  if (t_max < 0) throw Error(ErrorCode::InvalidArgument, "free_fermion", "t must be >= 0");
  const auto Ks = free_cell_momenta(L);
  std::vector<Eigen::Matrix2cd> W;
  std::vector<Eigen::Vector2cd> v;
  for (double K : Ks) {
    W.push_back(free_cell_step(K, s.tau));
    v.push_back(Eigen::Vector2cd(1.0, 0.0));
  }
  FreeMagnetizationSeries r;
  r.site0.reserve(t_max + 1);
  const double nc = static_cast<double>(Ks.size());
  for (int t = 0; t <= t_max; ++t) {
    if (t > 0)
      for (size_t q = 0; q < W.size(); ++q) v[q] = W[q] * v[q];
    double nA = 0;
    for (const auto& a : v) nA += std::norm(a[0]);
    r.site0.push_back(2.0 * nA / nc - 1.0);
  }
  return r;
}

// per-site <sigma^z_j(t)>, j = 1..L
inline Eigen::VectorXd magnetization_time(const FreePointSpec& s, int L, int t) {
  const double m = magnetization_series(s, L, t).site0.back();
  Eigen::VectorXd out(L);
  for (int j = 1; j <= L; ++j) out[j - 1] = j % 2 == 1 ? m : -m;
  return out;
}

struct FreeAsymptotic {
  double site0;  // sublattice of site 1 (up at t = 0)
  double site1;
};

// (-1)^{j+1}(|cos tau/2| - 1) with j counted from 0 at site 1
inline FreeAsymptotic magnetization_asymptotic(const FreePointSpec& s) {
  const double m = 1.0 - std::abs(std::cos(s.tau / 2));
  return {m, -m};
}

// same limit by quadrature of (1/pi) int_0^pi sin^2 k T^2/(1 + sin^2 k T^2), T = tan(tau/2)
inline double magnetization_asymptotic_quadrature(const FreePointSpec& s, int n = 10000) {
  const double T = std::tan(s.tau / 2);
  if (!std::isfinite(T) || std::abs(T) > 1e12) return 1.0;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double k = pi * (i + 0.5) / n;
    const double w = std::sin(k) * std::sin(k) * T * T;
    acc += w / (1 + w);
  }
  return acc / n;
}

using FreeDensity = std::function<double(double)>;

// sin of the angle that diagonalizes e^C, atan2(b, d); differs from sin phi_k by sgn(cos k)
inline double free_sin_rotation(double k, double tau) {
  const auto c = free_coefficients(k, tau);
  const double r = std::hypot(c.b, c.d);
  return r > 0 ? c.b / r : 0.0;
}

// 2 pi rho(k) = 1/2 + 1/2 sin phi_k on (-pi, pi], rotation angle on the atan2 branch
inline FreeDensity neel_density(const FreePointSpec& s) {
  const double tau = s.tau;
  return [tau](double k) { return (0.5 + 0.5 * free_sin_rotation(k, tau)) / (2 * pi); };
}

struct FreeCurrent {
  double ghd = 0.0;          // int 2 eps'_k rho(k)
  double microscopic = 0.0;  // int rho(k) 2 sin(phi^_k) [(2i/sinh ix + 2i sinh ix)/N_x]
};

// eps'_k = -2 sin k sinh(ix) sgn(cos k)/sqrt(1 + sin^2 k sinh^2(ix)), sinh(ix) = -tan(tau/2)
inline double free_velocity(double k, double tau) {
  const double sh = -std::tan(tau / 2);
  const double sg = std::cos(k) > 0 ? 1.0 : (std::cos(k) < 0 ? -1.0 : 0.0);
  return -2 * std::sin(k) * sh * sg / std::sqrt(1 + std::sin(k) * std::sin(k) * sh * sh);
}

// the microscopic form rotates with the angle that actually diagonalizes e^C: atan2(b, d)
inline FreeCurrent current_asymptotic(const FreePointSpec& s, const FreeDensity& rho, int n = 10000) {
  if (!s.x) throw Error(ErrorCode::InvalidFreePoint, "free_fermion", "current undefined where tan(tau/2) diverges");
  const cplx shx = std::sinh(I * *s.x);
  const cplx Nx = I * (1.0 + std::cosh(2.0 * I * *s.x)) / (2.0 * shx);
  const double R = ((2.0 * I / shx + 2.0 * I * shx) / Nx).real();
  FreeCurrent c;
  for (int i = 0; i < n; ++i) {
    const double k = -pi + 2 * pi * (i + 0.5) / n;
    const double sinphi = free_sin_rotation(k, s.tau);
    const double w = rho(k) * 2 * pi / n;
    c.ghd += 2 * free_velocity(k, s.tau) * w;
    c.microscopic += 2 * sinphi * R * w;
  }
  return c;
}

// Infinite-time <J> on the bond (1, 2) from the dephased Neel state, n_cells Bloch momenta.
// J and the mode formulas above use gates exp(+i tau (XX + YY)/4); the circuit here has the
// opposite sign, which is complex conjugation, so the hopping part of J enters with a flipped sign.
inline double current_dephased(const FreePointSpec& s, int n_cells = 4000) {
  if (!s.x) throw Error(ErrorCode::InvalidFreePoint, "free_fermion", "current undefined where tan(tau/2) diverges");
  const cplx shx = std::sinh(I * *s.x);
  const cplx Nx = I * (1.0 + std::cosh(2.0 * I * *s.x)) / (2.0 * shx);
  cplx c1c2 = 0, c2c1 = 0;
  double nA = 0, nB = 0;
  for (int m = 0; m < n_cells; ++m) {
    const double K = -pi + 2 * pi * (m + 0.5) / n_cells;
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(free_cell_step(K, s.tau));
    const Eigen::Matrix2cd V = es.eigenvectors();
    const Eigen::Vector2cd amp = V.colPivHouseholderQr().solve(Eigen::Vector2cd(1.0, 0.0));
    Eigen::Matrix2cd G = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector2cd u = V.col(i) / V.col(i).norm();
      G += std::norm(amp[i]) * V.col(i).squaredNorm() * u * u.adjoint();
    }
    c1c2 += G(1, 0);
    c2c1 += G(0, 1);
    nA += G(0, 0).real();
    nB += G(1, 1).real();
  }
  c1c2 /= n_cells;
  c2c1 /= n_cells;
  nA /= n_cells;
  nB /= n_cells;
  return ((-2.0 * (c1c2 - c2c1) + I * shx * (2 * nA - 2 * nB)) / Nx).real();
}

}  // namespace tdgge

#endif
