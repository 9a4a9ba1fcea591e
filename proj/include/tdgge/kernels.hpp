#ifndef TDGGE_KERNELS_HPP
#define TDGGE_KERNELS_HPP

#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"
#include "tdgge/strings.hpp"

namespace tdgge {

// a_n(l) = sinh(n eta)/(pi (cosh(n eta) - cos 2l)), written with q = e^{-n eta} to avoid overflow
inline cplx a_n_gapped(int n, cplx lambda, double eta) {
  if (n < 1 || !(eta > 0))
    throw Error(ErrorCode::InvalidArgument, "kernels_grids", "a_n needs n >= 1, eta > 0");
  const double q = std::exp(-n * eta);
  const cplx den = 1.0 + q * q - 2.0 * q * std::cos(2.0 * lambda);
  if (std::abs(den) < 2.0 * q * 1e-14)
    throw Error(ErrorCode::PoleProximity, "kernels_grids", "a_n evaluated at a pole");
  return (1.0 - q * q) / (pi * den);
}

inline double a_n_gapped(int n, double lambda, double eta) {
  return a_n_gapped(n, cplx(lambda, 0.0), eta).real();
}

template <class T>
inline T a_nm_gapped(int n, int m, T lambda, double eta) {
  if (n < 1 || m < 1)
    throw Error(ErrorCode::InvalidArgument, "kernels_grids", "a_nm needs n, m >= 1");
  const int d = std::abs(n - m);
  T r = n == m ? T(0) : a_n_gapped(d, lambda, eta);
  for (int k = d + 2; k < n + m; k += 2) r += 2.0 * a_n_gapped(k, lambda, eta);
  return r + a_n_gapped(n + m, lambda, eta);
}

// Gapless kernel a^upsilon_n; identically zero when sin(n gamma) = 0.
template <class T>
inline T a_gapless(int n, int upsilon, T lambda, double gamma) {
  const double sn = std::sin(n * gamma);
  if (std::abs(sn) < 1e-12) return T(0);
  const T den = std::cosh(2.0 * lambda) - upsilon * std::cos(n * gamma);
  if (std::abs(den) < 1e-14)
    throw Error(ErrorCode::PoleProximity, "kernels_grids", "gapless kernel at a pole");
  return upsilon / pi * sn / den;
}

template <class T>
inline T a_j_gapless(int j, T lambda, const StringTable& t, double gamma) {
  const auto& e = t[j];
  return a_gapless(e.n, e.upsilon, lambda, gamma);
}

template <class T>
inline T a_jk_pair(int nj, int nk, int v, T lambda, double gamma) {
  const int d = std::abs(nj - nk);
  T r = nj == nk ? T(0) : a_gapless(d, v, lambda, gamma);
  for (int k = d + 2; k < nj + nk; k += 2) r += 2.0 * a_gapless(k, v, lambda, gamma);
  return r + a_gapless(nj + nk, v, lambda, gamma);
}

template <class T>
inline T a_jk_gapless(int j, int k, T lambda, const StringTable& t, double gamma) {
  return a_jk_pair(t[j].n, t[k].n, t[j].upsilon * t[k].upsilon, lambda, gamma);
}

// f^{(s)}(l) = (f(l+s) + f(l-s))/2
template <class F, class T>
inline auto shifted_average(const F& f, double s, T lambda) {
  return 0.5 * (f(lambda + s) + f(lambda - s));
}

}  // namespace tdgge

#endif
