#ifndef TDGGE_OBSERVABLES_HPP
#define TDGGE_OBSERVABLES_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/blocksolve.hpp"
#include "tdgge/tba_gapless.hpp"
#include "tdgge/tba_gapped.hpp"

namespace tdgge {

struct DressedFunction {
  Eigen::MatrixXd values;  // strings x N
  int parity = 0;          // m: driving shifted by -(-1)^m s
  SolveReport report;
};

struct MagnetizationResult {
  double staggered = 0.0;
  double uniform = 0.0;
  double site0 = 0.0;  // sublattice of site 1
  double site1 = 0.0;
  std::vector<double> per_string;  // staggered contribution per string
};

// b_n^eff + sum_m a_nm * (theta_m b_m^eff) = b_n,  b_n = a_n(lambda - (-1)^m x/2)
inline DressedFunction dress_gapped(const TbaStateGapped& st, int m = 0, double tol = 1e-10,
                                    int max_iter = 1000) {
  const auto& p = st.params;
  const auto& g = st.grid;
  const int nm = st.n_max, N = g.size();
  Spectral sp(g);
  BlockSystem sys;
  sys.sp = &sp;
  sys.ns = nm;
  sys.khat = gapped_kernel_hats(sp, p.eta, nm);
  sys.left = Eigen::MatrixXd::Ones(nm, N);
  sys.right = (1.0 + st.eta.array()).inverse().matrix();
  const double s = (m == 0 ? 1.0 : -1.0) * p.x.real() / 2;
  Eigen::VectorXd b(sys.dim());
  for (int n = 1; n <= nm; ++n)
    for (int k = 0; k < N; ++k) b[(n - 1) * N + k] = a_n_gapped(n, g.nodes[k] - s, p.eta);
  DressedFunction d;
  d.parity = m;
  Eigen::VectorXd sol = solve_block(sys, b, tol, max_iter, "observables", &d.report);
  d.values = Eigen::Map<Eigen::MatrixXd>(sol.data(), N, nm).transpose();
  return d;
}

// sigma = 1 - 2 sum_n n int b_n^eff/(1 + eta_n); staggered uses m = 0
inline MagnetizationResult stag_mag_gapped(const TbaStateGapped& st, const DressedFunction& d0,
                                           const DressedFunction& d1) {
  MagnetizationResult r;
  auto site = [&](const DressedFunction& d, std::vector<double>* per) {
    double s = 1.0;
    for (int n = 0; n < st.n_max; ++n) {
      const double c =
          -2.0 * (n + 1) * st.grid.integrate(d.values.row(n).cwiseQuotient((1.0 + st.eta.row(n).array()).matrix()).transpose());
      if (per) per->push_back(c);
      s += c;
    }
    return s;
  };
  r.site0 = site(d0, &r.per_string);
  r.site1 = site(d1, nullptr);
  r.staggered = r.site0;
  r.uniform = 0.5 * (r.site0 + r.site1);
  return r;
}

inline MagnetizationResult stag_mag_gapped(const TbaStateGapped& st) {
  return stag_mag_gapped(st, dress_gapped(st, 0), dress_gapped(st, 1));
}

// f_p^eff + sum_q a_pq * (theta_q sigma_q f_q^eff) = f_p,  f_p = a_p(lambda - (-1)^m s)
inline DressedFunction dress_gapless(const TbaStateGapless& st, int m, double tol = 1e-10, int max_iter = 1000,
                                     const Eigen::MatrixXd* filling = nullptr) {
  const auto& t = st.table;
  const auto& g = st.grid;
  const int nb = t.size(), N = g.size();
  const double gamma = st.params.gamma.real();
  Spectral sp(g);
  BlockSystem sys;
  sys.sp = &sp;
  sys.ns = nb;
  sys.khat = gapless_kernel_hats(sp, t, gamma);
  sys.left = Eigen::MatrixXd::Ones(nb, N);
  sys.right.resize(nb, N);
  for (int j = 0; j < nb; ++j)
    sys.right.row(j) = filling ? Eigen::RowVectorXd(filling->row(j) * t[j].sigma)
                               : Eigen::RowVectorXd(t[j].sigma * (1.0 + st.eta.row(j).array()).inverse().matrix());
  const double s = (m == 0 ? 1.0 : -1.0) * gapless_shift(st.params);
  Eigen::VectorXd b(sys.dim());
  for (int j = 0; j < nb; ++j)
    for (int k = 0; k < N; ++k) b[j * N + k] = a_j_gapless(j, g.nodes[k] - s, t, gamma);
  DressedFunction d;
  d.parity = m;
  Eigen::VectorXd sol = solve_block(sys, b, tol, max_iter, "observables", &d.report);
  d.values = Eigen::Map<Eigen::MatrixXd>(sol.data(), N, nb).transpose();
  return d;
}

// <sigma^z>_m = 1 - 2 sum_p n_p int theta_p sigma_p f_p^eff; staggered = (m0 - m1)/2
inline MagnetizationResult site_mag_gapless(const TbaStateGapless& st, const DressedFunction& d0,
                                            const DressedFunction& d1) {
  const auto& t = st.table;
  auto contrib = [&](const DressedFunction& d, int j) {
    const Eigen::RowVectorXd w = (1.0 + st.eta.row(j).array()).inverse().matrix();
    return -2.0 * t[j].n * t[j].sigma * st.grid.integrate(d.values.row(j).cwiseProduct(w).transpose());
  };
  MagnetizationResult r;
  r.site0 = r.site1 = 1.0;
  for (int j = 0; j < t.size(); ++j) {
    const double c0 = contrib(d0, j), c1 = contrib(d1, j);
    r.site0 += c0;
    r.site1 += c1;
    r.per_string.push_back(0.5 * (c0 - c1));
  }
  r.staggered = 0.5 * (r.site0 - r.site1);
  r.uniform = 0.5 * (r.site0 + r.site1);
  return r;
}

inline MagnetizationResult site_mag_gapless(const TbaStateGapless& st) {
  return site_mag_gapless(st, dress_gapless(st, 0), dress_gapless(st, 1));
}

// Finite volume, one string type. Rapidities p enter through
// a(z, g) = sin 2g/(pi (cosh 2z - cos 2g)), shifts +- i x_tm/2.
struct FiniteVolumeInput {
  std::vector<cplx> rapidities;
  int L = 0;
  DerivedParams params;
  int m = 0;  // site parity: sites 2k + m (1-based)
};

inline cplx fv_kernel(cplx z, cplx g) {
  return std::sin(2.0 * g) / (pi * (std::cosh(2.0 * z) - std::cos(2.0 * g)));
}

inline Eigen::MatrixXcd gaudin_matrix(const FiniteVolumeInput& in) {
  const int M = static_cast<int>(in.rapidities.size());
  if (M < 1) throw Error(ErrorCode::InvalidArgument, "observables", "Gaudin matrix needs M >= 1");
  const cplx g = in.params.gamma, xt = in.params.x_tm;
  const auto& ps = in.rapidities;
  Eigen::MatrixXcd G(M, M);
  for (int i = 0; i < M; ++i) {
    cplx scat = 0.0;
    for (int k = 0; k < M; ++k) scat += fv_kernel(ps[i] - ps[k], g);
    const cplx drive = 0.5 * (fv_kernel(ps[i] + I * xt / 2.0, g / 2.0) + fv_kernel(ps[i] - I * xt / 2.0, g / 2.0));
    for (int j = 0; j < M; ++j) G(i, j) = fv_kernel(ps[i] - ps[j], g);
    G(i, i) += static_cast<double>(in.L) * (drive - scat / static_cast<double>(in.L));
  }
  return G;
}

// 1 + 2 w^T G^{-1} v, v_i = -a(p_i - (-1)^m i x_tm/2, g/2)
inline double finite_volume_sz(const FiniteVolumeInput& in, double* imag_part = nullptr) {
  const int M = static_cast<int>(in.rapidities.size());
  if (M == 0) return 1.0;
  const Eigen::MatrixXcd G = gaudin_matrix(in);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  const auto sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 0) || sv[0] / sv[sv.size() - 1] > 1e12)
    throw Error(ErrorCode::SingularGaudin, "observables", "Gaudin matrix ill-conditioned");
  const cplx g = in.params.gamma, xt = in.params.x_tm;
  const double sgn = in.m == 0 ? 1.0 : -1.0;
  Eigen::VectorXcd v(M);
  for (int i = 0; i < M; ++i) v[i] = -fv_kernel(in.rapidities[i] - sgn * I * xt / 2.0, g / 2.0);
  const cplx r = 1.0 + 2.0 * G.partialPivLu().solve(v).sum();
  if (imag_part) *imag_part = r.imag();
  return r.real();
}

}  // namespace tdgge

#endif
