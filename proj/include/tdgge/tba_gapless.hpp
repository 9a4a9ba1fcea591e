#ifndef TDGGE_TBA_GAPLESS_HPP
#define TDGGE_TBA_GAPLESS_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/blocksolve.hpp"
#include "tdgge/grid.hpp"
#include "tdgge/kernels.hpp"
#include "tdgge/strings.hpp"
#include "tdgge/ysystem_gapless.hpp"

namespace tdgge {

// Driving shift s = |Im x|/2 in a_m(lambda +- s).
inline double gapless_shift(const DerivedParams& p) { return std::abs(p.x.imag()) / 2; }

inline std::vector<std::vector<Eigen::VectorXcd>> gapless_kernel_hats(const Spectral& sp, const StringTable& t,
                                                                      double gamma) {
  const int nb = t.size();
  std::vector<std::vector<Eigen::VectorXcd>> K(nb, std::vector<Eigen::VectorXcd>(nb));
  for (int j = 0; j < nb; ++j)
    for (int k = 0; k < nb; ++k)
      K[j][k] = k < j ? K[k][j] : sp.kernel_hat([&](double l) { return a_jk_gapless(j, k, l, t, gamma); });
  return K;
}

struct TbaStateGapless {
  Grid grid;
  StringTable table;
  DerivedParams params;
  Eigen::MatrixXd eta;    // Nb x N
  Eigen::MatrixXd rho;
  Eigen::MatrixXd rho_h;
  double eta_imag_residue = 0.0;
  SolveReport report;

  int size() const { return table.size(); }
  double sum_rule() const {
    double s = 0.0;
    for (int j = 0; j < size(); ++j) s += table[j].n * grid.integrate(rho.row(j).transpose());
    return 1.0 - 2.0 * s;
  }
};

struct GaplessSolveOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  LinearMethod method = LinearMethod::Krylov;
  bool guess_from_driving = false;
};

// sign(q_m) rho_m (1 + eta_m) + sum_n a_mn * rho_n = a_m^{(s)}
inline TbaStateGapless solve_rho_gapless_sampled(const Eigen::MatrixXd& eta, const StringTable& t,
                                                 const DerivedParams& p, const Grid& g,
                                                 const GaplessSolveOptions& opt = {}) {
  if (g.domain != Domain::TruncatedLine)
    throw Error(ErrorCode::GridMismatch, "tba_gapless", "gapless TBA lives on the truncated line");
  const int nb = t.size(), N = g.size();
  if (eta.rows() != nb || eta.cols() != N)
    throw Error(ErrorCode::GridMismatch, "tba_gapless", "eta samples do not match grid/table");
  const double gamma = p.gamma.real();
  TbaStateGapless st;
  st.grid = g;
  st.table = t;
  st.params = p;
  st.eta = eta;

  Spectral sp(g);
  BlockSystem sys;
  sys.sp = &sp;
  sys.ns = nb;
  sys.khat = gapless_kernel_hats(sp, t, gamma);
  sys.left.resize(nb, N);
  for (int j = 0; j < nb; ++j)
    sys.left.row(j) = (t[j].sigma * (1.0 + eta.row(j).array())).inverse().matrix();
  sys.right = Eigen::MatrixXd::Ones(nb, N);

  const double s = gapless_shift(p);
  Eigen::VectorXd b(sys.dim());
  for (int j = 0; j < nb; ++j)
    for (int k = 0; k < N; ++k) {
      const double d = shifted_average([&](double l) { return a_j_gapless(j, l, t, gamma); }, s, g.nodes[k]);
      b[j * N + k] = sys.left(j, k) * d;
    }
  Eigen::VectorXd sol;
  Eigen::VectorXd x0 = b;
  try {
    sol = solve_block(sys, b, opt.tol, opt.max_iter, "tba_gapless", &st.report, opt.method,
                      opt.guess_from_driving ? &x0 : nullptr);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoConvergence || opt.method == LinearMethod::Dense || sys.dim() > 6000) throw;
    sol = solve_block(sys, b, opt.tol, opt.max_iter, "tba_gapless", &st.report, LinearMethod::Dense);
  }
  st.rho = Eigen::Map<Eigen::MatrixXd>(sol.data(), N, nb).transpose();
  st.rho_h = st.eta.cwiseProduct(st.rho);
  if (st.rho.minCoeff() < -1e-8 || st.rho_h.minCoeff() < -1e-8)
    throw Error(ErrorCode::NegativeDensity, "tba_gapless", "negative density");
  return st;
}

inline TbaStateGapless solve_rho_gapless(const EtaFamilyGapless& fam, const StringTable& t, const Grid& g,
                                         const GaplessSolveOptions& opt = {}) {
  double imag = 0.0;
  const Eigen::MatrixXd eta = fam.sample(g, &imag);
  auto st = solve_rho_gapless_sampled(eta, t, fam.params(), g, opt);
  st.eta_imag_residue = imag;
  return st;
}

inline TbaStateGapless solve_gapless(const DerivedParams& p, int N = 1024, double cutoff = 20.0,
                                     const GaplessSolveOptions& opt = {}, int max_nu = 8) {
  if (p.regime != Regime::Gapless)
    throw Error(ErrorCode::InvalidArgument, "tba_gapless", "gapless parameters required");
  const auto root = detect_root_of_unity(p.gamma.real(), max_nu, 1e-9);
  if (!root) throw Error(ErrorCode::UnsupportedRoot, "tba_gapless", "gamma/pi is not a supported root of unity");
  EtaFamilyGapless fam(*root, p);
  return solve_rho_gapless(fam, build_string_table(*root), solver_grid(Domain::TruncatedLine, N, cutoff), opt);
}

}  // namespace tdgge

#endif
