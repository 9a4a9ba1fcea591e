#ifndef TDGGE_TBA_GAPPED_HPP
#define TDGGE_TBA_GAPPED_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/blocksolve.hpp"
#include "tdgge/grid.hpp"
#include "tdgge/kernels.hpp"
#include "tdgge/params.hpp"

namespace tdgge {

inline void require_gapped(const DerivedParams& p, const char* module) {
  if (!p.gapped())
    throw Error(ErrorCode::InvalidArgument, module, "gapped parameters required");
  if (p.gapped_shifted())
    throw Error(ErrorCode::NotSupported, module, "gamma = pi + i eta branch (s < -1) not supported");
}

inline cplx afrak(cplx lambda, const DerivedParams& p) {
  require_gapped(p, "tba_gapped");
  const cplx ie = I * p.eta;
  const double x = p.x.real();
  const cplx d1 = std::sin(2.0 * lambda - ie), d2 = std::sin(lambda + x / 2 + ie),
             d3 = std::sin(lambda + x / 2);
  if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14 || std::abs(d3) < 1e-14)
    throw Error(ErrorCode::PoleProximity, "tba_gapped", "afrak denominator vanishes");
  return std::sin(2.0 * lambda + ie) / d1 * (std::sin(lambda - x / 2 - ie) / d2) *
         (std::sin(lambda - x / 2) / d3);
}

inline cplx eta1(cplx lambda, const DerivedParams& p) {
  const cplx h = 0.5 * I * p.eta;
  return -1.0 + (1.0 + afrak(lambda - h, p)) * (1.0 + 1.0 / afrak(lambda + h, p));
}

// eta_n via eta_{n+1}(l) = -1 + eta_n(l + i eta/2) eta_n(l - i eta/2)/(1 + eta_{n-1}(l)),
// tabulated on the lattice l + i m eta/2.
class EtaFamilyGapped {
 public:
  EtaFamilyGapped(const DerivedParams& p, int n_max) : p_(p), n_max_(n_max) {
    require_gapped(p, "tba_gapped");
    if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "tba_gapped", "n_max must be >= 1");
  }

  int n_max() const { return n_max_; }
  const DerivedParams& params() const { return p_; }

  // eta_1 .. eta_nmax at lambda; a lattice point on a pole of afrak is retried 1e-9 to the right
  std::vector<cplx> evaluate(cplx lambda) const {
    try {
      return evaluate_raw(lambda);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PoleProximity) throw;
      return evaluate_raw(lambda + 1e-9);
    }
  }

  std::vector<cplx> evaluate_raw(cplx lambda) const {
    const int M = n_max_ - 1;
    const int W = 2 * M + 1;
    std::vector<std::vector<cplx>> E(n_max_ + 1, std::vector<cplx>(W, 0.0));
    const cplx step = 0.5 * I * p_.eta;
    for (int m = -M; m <= M; ++m) E[1][m + M] = eta1(lambda + static_cast<double>(m) * step, p_);
    for (int n = 1; n < n_max_; ++n) {
      const int reach = M - n;
      for (int m = -reach; m <= reach; ++m) {
        const cplx den = 1.0 + E[n - 1][m + M];
        if (std::abs(den) < 1e-14)
          throw Error(ErrorCode::RecursionPole, "tba_gapped", "1 + eta_{n-1} vanishes");
        E[n + 1][m + M] = -1.0 + E[n][m + 1 + M] * E[n][m - 1 + M] / den;
      }
    }
    std::vector<cplx> out(n_max_);
    for (int n = 1; n <= n_max_; ++n) out[n - 1] = E[n][M];
    return out;
  }

  cplx eta(int n, cplx lambda) const {
    if (n == 0) return 0.0;
    if (n < 0 || n > n_max_) throw Error(ErrorCode::InvalidArgument, "tba_gapped", "string index out of range");
    return evaluate(lambda)[n - 1];
  }

  // n_max x N real samples; max |Im| / max(1, |eta|) reported through imag_residue
  Eigen::MatrixXd sample(const Grid& g, double* imag_residue = nullptr) const {
    Eigen::MatrixXd S(n_max_, g.size());
    double worst = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      const auto v = evaluate(cplx(g.nodes[k], 0.0));
      for (int n = 0; n < n_max_; ++n) {
        S(n, k) = v[n].real();
        worst = std::max(worst, std::abs(v[n].imag()) / std::max(1.0, std::abs(v[n])));
      }
    }
    if (imag_residue) *imag_residue = worst;
    return S;
  }

 private:
  DerivedParams p_;
  int n_max_;
};

// FFT symbols of a_nm for n, m = 1..n_max
inline std::vector<std::vector<Eigen::VectorXcd>> gapped_kernel_hats(const Spectral& sp, double eta, int n_max) {
  std::vector<Eigen::VectorXcd> ak(2 * n_max + 1);
  for (int k = 1; k <= 2 * n_max; ++k)
    ak[k] = sp.kernel_hat([&](double l) { return a_n_gapped(k, l, eta); });
  std::vector<std::vector<Eigen::VectorXcd>> K(n_max, std::vector<Eigen::VectorXcd>(n_max));
  for (int n = 1; n <= n_max; ++n)
    for (int m = 1; m <= n_max; ++m) {
      const int d = std::abs(n - m);
      Eigen::VectorXcd r = ak[n + m];
      if (d > 0) r += ak[d];
      for (int k = d + 2; k < n + m; k += 2) r += 2.0 * ak[k];
      K[n - 1][m - 1] = r;
    }
  return K;
}

struct TbaStateGapped {
  Grid grid;
  DerivedParams params;
  int n_max = 0;
  Eigen::MatrixXd eta;    // n_max x N
  Eigen::MatrixXd rho;    // n_max x N
  Eigen::MatrixXd rho_h;  // n_max x N
  double eta_imag_residue = 0.0;
  SolveReport report;

  // 1 - 2 sum_n n int rho_n
  double sum_rule() const {
    double s = 0.0;
    for (int n = 0; n < n_max; ++n) s += (n + 1) * grid.integrate(rho.row(n).transpose());
    return 1.0 - 2.0 * s;
  }
  double string_weight(int n) const { return grid.integrate(rho.row(n - 1).transpose()); }
};

struct GappedSolveOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  LinearMethod method = LinearMethod::Krylov;
  bool guess_from_driving = false;
};

// rho_n (1 + eta_n) + sum_m a_nm * rho_m = a_n^{(x/2)}
inline TbaStateGapped solve_rho_gapped(const EtaFamilyGapped& fam, const Grid& g,
                                       const GappedSolveOptions& opt = {}) {
  if (g.domain != Domain::PeriodicBrillouin)
    throw Error(ErrorCode::GridMismatch, "tba_gapped", "gapped TBA lives on the Brillouin zone");
  const auto& p = fam.params();
  const int nm = fam.n_max(), N = g.size();
  TbaStateGapped st;
  st.grid = g;
  st.params = p;
  st.n_max = nm;
  st.eta = fam.sample(g, &st.eta_imag_residue);

  Spectral sp(g);
  BlockSystem sys;
  sys.sp = &sp;
  sys.ns = nm;
  sys.khat = gapped_kernel_hats(sp, p.eta, nm);
  sys.left = (1.0 + st.eta.array()).inverse().matrix();
  sys.right = Eigen::MatrixXd::Ones(nm, N);

  const double s = p.x.real() / 2;
  Eigen::VectorXd b(sys.dim());
  for (int n = 1; n <= nm; ++n)
    for (int k = 0; k < N; ++k) {
      const double d = shifted_average([&](double l) { return a_n_gapped(n, l, p.eta); }, s, g.nodes[k]);
      b[(n - 1) * N + k] = sys.left(n - 1, k) * d;
    }
  Eigen::VectorXd sol;
  if (opt.guess_from_driving) {
    Eigen::VectorXd x0 = b;
    sol = solve_block(sys, b, opt.tol, opt.max_iter, "tba_gapped", &st.report, opt.method, &x0);
  } else {
    sol = solve_block(sys, b, opt.tol, opt.max_iter, "tba_gapped", &st.report, opt.method);
  }
  st.rho = Eigen::Map<Eigen::MatrixXd>(sol.data(), N, nm).transpose();
  st.rho_h = st.eta.cwiseProduct(st.rho);
  if (st.rho.minCoeff() < -1e-8)
    throw Error(ErrorCode::NegativeDensity, "tba_gapped", "negative root density");
  return st;
}

inline TbaStateGapped solve_gapped(const DerivedParams& p, int n_max = 20, int N = 512,
                                   const GappedSolveOptions& opt = {}) {
  EtaFamilyGapped fam(p, n_max);
  return solve_rho_gapped(fam, solver_grid(Domain::PeriodicBrillouin, N), opt);
}

}  // namespace tdgge

#endif
