#ifndef TDGGE_EXACT_SECTORS_HPP
#define TDGGE_EXACT_SECTORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tdgge/exact/circuit.hpp"
#include "tdgge/exact/ops.hpp"
#include "tdgge/exact/transfer.hpp"

namespace tdgge::exact {

inline constexpr int max_sector_L = 24;

// all states with M down spins, sorted
struct MagnonSector {
  int L = 0, M = 0;
  std::vector<std::uint64_t> states;

  MagnonSector(int L_, int M_) : L(L_), M(M_) {
    if (L > max_sector_L) throw Error(ErrorCode::SizeBudgetExceeded, "exact_small", "sector L above budget");
    if (M < 0 || M > L) throw Error(ErrorCode::InvalidArgument, "exact_small", "magnon number out of range");
    // Gosper's hack over M-subsets
    if (M == 0) {
      states.push_back(0);
      return;
    }
    std::uint64_t s = (std::uint64_t{1} << M) - 1;
    const std::uint64_t lim = std::uint64_t{1} << L;
    while (s < lim) {
      states.push_back(s);
      const std::uint64_t c = s & (~s + 1), r = s + c;
      s = (((r ^ s) >> 2) / c) | r;
    }
  }
  size_t size() const { return states.size(); }
  size_t index(std::uint64_t s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    return static_cast<size_t>(it - states.begin());
  }
};

inline void apply_floquet_sector(Eigen::VectorXcd& v, const MagnonSector& sec, const Eigen::Matrix4cd& V) {
  auto idx = [&](std::uint64_t s) { return sec.index(s); };
  for (const auto& g : odd_layer(sec.L)) apply_gate_generic(v, sec.states, idx, g.a, g.b, V);
  for (const auto& g : even_layer(sec.L)) apply_gate_generic(v, sec.states, idx, g.a, g.b, V);
}

inline Eigen::MatrixXcd floquet_in_sector(const DerivedParams& p, const MagnonSector& sec) {
  const Eigen::Matrix4cd V = build_gate(p.delta, p.tau);
  const Eigen::Index n = static_cast<Eigen::Index>(sec.size());
  Eigen::MatrixXcd U(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e[c] = 1.0;
    apply_floquet_sector(e, sec, V);
    U.col(c) = e;
  }
  return U;
}

// zero two-site momentum states inside a magnon sector: normalized T^2 orbit sums
struct MomentumZeroSector {
  MagnonSector full;
  std::vector<std::uint64_t> reps;
  std::vector<int> orbit;
  std::vector<int> rep_of;  // full-sector index -> rep index

  MomentumZeroSector(int L, int M) : full(L, M) {
    rep_of.assign(full.size(), -1);
    for (size_t k = 0; k < full.size(); ++k) {
      if (rep_of[k] >= 0) continue;
      const int r = static_cast<int>(reps.size());
      std::uint64_t s = full.states[k];
      int len = 0;
      do {
        rep_of[full.index(s)] = r;
        s = shift2(s);
        ++len;
      } while (s != full.states[k]);
      reps.push_back(full.states[k]);
      orbit.push_back(len);
    }
  }
  size_t size() const { return reps.size(); }
  std::uint64_t shift2(std::uint64_t s) const {
    const int L = full.L;
    const std::uint64_t mask = (std::uint64_t{1} << L) - 1;
    return ((s << 2) | (s >> (L - 2))) & mask;
  }
};

inline Eigen::MatrixXcd floquet_momentum_zero(const DerivedParams& p, const MomentumZeroSector& sec) {
  const Eigen::Matrix4cd V = build_gate(p.delta, p.tau);
  const Eigen::Index n = static_cast<Eigen::Index>(sec.size());
  const Eigen::Index nf = static_cast<Eigen::Index>(sec.full.size());
  Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(nf);
    std::uint64_t s = sec.reps[i];
    for (int k = 0; k < sec.orbit[i]; ++k) {
      v[static_cast<Eigen::Index>(sec.full.index(s))] = 1.0 / std::sqrt(static_cast<double>(sec.orbit[i]));
      s = sec.shift2(s);
    }
    apply_floquet_sector(v, sec.full, V);
    for (Eigen::Index j = 0; j < n; ++j)
      U(j, i) = v[static_cast<Eigen::Index>(sec.full.index(sec.reps[j]))] * std::sqrt(static_cast<double>(sec.orbit[j]));
  }
  return U;
}

struct DiagonalEnsembleResult {
  double site0 = 0.0;  // sublattice of site 1
  double site1 = 0.0;
  double staggered = 0.0;
  double probability = 0.0;  // sum of |<n|psi>|^2
  int dim = 0;
  int blocks = 0;
  int degenerate_blocks = 0;
  double unitarity = 0.0;
};

// sum_b <psi| P_b O P_b |psi> over eigenphase blocks of U in the M = L/2, K = 0 sector
inline DiagonalEnsembleResult diagonal_ensemble_sz(const DerivedParams& p, int L, double degeneracy_tol = 1e-9) {
  if (L < 4 || L % 2 != 0) throw Error(ErrorCode::InvalidSize, "exact_small", "L must be even and >= 4");
  if (L > 16) throw Error(ErrorCode::SizeBudgetExceeded, "exact_small", "diagonal ensemble limited to L <= 16");
  MomentumZeroSector sec(L, L / 2);
  const Eigen::MatrixXcd U = floquet_momentum_zero(p, sec);
  const Eigen::Index n = U.rows();
  DiagonalEnsembleResult r;
  r.dim = static_cast<int>(n);
  r.unitarity = max_abs(U.adjoint() * U - Eigen::MatrixXcd::Identity(n, n));

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(U);
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& Z = schur.matrixU();
  const Eigen::MatrixXcd off = T.triangularView<Eigen::StrictlyUpper>();
  if (off.size() > 0 && max_abs(off) > 1e-10)
    throw Error(ErrorCode::DegeneracyUnresolved, "exact_small", "Schur form of U is not diagonal");

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
  const std::uint64_t neel = neel_bits(L);
  psi[sec.rep_of[sec.full.index(neel)]] = 1.0;
  Eigen::VectorXd o0(n), o1(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = 0, b = 0;
    for (int s = 1; s <= L; s += 2) a += sz_value(sec.reps[i], s);
    for (int s = 2; s <= L; s += 2) b += sz_value(sec.reps[i], s);
    o0[i] = a / (L / 2);
    o1[i] = b / (L / 2);
  }

  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::arg(T(a, a)) < std::arg(T(b, b)); });
  std::vector<std::vector<Eigen::Index>> groups;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0 && std::abs(T(order[k], order[k]) - T(order[k - 1], order[k - 1])) < degeneracy_tol)
      groups.back().push_back(order[k]);
    else
      groups.push_back({order[k]});
  }
  // phases near +-pi wrap around
  if (groups.size() > 1 &&
      std::abs(T(groups.front().front(), groups.front().front()) - T(groups.back().back(), groups.back().back())) <
          degeneracy_tol) {
    groups.front().insert(groups.front().end(), groups.back().begin(), groups.back().end());
    groups.pop_back();
  }
  const Eigen::VectorXcd c = Z.adjoint() * psi;
  for (const auto& gr : groups) {
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(n);
    for (auto k : gr) proj += Z.col(k) * c[k];
    const Eigen::VectorXd w = proj.cwiseAbs2();
    r.site0 += w.dot(o0);
    r.site1 += w.dot(o1);
    r.probability += w.sum();
    if (gr.size() > 1) ++r.degenerate_blocks;
  }
  r.blocks = static_cast<int>(groups.size());
  r.staggered = 0.5 * (r.site0 - r.site1);
  return r;
}

// f^{+-}(p) = sinh(p + i x/2 +- i g/2) sinh(p - i x/2 +- i g/2), x = x_tm
inline cplx f_pm(cplx p, const DerivedParams& d, int sign) {
  const cplx x = d.x_tm, g = d.gamma;
  return std::sinh(p + I * x / 2.0 + double(sign) * I * g / 2.0) *
         std::sinh(p - I * x / 2.0 + double(sign) * I * g / 2.0);
}

inline double wrap_2pi(double a) { return std::remainder(a, 2 * pi); }

// per-root distance of (L/2) log(f+/f-) - sum_k log S(p_j - p_k) from 2 pi i Z
inline std::vector<double> bethe_residual(const std::vector<cplx>& roots, const DerivedParams& d, int L) {
  std::vector<double> out;
  const cplx g = d.gamma;
  for (size_t j = 0; j < roots.size(); ++j) {
    cplx z = (L / 2.0) * std::log(f_pm(roots[j], d, 1) / f_pm(roots[j], d, -1));
    for (size_t k = 0; k < roots.size(); ++k)
      if (k != j) z -= std::log(std::sinh(roots[j] - roots[k] + I * g) / std::sinh(roots[j] - roots[k] - I * g));
    out.push_back(std::abs(z.real()) + std::abs(wrap_2pi(z.imag())));
  }
  return out;
}

struct OneMagnonState {
  int q = 0;  // f+/f- = exp(2 pi i q/(L/2))
  cplx p;
  double eigenphase = 0.0;
  double pairing_residual = 0.0;
  double bethe_residual = 0.0;
  Eigen::VectorXcd vec;  // amplitude on the magnon position, index j - 1
  double sz_site0 = 0.0;  // odd sites
  double sz_site1 = 0.0;  // even sites
};

// roots from the quadratic in z = e^{2p}, then Newton on log(f+/f-) - iK
inline std::vector<std::pair<int, cplx>> one_magnon_roots(const DerivedParams& d, int L) {
  const cplx g = d.gamma, x = d.x_tm;
  std::vector<std::pair<int, cplx>> out;
  for (int q = 0; q < L / 2; ++q) {
    const double K = 2 * pi * q / (L / 2);
    const cplx c = std::exp(I * K);
    const cplx A = std::exp(I * g) - c * std::exp(-I * g);
    const cplx B = -2.0 * std::cos(x) * (1.0 - c);
    const cplx C = std::exp(-I * g) - c * std::exp(I * g);
    std::vector<cplx> zs;
    if (std::abs(A) < 1e-12) {
      if (std::abs(B) > 1e-14) zs.push_back(-C / B);  // the other root sits at infinity
    } else {
      const cplx disc = std::sqrt(B * B - 4.0 * A * C);
      const cplx z1 = (-B + disc) / (2.0 * A), z2 = (-B - disc) / (2.0 * A);
      zs = {z1, z2};
    }
    for (cplx z : zs) {
      cplx p = 0.5 * std::log(z);
      for (int it = 0; it < 20; ++it) {
        const cplx F = std::log(f_pm(p, d, 1) / f_pm(p, d, -1)) - I * K;
        const cplx Fw = cplx(F.real(), wrap_2pi(F.imag()));
        auto coth = [](cplx w) { return std::cosh(w) / std::sinh(w); };
        const cplx dF = coth(p + I * x / 2.0 + I * g / 2.0) + coth(p - I * x / 2.0 + I * g / 2.0) -
                        coth(p + I * x / 2.0 - I * g / 2.0) - coth(p - I * x / 2.0 - I * g / 2.0);
        const cplx step = Fw / dF;
        p -= step;
        if (std::abs(step) < 1e-15) break;
      }
      out.push_back({q, p});
    }
  }
  return out;
}

inline std::vector<OneMagnonState> one_magnon_sector(const DerivedParams& d, int L, double match_tol = 1e-8) {
  if (L < 4 || L % 2 != 0) throw Error(ErrorCode::InvalidSize, "exact_small", "L must be even and >= 4");
  if (L > max_sector_L) throw Error(ErrorCode::SizeBudgetExceeded, "exact_small", "one-magnon sector limited to L <= 24");
  MagnonSector sec(L, 1);
  const Eigen::MatrixXcd U = floquet_in_sector(d, sec);
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(U, false);
  const Eigen::VectorXcd evals = es.eigenvalues();
  std::vector<OneMagnonState> out;
  for (auto [q, p] : one_magnon_roots(d, L)) {
    OneMagnonState st;
    st.q = q;
    st.p = p;
    st.bethe_residual = bethe_residual({p}, d, L)[0];
    // sector basis state k has its magnon on site k + 1
    Eigen::VectorXcd v = b_on_reference(-I * p - d.gamma / 2.0, d.gamma, d.x_tm, L);
    const double nv = v.norm();
    if (!(nv > 1e-300) || !std::isfinite(nv))
      throw Error(ErrorCode::RootMatchFailed, "exact_small", "Bethe vector vanishes");
    v /= nv;
    const Eigen::VectorXcd Uv = U * v;
    const cplx lam = v.dot(Uv);
    st.pairing_residual = (Uv - lam * v).norm();
    double best = 1e300;
    for (Eigen::Index k = 0; k < evals.size(); ++k) best = std::min(best, std::abs(evals[k] - lam));
    if (!(st.pairing_residual < match_tol) || !(best < match_tol))
      throw Error(ErrorCode::RootMatchFailed, "exact_small", "root does not pair with a Floquet eigenvector");
    st.eigenphase = std::arg(lam);
    st.vec = v;
    for (int j = 1; j <= L; ++j) {
      const double sz = 1.0 - 2.0 * std::norm(v[j - 1]);
      (j % 2 == 1 ? st.sz_site0 : st.sz_site1) += sz / (L / 2);
    }
    out.push_back(st);
  }
  return out;
}

}  // namespace tdgge::exact

#endif
