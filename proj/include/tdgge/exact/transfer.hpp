#ifndef TDGGE_EXACT_TRANSFER_HPP
#define TDGGE_EXACT_TRANSFER_HPP

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/exact/circuit.hpp"
#include "tdgge/exact/ops.hpp"
#include "tdgge/ysystem.hpp"

namespace tdgge::exact {

// R(u) on aux (x) spin, index 2 aux + spin
inline Eigen::Matrix4cd r_matrix(cplx u, cplx gamma) {
  Eigen::Matrix4cd R = Eigen::Matrix4cd::Zero();
  const cplx sg = std::sin(gamma);
  for (int e = 0; e < 2; ++e) {
    const int f = 1 - e;
    R(3 * e, 3 * e) = std::sin(u + gamma) / sg;
    R(2 * f + e, 2 * e + f) = 1.0;
    R(2 * e + f, 2 * e + f) = std::sin(u) / sg;
  }
  return R;
}

// Monodromy R_{aL}(u - x/2) ... R_{a1}(u + x/2) as 2x2 blocks over the chain.
// Odd sites carry +x/2, even sites -x/2. x is the transfer-matrix branch x_tm.
inline std::array<std::array<Eigen::MatrixXcd, 2>, 2> monodromy(cplx u, cplx gamma, cplx x, int L) {
  const std::int64_t dim = std::int64_t{1} << L;
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> M;
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      M[c][a] = c == a ? Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(dim, dim)) : Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(dim, dim));
  for (int i = 1; i <= L; ++i) {
    const cplx th = i % 2 == 1 ? x / 2.0 : -x / 2.0;
    const Eigen::Matrix4cd R = r_matrix(u + th, gamma);
    const std::uint64_t mask = std::uint64_t{1} << (i - 1);
    std::array<std::array<Eigen::MatrixXcd, 2>, 2> N;
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a) N[c][a] = Eigen::MatrixXcd::Zero(dim, dim);
    // N[c][a'] = sum_a r_{ca} M[a][a'], r_{ca}[d][b] = R(2c + d, 2a + b) acting on site i
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a)
        for (int d = 0; d < 2; ++d)
          for (int b = 0; b < 2; ++b) {
            const cplx r = R(2 * c + d, 2 * a + b);
            if (r == 0.0) continue;
            for (std::int64_t s = 0; s < dim; ++s) {
              const std::uint64_t us = static_cast<std::uint64_t>(s);
              if (static_cast<int>((us & mask) != 0) != b) continue;
              const std::int64_t s2 = static_cast<std::int64_t>(d ? (us | mask) : (us & ~mask));
              for (int ap = 0; ap < 2; ++ap) N[c][ap].row(s2) += r * M[a][ap].row(s);
            }
          }
    M = std::move(N);
  }
  return M;
}

inline DenseOperator build_transfer_matrix(cplx u, const DerivedParams& p, int L) {
  check_L(L, 10, "build_transfer_matrix");
  auto M = monodromy(u, p.gamma, p.x_tm, L);
  DenseOperator T;
  T.L = L;
  T.label = "T(u)";
  T.M = M[0][0] + M[1][1];
  return T;
}

// c T(x/2 + b) T(-g + x/2 - b), c = (sin^2 g/(sin(g + x) sin(g - x)))^{L/2}, x = x_tm
inline DenseOperator double_row(cplx beta, const DerivedParams& p, int L) {
  const cplx xt = p.x_tm, g = p.gamma;
  DenseOperator D;
  D.L = L;
  D.label = "TT(beta)";
  D.M = transfer_prefactor(g, xt, L) * build_transfer_matrix(xt / 2.0 + beta, p, L).M *
        build_transfer_matrix(-g + xt / 2.0 - beta, p, L).M;
  return D;
}

struct ProportionalityCheck {
  cplx scalar;
  double deviation = 0.0;  // max |scalar A - B|
};

// best scalar with scalar A = B in Frobenius sense
inline ProportionalityCheck proportionality(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  ProportionalityCheck r;
  const cplx num = (A.adjoint() * B).trace();
  const double den = A.squaredNorm();
  r.scalar = num / den;
  r.deviation = max_abs(r.scalar * A - B);
  return r;
}

// U against T(x/2) T(-g - x/2) with x = x_tm; the scalar should have unit modulus after normalization
inline ProportionalityCheck floquet_vs_transfer(const DerivedParams& p, int L) {
  const cplx xt = p.x_tm, g = p.gamma;
  const Eigen::MatrixXcd TT = transfer_prefactor(g, xt, L) * build_transfer_matrix(xt / 2.0, p, L).M *
                              build_transfer_matrix(-g - xt / 2.0, p, L).M;
  return proportionality(TT, build_floquet(p, L).M);
}

// Q1^+ (branch +1) and Q1^- (branch -1), three-site terms on even (+) or odd (-) 1-based sites
inline std::vector<PauliTerm> charge_q1_terms(const DerivedParams& p, int L, int branch) {
  const cplx g = p.gamma, xt = p.x_tm;
  const cplx den = std::cos(2.0 * xt) - std::cos(2.0 * g);
  const cplx sg = std::sin(g), cg = std::cos(g), sx = std::sin(xt), cx = std::cos(xt);
  const cplx norm = std::abs(sg) / sg;
  std::vector<PauliTerm> terms;
  auto add = [&](cplx c, std::vector<std::pair<int, char>> ops) { terms.push_back({c * norm, std::move(ops)}); };
  for (int j = 1; j <= L; ++j) {
    const int k = wrap_site(j + 1, L);
    const cplx c2 = sg / den;
    add(c2 * cx, {{j, 'X'}, {k, 'X'}});
    add(c2 * cx, {{j, 'Y'}, {k, 'Y'}});
    add(c2 * cg, {{j, 'Z'}, {k, 'Z'}});
    add(-c2 * cg, {});
  }
  const double s3 = branch > 0 ? -1.0 : 1.0;
  for (int j = branch > 0 ? 2 : 1; j <= L; j += 2) {
    const int a = j, b = wrap_site(j + 1, L), c = wrap_site(j + 2, L);
    const cplx cn = -cg / sg * sx * sx / den;
    add(cn, {{a, 'X'}, {c, 'X'}});
    add(cn, {{a, 'Y'}, {c, 'Y'}});
    add(cn, {{a, 'Z'}, {c, 'Z'}});
    const cplx k3 = s3 * I * sx / den;
    add(k3 * cx, {{b, 'Z'}, {a, 'X'}, {c, 'Y'}});
    add(-k3 * cx, {{b, 'Z'}, {a, 'Y'}, {c, 'X'}});
    add(-k3 * cg, {{a, 'Z'}, {b, 'X'}, {c, 'Y'}});
    add(k3 * cg, {{a, 'Z'}, {b, 'Y'}, {c, 'X'}});
    add(-k3 * cg, {{a, 'X'}, {b, 'Y'}, {c, 'Z'}});
    add(k3 * cg, {{a, 'Y'}, {b, 'X'}, {c, 'Z'}});
  }
  return terms;
}

inline DenseOperator build_charge_q1(const DerivedParams& p, int L, int branch) {
  check_L(L, max_dense_L, "build_charge_q1");
  if (L < 6) throw Error(ErrorCode::InvalidSize, "exact_small", "charges need L >= 6");
  DenseOperator Q;
  Q.L = L;
  Q.label = branch > 0 ? "Q1+" : "Q1-";
  Q.M = pauli_sum_matrix(charge_q1_terms(p, L, branch), L);
  return Q;
}

// Upper-right monodromy block on the reference state, closed form in the one-magnon sector:
// amplitude at site j = prod_{i<j} sin(u_i)/sin g * prod_{i>j} sin(u_i + g)/sin g, u_i = v +- x/2
inline Eigen::VectorXcd b_on_reference(cplx v, cplx gamma, cplx x, int L) {
  Eigen::VectorXcd amp(L);
  const cplx sg = std::sin(gamma);
  for (int j = 1; j <= L; ++j) {
    cplx a = 1.0;
    for (int i = 1; i <= L; ++i) {
      if (i == j) continue;
      const cplx u = v + (i % 2 == 1 ? x / 2.0 : -x / 2.0);
      a *= i < j ? std::sin(u) / sg : std::sin(u + gamma) / sg;
    }
    amp[j - 1] = a;
  }
  return amp;
}

}  // namespace tdgge::exact

#endif
