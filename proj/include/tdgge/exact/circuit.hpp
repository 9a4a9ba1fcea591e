#ifndef TDGGE_EXACT_CIRCUIT_HPP
#define TDGGE_EXACT_CIRCUIT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "tdgge/exact/ops.hpp"

namespace tdgge::exact {

// V = exp(-i tau h), h = (XX + YY + Delta (ZZ - 1))/4; basis |ab>, index 2a + b
inline Eigen::Matrix4cd build_gate(double delta, double tau) {
  Eigen::Matrix4cd V = Eigen::Matrix4cd::Identity();
  const cplx ph = std::exp(I * (tau * delta / 2));
  V(1, 1) = V(2, 2) = ph * std::cos(tau / 2);
  V(1, 2) = V(2, 1) = -I * ph * std::sin(tau / 2);
  return V;
}

struct GatePair {
  int a, b;  // 1-based sites
};

// U_o acts on (2n, 2n+1) including (L, 1); U_e on (2n-1, 2n). U = U_e U_o.
inline std::vector<GatePair> odd_layer(int L) {
  std::vector<GatePair> g;
  for (int n = 1; n <= L / 2; ++n) g.push_back({2 * n, wrap_site(2 * n + 1, L)});
  return g;
}
inline std::vector<GatePair> even_layer(int L) {
  std::vector<GatePair> g;
  for (int n = 1; n <= L / 2; ++n) g.push_back({2 * n - 1, 2 * n});
  return g;
}

// in-place gate on a vector indexed by full basis states (mapped through idx)
template <class Vec, class Index>
inline void apply_gate_generic(Vec& v, const std::vector<std::uint64_t>& states, const Index& idx, int a, int b,
                               const Eigen::Matrix4cd& V) {
  const std::uint64_t ma = std::uint64_t{1} << (a - 1), mb = std::uint64_t{1} << (b - 1);
  const cplx d = V(1, 1), o = V(1, 2), e00 = V(0, 0), e11 = V(3, 3);
  for (size_t k = 0; k < states.size(); ++k) {
    const std::uint64_t s = states[k];
    const bool ba = s & ma, bb = s & mb;
    if (ba == bb) {
      v[k] *= ba ? e11 : e00;
      continue;
    }
    if (ba) continue;  // handle each flipped pair once, from the |0 1> member
    const size_t k2 = idx(s ^ ma ^ mb);
    const cplx x = v[k], y = v[k2];
    v[k] = d * x + o * y;
    v[k2] = o * x + d * y;
  }
}

inline void apply_gate(Eigen::VectorXcd& psi, int L, int a, int b, const Eigen::Matrix4cd& V) {
  const std::uint64_t ma = std::uint64_t{1} << (a - 1), mb = std::uint64_t{1} << (b - 1);
  const std::int64_t dim = std::int64_t{1} << L;
  const cplx d = V(1, 1), o = V(1, 2);
  for (std::int64_t s = 0; s < dim; ++s) {
    const std::uint64_t u = static_cast<std::uint64_t>(s);
    if ((u & ma) || !(u & mb)) continue;  // s has a = 0, b = 1
    const std::int64_t t = static_cast<std::int64_t>(u ^ ma ^ mb);
    const cplx x = psi[s], y = psi[t];
    psi[s] = d * x + o * y;
    psi[t] = o * x + d * y;
  }
}

inline void apply_floquet(Eigen::VectorXcd& psi, int L, const Eigen::Matrix4cd& V) {
  for (const auto& g : odd_layer(L)) apply_gate(psi, L, g.a, g.b, V);
  for (const auto& g : even_layer(L)) apply_gate(psi, L, g.a, g.b, V);
}

inline DenseOperator two_site(const Eigen::Matrix4cd& V, int L, int a, int b) {
  const std::int64_t dim = std::int64_t{1} << L;
  DenseOperator op;
  op.L = L;
  op.M = Eigen::MatrixXcd::Identity(dim, dim);
  for (std::int64_t c = 0; c < dim; ++c) {
    Eigen::VectorXcd col = op.M.col(c);
    apply_gate(col, L, a, b, V);
    op.M.col(c) = col;
  }
  return op;
}

inline DenseOperator build_floquet(const DerivedParams& p, int L) {
  check_L(L, max_dense_L, "build_floquet");
  const Eigen::Matrix4cd V = build_gate(p.delta, p.tau);
  const std::int64_t dim = std::int64_t{1} << L;
  DenseOperator U;
  U.L = L;
  U.label = "U";
  U.M = Eigen::MatrixXcd::Identity(dim, dim);
  for (std::int64_t c = 0; c < dim; ++c) {
    Eigen::VectorXcd col = U.M.col(c);
    apply_floquet(col, L, V);
    U.M.col(c) = col;
  }
  return U;
}

inline DenseOperator build_floquet(double delta, double tau, int L) {
  check_L(L, max_dense_L, "build_floquet");
  DerivedParams p;
  p.delta = delta;
  p.tau = tau;
  return build_floquet(p, L);
}

// H = sum_j (XX + YY + Delta (ZZ - 1))/4 over periodic bonds
inline DenseOperator build_hamiltonian(double delta, int L) {
  check_L(L, max_dense_L, "build_hamiltonian");
  std::vector<PauliTerm> terms;
  for (int j = 1; j <= L; ++j) {
    const int k = wrap_site(j + 1, L);
    terms.push_back({0.25, {{j, 'X'}, {k, 'X'}}});
    terms.push_back({0.25, {{j, 'Y'}, {k, 'Y'}}});
    terms.push_back({0.25 * delta, {{j, 'Z'}, {k, 'Z'}}});
    terms.push_back({-0.25 * delta, {}});
  }
  DenseOperator H;
  H.L = L;
  H.label = "H";
  H.M = pauli_sum_matrix(terms, L);
  return H;
}

// || U(t/M)^M - exp(-i H t) ||_max for each M
inline std::vector<double> trotter_errors(double delta, double t, int L, const std::vector<int>& Ms) {
  const auto H = build_hamiltonian(delta, L);
  const Eigen::MatrixXcd exact = (-I * t * H.M).exp();
  std::vector<double> out;
  for (int M : Ms) {
    const auto U = build_floquet(delta, t / M, L);
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(U.M.rows(), U.M.cols());
    for (int k = 0; k < M; ++k) P = U.M * P;
    out.push_back(max_abs(P - exact));
  }
  return out;
}

struct EvolutionResult {
  Eigen::MatrixXd sz;  // (steps + 1) x L, <sigma^z_j(t)>
  int window_begin = 0;
  int window_end = 0;
  double tail_site0 = 0.0;  // running average over the window, sublattice of site 1
  double tail_site1 = 0.0;
  double max_antisymmetry = 0.0;  // max |<sz_{2j}> + <sz_{2j+1}>| over all steps
};

inline EvolutionResult evolve_and_average(const DerivedParams& p, int L, int steps, int window_begin,
                                          int window_end) {
  check_L(L, max_state_L, "evolve_and_average");
  if (steps < 0 || steps > 100000)
    throw Error(ErrorCode::InvalidArgument, "exact_small", "steps must lie in [0, 1e5]");
  if (window_begin < 0 || window_end > steps || window_begin > window_end)
    throw Error(ErrorCode::InvalidArgument, "exact_small", "averaging window outside [0, steps]");
  const Eigen::Matrix4cd V = build_gate(p.delta, p.tau);
  Eigen::VectorXcd psi = neel_state(L).v;
  const std::int64_t dim = psi.size();
  EvolutionResult r;
  r.window_begin = window_begin;
  r.window_end = window_end;
  r.sz.resize(steps + 1, L);
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) apply_floquet(psi, L, V);
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(L);
    for (std::int64_t s = 0; s < dim; ++s) {
      const double w = std::norm(psi[s]);
      if (w == 0.0) continue;
      for (int i = 1; i <= L; ++i) m[i - 1] += w * sz_value(static_cast<std::uint64_t>(s), i);
    }
    r.sz.row(t) = m;
    for (int j = 1; j <= L; j += 2) r.max_antisymmetry = std::max(r.max_antisymmetry, std::abs(m[j - 1] + m[j]));
  }
  const int n = window_end - window_begin + 1;
  for (int t = window_begin; t <= window_end; ++t) {
    for (int i = 1; i <= L; i += 2) r.tail_site0 += r.sz(t, i - 1);
    for (int i = 2; i <= L; i += 2) r.tail_site1 += r.sz(t, i - 1);
  }
  r.tail_site0 /= n * (L / 2);
  r.tail_site1 /= n * (L / 2);
  return r;
}

}  // namespace tdgge::exact

#endif
