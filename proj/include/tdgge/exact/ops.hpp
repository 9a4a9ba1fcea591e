#ifndef TDGGE_EXACT_OPS_HPP
#define TDGGE_EXACT_OPS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"

namespace tdgge::exact {

// Site i (1-based) is bit i-1; bit 1 is the down state |1>.
inline constexpr int max_dense_L = 12;
inline constexpr int max_state_L = 14;

struct DenseOperator {
  Eigen::MatrixXcd M;
  int L = 0;
  std::string label;
};

struct DenseState {
  Eigen::VectorXcd v;
  int L = 0;
};

inline void check_L(int L, int max_L, const char* what) {
  if (L < 2 || L % 2 != 0) throw Error(ErrorCode::InvalidSize, "exact_small", std::string(what) + ": L must be even");
  if (L > max_L)
    throw Error(ErrorCode::SizeBudgetExceeded, "exact_small", std::string(what) + ": L above dense budget");
}

inline int bit(std::uint64_t s, int site) { return static_cast<int>((s >> (site - 1)) & 1u); }
inline double sz_value(std::uint64_t s, int site) { return 1.0 - 2.0 * bit(s, site); }

// Neel: odd sites up, even sites down
inline std::uint64_t neel_bits(int L) {
  std::uint64_t s = 0;
  for (int i = 2; i <= L; i += 2) s |= std::uint64_t{1} << (i - 1);
  return s;
}

inline DenseState neel_state(int L) {
  check_L(L, max_state_L, "neel_state");
  DenseState st;
  st.L = L;
  st.v = Eigen::VectorXcd::Zero(std::int64_t{1} << L);
  st.v[static_cast<Eigen::Index>(neel_bits(L))] = 1.0;
  return st;
}

// Pauli string: list of (site, 'X'|'Y'|'Z') with a coefficient
struct PauliTerm {
  cplx coef;
  std::vector<std::pair<int, char>> ops;
};

inline std::pair<std::uint64_t, cplx> apply_pauli(const PauliTerm& t, std::uint64_t s) {
  cplx amp = t.coef;
  for (auto it = t.ops.rbegin(); it != t.ops.rend(); ++it) {
    const int b = bit(s, it->first);
    const std::uint64_t m = std::uint64_t{1} << (it->first - 1);
    switch (it->second) {
      case 'X': s ^= m; break;
      case 'Y': amp *= b == 0 ? I : -I; s ^= m; break;
      case 'Z': amp *= b == 0 ? 1.0 : -1.0; break;
      default: throw Error(ErrorCode::InvalidArgument, "exact_small", "unknown Pauli label");
    }
  }
  return {s, amp};
}

inline Eigen::MatrixXcd pauli_sum_matrix(const std::vector<PauliTerm>& terms, int L) {
  const std::int64_t dim = std::int64_t{1} << L;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& t : terms)
    for (std::int64_t s = 0; s < dim; ++s) {
      auto [s2, a] = apply_pauli(t, static_cast<std::uint64_t>(s));
      M(static_cast<Eigen::Index>(s2), s) += a;
    }
  return M;
}

inline int wrap_site(int i, int L) { return (i - 1) % L + 1; }

// one-site translation: site i -> i + 1
inline DenseOperator translation(int L) {
  check_L(L, max_dense_L, "translation");
  const std::int64_t dim = std::int64_t{1} << L;
  DenseOperator T;
  T.L = L;
  T.label = "T";
  T.M = Eigen::MatrixXcd::Zero(dim, dim);
  const std::uint64_t mask = (std::uint64_t{1} << L) - 1;
  for (std::int64_t s = 0; s < dim; ++s) {
    const std::uint64_t u = static_cast<std::uint64_t>(s);
    const std::uint64_t r = ((u << 1) | (u >> (L - 1))) & mask;
    T.M(static_cast<Eigen::Index>(r), s) = 1.0;
  }
  return T;
}

inline DenseOperator magnon_number(int L) {
  check_L(L, max_dense_L, "magnon_number");
  const std::int64_t dim = std::int64_t{1} << L;
  DenseOperator M;
  M.L = L;
  M.label = "M";
  M.M = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::int64_t s = 0; s < dim; ++s) M.M(s, s) = __builtin_popcountll(static_cast<std::uint64_t>(s));
  return M;
}

inline double max_abs(const Eigen::MatrixXcd& A) { return A.cwiseAbs().maxCoeff(); }

}  // namespace tdgge::exact

#endif
