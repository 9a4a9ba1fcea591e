#ifndef TDGGE_STRINGS_HPP
#define TDGGE_STRINGS_HPP

#include <vector>

#include "tdgge/params.hpp"

namespace tdgge {

struct StringEntry {
  int n = 1;        // number of rapidities in the string
  int upsilon = 1;  // parity
  double q = 0.0;
  int sigma = 1;    // sign of q
};

struct StringTable {
  RootOfUnityPoint root;
  std::vector<StringEntry> entries;
  std::vector<double> p;  // p_0, p_1, p_2
  std::vector<int> m;     // m_0, m_1, m_2

  int size() const { return static_cast<int>(entries.size()); }
  const StringEntry& operator[](int j) const { return entries[j]; }
};

// Strings (1,+) .. (nu1-1,+), (1,-), (1+nu1, .), .., last (nu1,+).
// Middle parities alternate starting from - at p = nu1.
inline StringTable build_string_table(const RootOfUnityPoint& r) {
  if (r.nu1 < 1 || r.nu2 < 1)
    throw Error(ErrorCode::InvalidArgument, "kernels_grids", "nu1, nu2 must be >= 1");
  StringTable t;
  t.root = r;
  const int n1 = r.nu1, n2 = r.nu2, Nb = r.Nb();
  t.p = {n1 + 1.0 / n2, 1.0, 1.0 / n2};
  t.m = {0, n1, Nb};
  for (int p = 1; p <= Nb; ++p) {
    StringEntry e;
    if (p <= n1 - 1) {
      e.n = p;
      e.upsilon = 1;
      e.q = t.p[0] - p;
    } else if (p <= Nb - 1) {
      e.n = 1 + (p - n1) * n1;
      e.upsilon = p == n1 ? -1 : ((p - n1 - 1) % 2 == 0 ? 1 : -1);
      e.q = (p - n1) / static_cast<double>(n2) - 1.0;
    } else {
      e.n = n1;
      e.upsilon = 1;
      e.q = 1.0 / n2;
    }
    e.sigma = e.q > 0 ? 1 : -1;
    t.entries.push_back(e);
  }
  return t;
}

}  // namespace tdgge

#endif
