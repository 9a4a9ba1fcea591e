#ifndef TDGGE_YSYSTEM_GAPLESS_HPP
#define TDGGE_YSYSTEM_GAPLESS_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tdgge/grid.hpp"
#include "tdgge/strings.hpp"
#include "tdgge/ysystem.hpp"

namespace tdgge {

// Truncated Y-system at gamma = pi/(nu1 + 1/nu2).
// For j >= nu1 the functions are evaluated at v = u + w_j p0 g/2 with w_j = (j - nu1 + 1) mod 2.
class YFamilyGapless {
 public:
  YFamilyGapless(const RootOfUnityPoint& r, const DerivedParams& p, double beta, int nu2_max = 2)
      : r_(r), q_(p.gamma, p.x, beta) {
    if (r.nu2 > nu2_max)
      throw Error(ErrorCode::UnsupportedRoot, "ysystem", "nu2 above the supported maximum");
    if (p.gapped()) throw Error(ErrorCode::InvalidArgument, "ysystem", "gapless parameters required");
    if (std::abs(p.gamma.real() - r.gamma()) > 1e-8)
      throw Error(ErrorCode::InvalidArgument, "ysystem", "gamma is not at the requested root of unity");
    n1_ = r.nu1;
    n2_ = r.nu2;
    NN_ = n1_ * n2_;
    Nb_ = n1_ + n2_;
    p0_ = n1_ + 1.0 / n2_;
    p1_ = 1.0;
    p2_ = 1.0 / n2_;
  }

  const QtmData& qtm() const { return q_; }
  int Nb() const { return Nb_; }
  double p0() const { return p0_; }
  double p1() const { return p1_; }
  double p2() const { return p2_; }
  int w(int j) const { return j >= n1_ ? (j - n1_ + 1) % 2 : 0; }

  cplx Y(int j, cplx u) const {
    if (j == 0) return 0.0;
    if (j <= n1_ - 1)
      return t(j + 1, u) * t(j - 1, u) /
             checked(psi_function(j, u, q_) * t(0, u + sh(j + 1)) * t(0, u - sh(j + 1)), "Y denominator");
    const cplx v = u + sh(w(j) * p0_);
    const int a = n1_ * (j + 1 - n1_) + 1;
    return t(n1_ * (j + 2 - n1_), v) * t(n1_ * (j - n1_), v) /
           checked(psi_function(n1_ * (j - n1_) + 1, v, q_) * t(n1_ - 1, v + sh(a)) * t(n1_ - 1, v + sh(-a)),
                   "Y denominator");
  }

  cplx Omega(cplx u) const {
    const double c = 1.0 + NN_;
    return std::sin(c * (u + q_.gamma / 2.0)) * std::sin(c * (u + q_.gamma / 2.0 + pi / 2)) /
           checked(std::sin(c * u) * std::sin(c * (u + pi / 2)), "Omega denominator");
  }
  cplx Omega1(cplx u) const { return std::pow(2.0, -NN_) * std::sin((1.0 + NN_) * (u + q_.x / 2.0)); }
  cplx Omega2(cplx u) const { return std::pow(2.0, -NN_) * std::sin((1.0 + NN_) * (u - q_.x / 2.0)); }

  cplx K(cplx u) const {
    const cplx v = u + sh((n2_ - 2) * p0_);
    const cplx w1 = v + sh(1);
    return t(NN_ - n1_, v) / checked(t(n1_ - 1, v + sh(1 + NN_)), "K denominator") *
           psi_function(n1_, v + sh(-(1 + NN_)), q_) /
           checked(Omega(w1) * Omega1(w1) * Omega2(w1), "K denominator");
  }

  cplx bfrak(cplx u) const {
    const double c = 1.0 + NN_;
    const double sgn = n2_ % 2 == 0 ? 1.0 : -1.0;
    return sgn * std::sin(c * (u + q_.x / 2.0) + NN_ * pi / 2) /
           checked(std::sin(c * (u - q_.x / 2.0) + NN_ * pi / 2), "bfrak denominator");
  }

  // relative residuals of every truncated relation at u, in order:
  // j = 1..nu1-2 (p1 shifts), j = nu1-1 >= 1 (four shifts), j = nu1..Nb-2 (p2 shifts),
  // 1 + Y_{Nb-1} = 1 + (b + 1/b)K + K^2, K^{[p2]}K^{[-p2]} = (1 + Y_{Nb-2})^{(-1)^nu2}
  std::vector<double> residuals(cplx u) const {
    std::vector<double> out;
    auto S = [&](double k) { return u + sh(k); };
    for (int j = 1; j <= n1_ - 2; ++j) {
      const cplx l = Y(j, S(p1_)) * Y(j, S(-p1_));
      out.push_back(rel(l, (1.0 + Y(j + 1, u)) * (1.0 + Y(j - 1, u))));
    }
    // at nu1 = 1 this would be a relation for Y_0 = 0, so there is none
    if (n1_ >= 2) {
      const int j = n1_ - 1;
      const cplx l = Y(j, S(p1_ + p2_)) * Y(j, S(-p1_ - p2_)) * Y(j, S(p1_ - p2_)) * Y(j, S(-p1_ + p2_));
      const cplx r = (1.0 + Y(j - 1, S(p2_))) * (1.0 + Y(j - 1, S(-p2_))) *
                     (1.0 + Y(n1_, S(p1_))) * (1.0 + Y(n1_, S(-p1_))) * (1.0 + Y(j, S(p1_ - p2_))) *
                     (1.0 + Y(j, S(-p1_ + p2_)));
      out.push_back(rel(l, r));
    }
    for (int j = n1_; j <= Nb_ - 2; ++j) {
      const cplx l = Y(j, S(p2_)) * Y(j, S(-p2_));
      const int e = j == n1_ ? -1 : 1;
      out.push_back(rel(l, (1.0 + Y(j + 1, u)) * std::pow(1.0 + Y(j - 1, u), e)));
    }
    const cplx k = K(u), b = bfrak(u);
    out.push_back(rel(1.0 + Y(Nb_ - 1, u), 1.0 + (b + 1.0 / b) * k + k * k));
    const int e = n2_ % 2 == 0 ? 1 : -1;
    out.push_back(rel(K(S(p2_)) * K(S(-p2_)), std::pow(1.0 + Y(Nb_ - 2, u), e)));
    return out;
  }

  // eta_1..eta_Nb at u (before the beta limit)
  std::vector<cplx> eta_raw(cplx u) const {
    std::vector<cplx> out;
    for (int j = 1; j <= Nb_ - 2; ++j) out.push_back(Y(j, u));
    const cplx k = K(u), b = bfrak(u);
    out.push_back(b * k);
    out.push_back(b / k);
    return out;
  }

 private:
  cplx sh(double k) const { return q_.sh(k); }
  cplx t(int j, cplx u) const { return t_function(j, u, q_); }

  RootOfUnityPoint r_;
  QtmData q_;
  int n1_, n2_, NN_, Nb_;
  double p0_, p1_, p2_;
};

inline YFamilyGapless build_y_gapless(const RootOfUnityPoint& r, const DerivedParams& p, double beta) {
  return YFamilyGapless(r, p, beta);
}

// eta_j(lambda) = lim Y_j(i lambda), j <= Nb-2; eta_{Nb-1} = lim bK, eta_Nb = lim b/K
class EtaFamilyGapless {
 public:
  EtaFamilyGapless(const RootOfUnityPoint& r, const DerivedParams& p, BetaLimit cfg = {})
      : r_(r), p_(p), cfg_(cfg) {
    for (double b : cfg_.betas) fam_.emplace_back(r, p, b);
  }

  int size() const { return r_.Nb(); }
  const RootOfUnityPoint& root() const { return r_; }
  const DerivedParams& params() const { return p_; }

  std::vector<cplx> evaluate(double lambda) const {
    std::array<std::vector<cplx>, 3> v;
    for (int i = 0; i < 3; ++i)
      v[i] = eval_nudged(fam_[i], cplx(0.0, lambda));
    const double r = cfg_.betas[0] / cfg_.betas[1];
    std::vector<cplx> out(v[0].size());
    for (size_t k = 0; k < out.size(); ++k) {
      const cplx e1 = v[1][k] + (v[1][k] - v[0][k]) / (r - 1.0);
      const cplx e2 = v[2][k] + (v[2][k] - v[1][k]) / (r - 1.0);
      if (!(std::abs(e1 - e2) < cfg_.tol * std::max(1.0, std::abs(e2))))
        throw Error(ErrorCode::LimitNotConverged, "ysystem", "beta -> 0 extrapolants disagree");
      out[k] = e2;
    }
    return out;
  }

  Eigen::MatrixXd sample(const Grid& g, double* imag_residue = nullptr) const {
    Eigen::MatrixXd S(size(), g.size());
    double worst = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      const auto v = evaluate(g.nodes[k]);
      for (int j = 0; j < size(); ++j) {
        S(j, k) = v[j].real();
        worst = std::max(worst, std::abs(v[j].imag()) / std::max(1.0, std::abs(v[j])));
      }
    }
    if (imag_residue) *imag_residue = worst;
    return S;
  }

 private:
  static std::vector<cplx> eval_nudged(const YFamilyGapless& f, cplx u) {
    try {
      return f.eta_raw(u);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PoleProximity) throw;
      return f.eta_raw(u + 1e-9);
    }
  }

  RootOfUnityPoint r_;
  DerivedParams p_;
  BetaLimit cfg_;
  std::vector<YFamilyGapless> fam_;
};

}  // namespace tdgge

#endif
