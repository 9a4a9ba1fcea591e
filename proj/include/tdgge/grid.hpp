#ifndef TDGGE_GRID_HPP
#define TDGGE_GRID_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "tdgge/errors.hpp"
#include "tdgge/params.hpp"

namespace tdgge {

enum class Domain { PeriodicBrillouin, TruncatedLine };

struct Grid {
  Domain domain = Domain::PeriodicBrillouin;
  double cutoff = 20.0;  // Lambda, line only
  double offset = 0.0;   // node offset in units of the spacing
  double h = 0.0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(nodes.size()); }
  double length() const { return domain == Domain::PeriodicBrillouin ? pi : 2.0 * cutoff; }
  double integrate(const Eigen::VectorXd& f) const { return weights.dot(f); }
};

// offset defaults: 0 on the Brillouin zone, 1/2 on the line (symmetric midpoint rule)
inline Grid make_grid(Domain domain, int N, double cutoff = 20.0,
                      std::optional<double> offset = std::nullopt) {
  if (N < 8) throw Error(ErrorCode::InvalidSize, "kernels_grids", "grid needs N >= 8");
  if (domain == Domain::TruncatedLine && !(cutoff > 0))
    throw Error(ErrorCode::InvalidArgument, "kernels_grids", "cutoff must be positive");
  Grid g;
  g.domain = domain;
  g.cutoff = cutoff;
  g.offset = offset.value_or(domain == Domain::PeriodicBrillouin ? 0.0 : 0.5);
  const double a = domain == Domain::PeriodicBrillouin ? -pi / 2 : -cutoff;
  g.h = g.length() / N;
  g.nodes.resize(N);
  for (int k = 0; k < N; ++k) g.nodes[k] = a + (k + g.offset) * g.h;
  g.weights = Eigen::VectorXd::Constant(N, g.h);
  return g;
}

// Midpoint grids used by the solvers: no node sits on lambda = 0.
inline Grid solver_grid(Domain domain, int N, double cutoff = 20.0) {
  return make_grid(domain, N, cutoff, 0.5);
}

using RealKernel = std::function<double(double)>;

// Dense quadrature matrix M_ij = K(lambda_i - lambda_j) w_j.
inline Eigen::MatrixXd kernel_matrix(const Grid& g, const RealKernel& K) {
  const int N = g.size();
  Eigen::MatrixXd M(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) M(i, j) = K(g.nodes[i] - g.nodes[j]) * g.weights[j];
  return M;
}

inline Eigen::VectorXd convolve(const Grid& g, const RealKernel& K, const Eigen::VectorXd& f) {
  if (f.size() != g.size())
    throw Error(ErrorCode::GridMismatch, "kernels_grids", "function not sampled on this grid");
  return kernel_matrix(g, K) * f;
}

// FFT convolution on a uniform grid. Periodic domain: circulant (kernel is pi-periodic).
// Line: Toeplitz, embedded in a circulant of twice the size.
class Spectral {
 public:
  explicit Spectral(const Grid& g) : N_(g.size()), h_(g.h), periodic_(g.domain == Domain::PeriodicBrillouin) {
    M_ = periodic_ ? N_ : 2 * N_;
  }

  int size() const { return N_; }
  int padded() const { return M_; }

  Eigen::VectorXcd kernel_hat(const RealKernel& K) const {
    std::vector<cplx> c(M_, 0.0);
    if (periodic_) {
      for (int k = 0; k < N_; ++k) c[k] = K(k * h_) * h_;
    } else {
      for (int k = 0; k < N_; ++k) c[k] = K(k * h_) * h_;
      for (int k = 1; k < N_; ++k) c[M_ - k] = K(-k * h_) * h_;
    }
    return forward_raw(c);
  }

  Eigen::VectorXcd forward(const Eigen::VectorXd& f) const {
    std::vector<cplx> c(M_, 0.0);
    for (int k = 0; k < N_; ++k) c[k] = f[k];
    return forward_raw(c);
  }

  Eigen::VectorXd inverse(const Eigen::VectorXcd& F) const {
    std::vector<cplx> in(F.data(), F.data() + M_), out;
    fft_.inv(out, in);
    Eigen::VectorXd r(N_);
    for (int k = 0; k < N_; ++k) r[k] = out[k].real();
    return r;
  }

  Eigen::VectorXd apply(const Eigen::VectorXcd& khat, const Eigen::VectorXd& f) const {
    return inverse(khat.cwiseProduct(forward(f)));
  }

 private:
  Eigen::VectorXcd forward_raw(const std::vector<cplx>& c) const {
    std::vector<cplx> out;
    fft_.fwd(out, c);
    return Eigen::Map<Eigen::VectorXcd>(out.data(), M_);
  }

  int N_, M_;
  double h_;
  bool periodic_;
  mutable Eigen::FFT<double> fft_;
};

}  // namespace tdgge

#endif
