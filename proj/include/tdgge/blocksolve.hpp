#ifndef TDGGE_BLOCKSOLVE_HPP
#define TDGGE_BLOCKSOLVE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/IterativeSolvers>

#include "tdgge/errors.hpp"
#include "tdgge/grid.hpp"

namespace tdgge {

// Block system  x_n + L_n * sum_m K_nm * (R_m x_m) = b_n  on a uniform grid,
// K_nm convolution kernels given by their FFT symbols, L and R pointwise weights.
struct BlockSystem {
  const Spectral* sp = nullptr;
  int ns = 0;
  std::vector<std::vector<Eigen::VectorXcd>> khat;
  Eigen::MatrixXd left;   // ns x N
  Eigen::MatrixXd right;  // ns x N

  int N() const { return sp->size(); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(ns) * N(); }

  Eigen::VectorXd kernel_part(const Eigen::VectorXd& x) const {
    const int n = N();
    std::vector<Eigen::VectorXcd> X(ns);
    for (int m = 0; m < ns; ++m)
      X[m] = sp->forward(right.row(m).transpose().cwiseProduct(x.segment(m * n, n)));
    Eigen::VectorXd y(dim());
    for (int a = 0; a < ns; ++a) {
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(sp->padded());
      for (int m = 0; m < ns; ++m) acc += khat[a][m].cwiseProduct(X[m]);
      y.segment(a * n, n) = left.row(a).transpose().cwiseProduct(sp->inverse(acc));
    }
    return y;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return x + kernel_part(x); }
};

class BlockOperator;

}  // namespace tdgge

namespace Eigen::internal {
template <>
struct traits<tdgge::BlockOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace tdgge {

class BlockOperator : public Eigen::EigenBase<BlockOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  explicit BlockOperator(const BlockSystem& s) : sys_(&s) {}
  Eigen::Index rows() const { return sys_->dim(); }
  Eigen::Index cols() const { return sys_->dim(); }

  template <typename Rhs>
  Eigen::Product<BlockOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<BlockOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  const BlockSystem& system() const { return *sys_; }

 private:
  const BlockSystem* sys_;
};

}  // namespace tdgge

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<tdgge::BlockOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<tdgge::BlockOperator, Rhs,
                                generic_product_impl<tdgge::BlockOperator, Rhs>> {
  using Scalar = typename Product<tdgge::BlockOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const tdgge::BlockOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
    Eigen::VectorXd x = rhs;
    dst.noalias() += alpha * lhs.system().apply(x);
  }
};
}  // namespace Eigen::internal

namespace tdgge {

enum class LinearMethod { Krylov, Dense };

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // sup norm of apply(x) - b
  LinearMethod method = LinearMethod::Krylov;
};

inline Eigen::MatrixXd dense_matrix(const BlockSystem& s) {
  const Eigen::Index n = s.dim();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    A.col(j) = s.apply(e);
    e[j] = 0.0;
  }
  return A;
}

inline Eigen::VectorXd solve_block(const BlockSystem& s, const Eigen::VectorXd& b, double tol,
                                   int max_iter, const std::string& module, SolveReport* rep = nullptr,
                                   LinearMethod method = LinearMethod::Krylov,
                                   const Eigen::VectorXd* guess = nullptr) {
  Eigen::VectorXd x;
  SolveReport r;
  r.method = method;
  if (method == LinearMethod::Dense) {
    x = dense_matrix(s).partialPivLu().solve(b);
  } else {
    BlockOperator op(s);
    Eigen::GMRES<BlockOperator, Eigen::IdentityPreconditioner> gm;
    gm.compute(op);
    gm.set_restart(120);
    gm.setMaxIterations(max_iter);
    const double bn = b.norm();
    gm.setTolerance(bn > 0 ? std::clamp(0.1 * tol / bn, 1e-15, 1e-3) : tol);
    x = guess ? Eigen::VectorXd(gm.solveWithGuess(b, *guess)) : Eigen::VectorXd(gm.solve(b));
    r.iterations = static_cast<int>(gm.iterations());
  }
  r.residual = (s.apply(x) - b).lpNorm<Eigen::Infinity>();
  if (rep) *rep = r;
  if (!(r.residual < tol))
    throw Error(ErrorCode::NoConvergence, module,
                "linear solve residual " + std::to_string(r.residual) + " above tolerance");
  return x;
}

}  // namespace tdgge

#endif
