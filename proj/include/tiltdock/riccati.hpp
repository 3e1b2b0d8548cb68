#pragma once

// Continuous-time algebraic Riccati solver via the matrix sign function.
//
// Solves AᵀP + PA − P B N⁻¹ Bᵀ P + M = 0 for the stabilizing P ⪰ 0 using
// Newton's iteration with determinant scaling on the Hamiltonian.  This is
// dependency-free (plain Eigen) and robust for the small, well-conditioned
// systems built here (state dimension ≤ 9).

#include <cmath>
#include <stdexcept>

#include "tiltdock/core.hpp"

namespace tiltdock {

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CareSolution {
  MatX P;
  double residual = 0.0;  // relative Frobenius residual of the equation
  int iterations = 0;
};

namespace detail {

// sign(H) by scaled Newton iteration: Z ← (cZ + (cZ)⁻¹)/2.
inline MatX matrix_sign(MatX z, int* iterations) {
  const int n = static_cast<int>(z.rows());
  const double tol = 1e-13;
  int k = 0;
  for (; k < 120; ++k) {
    Eigen::PartialPivLU<MatX> lu(z);
    // determinant scaling via log|det| to avoid overflow
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) log_det += std::log(std::abs(lu.matrixLU()(i, i)));
    if (!std::isfinite(log_det)) throw RiccatiError("sign iteration became singular");
    const double c = std::exp(-log_det / n);
    const MatX z_inv = lu.solve(MatX::Identity(n, n));
    MatX next = 0.5 * (c * z + z_inv / c);
    const double diff = (next - z).lpNorm<1>();
    z = std::move(next);
    if (!z.allFinite()) throw RiccatiError("sign iteration diverged");
    if (diff <= tol * z.lpNorm<1>()) break;
  }
  // unscaled polish
  for (int r = 0; r < 2; ++r) {
    const MatX z_inv = Eigen::PartialPivLU<MatX>(z).solve(MatX::Identity(n, n));
    z = 0.5 * (z + z_inv);
  }
  if (iterations) *iterations = k + 1;
  if (k >= 120) throw RiccatiError("sign iteration did not converge");
  return z;
}

}  // namespace detail

inline CareSolution solve_care(const MatX& A, const MatX& B, const MatX& M, const MatX& N) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || M.rows() != n || M.cols() != n || N.rows() != m ||
      N.cols() != m) {
    throw std::invalid_argument("riccati: inconsistent dimensions");
  }
  Eigen::LLT<MatX> n_llt(N);
  if (n_llt.info() != Eigen::Success) throw RiccatiError("input weight N is not positive-definite");

  const MatX G = B * n_llt.solve(B.transpose());  // B N⁻¹ Bᵀ
  MatX H(2 * n, 2 * n);
  H << A, -G, -M, -A.transpose();

  CareSolution sol;
  const MatX S = detail::matrix_sign(H, &sol.iterations);

  // stable invariant subspace: (S + I)[I; P]X = 0
  MatX lhs(2 * n, n), rhs(2 * n, n);
  lhs << S.topRightCorner(n, n), S.bottomRightCorner(n, n) + MatX::Identity(n, n);
  rhs << -(S.topLeftCorner(n, n) + MatX::Identity(n, n)), -S.bottomLeftCorner(n, n);
  sol.P = lhs.colPivHouseholderQr().solve(rhs);
  sol.P = 0.5 * (sol.P + sol.P.transpose()).eval();
  if (!sol.P.allFinite()) throw RiccatiError("Riccati solution not finite");

  const MatX res =
      A.transpose() * sol.P + sol.P * A - sol.P * G * sol.P + M;
  sol.residual = res.norm() / (1.0 + M.norm() + sol.P.norm());
  if (sol.residual > 1e-6) throw RiccatiError("Riccati residual too large (non-stabilizable pair?)");
  return sol;
}

// LQR convenience: gain K = N⁻¹BᵀP for the cost ∫ xᵀMx + uᵀNu dt.
inline MatX lqr_gain(const MatX& A, const MatX& B, const MatX& M, const MatX& N,
                     CareSolution* solution = nullptr) {
  CareSolution sol = solve_care(A, B, M, N);
  const MatX K = Eigen::LLT<MatX>(N).solve(B.transpose() * sol.P);
  if (solution) *solution = std::move(sol);
  return K;
}

}  // namespace tiltdock
