#ifndef ISCAP_RAYLEIGH_HPP
#define ISCAP_RAYLEIGH_HPP

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "iscap/common.hpp"

namespace iscap {

struct RayleighResult {
  double value = 0.0;        // max of u^H A u / u^H B u
  Eigen::VectorXcd vector;   // maximizer, unit Euclidean norm
};

// Maximizes the generalized Rayleigh quotient u^H A u / u^H B u for
// Hermitian A (PSD) and Hermitian positive definite B, by reducing to
// an ordinary Hermitian eigenproblem of L^-1 A L^-H with B = L L^H.
inline RayleighResult generalized_rayleigh_max(const Eigen::MatrixXcd& a,
                                               const Eigen::MatrixXcd& b) {
  if (a.rows() == 0 || a.rows() != a.cols() || b.rows() != b.cols() ||
      a.rows() != b.rows())
    throw std::invalid_argument("matrices must be square, nonempty, same size");
  const double scale_a = a.cwiseAbs().maxCoeff();
  const double scale_b = b.cwiseAbs().maxCoeff();
  if (!((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + scale_a)))
    throw std::invalid_argument("a must be Hermitian");
  if (!((b - b.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + scale_b)))
    throw std::invalid_argument("b must be Hermitian");
  const Eigen::LLT<Eigen::MatrixXcd> llt(b);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("b must be positive definite");
  const Eigen::MatrixXcd l = llt.matrixL();
  // C = L^-1 A L^-H shares eigenvalues with B^-1 A.
  const Eigen::MatrixXcd li_a =
      l.triangularView<Eigen::Lower>().solve(a);
  const Eigen::MatrixXcd c =
      l.triangularView<Eigen::Lower>()
          .solve(li_a.adjoint())
          .adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
  if (es.info() != Eigen::Success)
    throw std::invalid_argument("eigendecomposition failed");
  const Eigen::Index last = c.rows() - 1;  // eigenvalues ascend
  RayleighResult r;
  r.value = es.eigenvalues()[last];
  Eigen::VectorXcd u = l.adjoint()
                           .triangularView<Eigen::Upper>()
                           .solve(es.eigenvectors().col(last));
  r.vector = u / u.norm();
  return r;
}

}  // namespace iscap

#endif  // ISCAP_RAYLEIGH_HPP
