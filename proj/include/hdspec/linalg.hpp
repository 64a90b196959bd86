#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace hdspec::linalg {

// Operator norm (largest singular value) via the spectrum of A*A. Cheaper and
// just as deterministic as a full SVD for the matrix sizes used here.
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Mat gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("op_norm: eigensolver failed");
  const double top = es.eigenvalues().maxCoeff();
  return top > 0.0 ? std::sqrt(top) : 0.0;
}

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat result = (a + a.adjoint()) / Scalar(2);
  return result;
}

}  // namespace hdspec::linalg
