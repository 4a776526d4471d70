#pragma once

#include <Eigen/Dense>

#include "scf/errors.hpp"

namespace scf {

/// Generalized cross product in R^4: the vector orthogonal to a, b, c whose
/// pairing with any d equals det[d a b c].
inline Eigen::Vector4d cross4(const Eigen::Vector4d& a, const Eigen::Vector4d& b,
                              const Eigen::Vector4d& c) {
  Eigen::Vector4d out;
  Eigen::Matrix3d m;
  for (int i = 0; i < 4; ++i) {
    int r = 0;
    for (int k = 0; k < 4; ++k) {
      if (k == i) continue;
      m(0, r) = a(k);
      m(1, r) = b(k);
      m(2, r) = c(k);
      ++r;
    }
    out(i) = ((i % 2) == 0 ? 1.0 : -1.0) * m.determinant();
  }
  return out;
}

/// Orthonormal basis of the orthogonal complement of the column span of m.
/// Columns of the result span ker(m^T).
inline Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(m.rows() - m.cols());
}

/// Best orthogonal alignment R minimizing ||ref - cur * R||_F (Procrustes).
inline Eigen::MatrixXd procrustes(const Eigen::MatrixXd& cur,
                                  const Eigen::MatrixXd& ref, double* min_sv) {
  Eigen::MatrixXd overlap = cur.transpose() * ref;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (min_sv) *min_sv = svd.singularValues().minCoeff();
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Coefficients x with basis * x = rhs in the least-squares sense, through
/// the Gram matrix of the basis columns.
inline Eigen::VectorXd gram_solve(const Eigen::MatrixXd& basis,
                                  const Eigen::VectorXd& rhs) {
  Eigen::MatrixXd gram = basis.transpose() * basis;
  return gram.ldlt().solve(basis.transpose() * rhs);
}

}  // namespace scf
