#include "nivtest/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace nivtest::linalg {

namespace {

void require_finite(const Eigen::Ref<const Matrix>& a, const char* who) {
  if (!a.allFinite()) {
    throw Error(ErrorCode::NonFinite,
                std::string(who) + ": matrix has NaN or Inf entries");
  }
}

}  // namespace

Vector sym_eigenvalues(const Eigen::Ref<const Matrix>& a, double asym_tol) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::NonSquare, "sym_eigenvalues: matrix is " +
                                          std::to_string(a.rows()) + "x" +
                                          std::to_string(a.cols()));
  }
  require_finite(a, "sym_eigenvalues");
  if (a.rows() == 0) return Vector(0);

  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol) {
    throw Error(ErrorCode::NotSymmetric,
                "sym_eigenvalues: asymmetry " + std::to_string(asym) +
                    " exceeds tolerance");
  }

  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::DidNotConverge,
                "sym_eigenvalues: eigensolver did not converge");
  }
  // Eigen returns ascending order.
  return solver.eigenvalues().reverse();
}

Matrix generalized_inverse(const Eigen::Ref<const Matrix>& a, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "generalized_inverse: rel_tol must lie in (0, 1)");
  }
  require_finite(a, "generalized_inverse");
  if (a.size() == 0) return Matrix(a.cols(), a.rows());

  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (!sv.allFinite()) {
    throw Error(ErrorCode::DidNotConverge,
                "generalized_inverse: SVD did not converge");
  }
  const double cutoff = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
  Vector inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

double frobenius_norm(const Eigen::Ref<const Matrix>& a) {
  require_finite(a, "frobenius_norm");
  return a.norm();
}

double trace(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::NonSquare, "trace: matrix is " +
                                          std::to_string(a.rows()) + "x" +
                                          std::to_string(a.cols()));
  }
  return a.trace();
}

}  // namespace nivtest::linalg
