#pragma once

#include <Eigen/Core>

#include "nivtest/errors.hpp"

namespace nivtest::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// The input is symmetrized as (A + A^t)/2 before decomposition; asymmetry
/// beyond `asym_tol` (max absolute entry difference) is treated as a caller
/// bug and rejected.
Vector sym_eigenvalues(const Eigen::Ref<const Matrix>& a,
                       double asym_tol = 1e-10);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// rel_tol * (largest singular value) are treated as zero.
Matrix generalized_inverse(const Eigen::Ref<const Matrix>& a,
                           double rel_tol = 1e-12);

/// sqrt(trace(A^t A)) = sqrt of the sum of squared entries.
double frobenius_norm(const Eigen::Ref<const Matrix>& a);

/// Sum of diagonal entries of a square matrix.
double trace(const Eigen::Ref<const Matrix>& a);

}  // namespace nivtest::linalg
