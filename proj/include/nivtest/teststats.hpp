#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nivtest/basis.hpp"
#include "nivtest/errors.hpp"
#include "nivtest/estimators.hpp"
#include "nivtest/nulldist.hpp"

namespace nivtest::teststats {

using basis::BasisFamily;
using basis::WeightKind;
using estimators::Sample;
using linalg::Matrix;
using linalg::Vector;

enum class Path { Normal, Mixture, Auto };

const char* path_name(Path p) noexcept;

/// Tuning of a single test run.
///   m: number of instrument-side basis terms in the statistic
///   k: sieve size of the estimator under the null (where applicable)
///   M: truncation of the chi-square mixture (mixture path only)
struct TestConfig {
  int m = 0;
  int k = 0;
  int M = 0;
  WeightKind tau_kind = WeightKind::identity();
  double alpha = 0.05;
  Path path = Path::Auto;
  BasisFamily f_family = BasisFamily::Cosine;
  BasisFamily e_family = BasisFamily::LegendreShifted;

  /// Auto resolves to Mixture exactly when sum_j tau_j converges
  /// (power decay with exponent > 1), otherwise Normal.
  Path resolved_path() const noexcept;

  void validate() const;
};

/// Estimated covariance of the weighted instrument-moment vector, with its
/// trace (mu_hat) and Frobenius norm (varsigma_hat).
struct CovarianceEstimate {
  Matrix sigma_hat;
  double mu_hat = 0.0;
  double varsigma_hat = 0.0;
};

struct Diagnostics {
  double mu_hat = 0.0;        // trace of the matrix used for the decision
  double varsigma_hat = 0.0;  // Frobenius norm of the same matrix
  double mu_hat_simple = 0.0;        // Definition-1 estimates at dimension m,
  double varsigma_hat_simple = 0.0;  // always from the uncorrected matrix
  std::vector<double> eigenvalues;   // mixture weights used (clipped at 0)
  int m = 0;
  int k = 0;
  int M = 0;
  WeightKind tau_kind;
  std::vector<std::string> warnings;
};

struct TestResult {
  double n_s = 0.0;  // n * S_n
  Path path_used = Path::Normal;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  Diagnostics diagnostics;
};

/// S_n = || n^{-1} wtau^t residuals ||^2.
double raw_statistic(const Eigen::Ref<const Vector>& residuals,
                     const Eigen::Ref<const Matrix>& wtau);

/// Sigma_hat = n^{-1} wtau^t diag(residuals)^2 wtau.
CovarianceEstimate covariance_simple(const Eigen::Ref<const Vector>& residuals,
                                     const Eigen::Ref<const Matrix>& wtau);

/// Correction for a parametric null: the influence of the root-n estimator
/// is removed, Sigma_hat = n^{-1} W^t (diag(u) - V)^t (diag(u) - V) W with
/// V = n^{-1} h a_k^t.
struct ParametricAux {
  Matrix a_k;        // n x p model gradient columns
  Matrix influence;  // n x p influence rows
};

/// Correction for the exogeneity null: (I - n^{-1} Z_k Z_k^t) applied on
/// both sides of diag(u)^2.
struct ExogeneityAux {
  Matrix z_k;  // n x k regressor-side design
};

/// Correction for the nonparametric null: (I - V_k) with
/// V_k = W_k (Z_k^t W_k)^- Z_k^t applied on both sides.
struct NonparametricAux {
  Matrix z_k;  // n x k regressor-side design
  Matrix w_k;  // n x k instrument-side design
};

CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const ParametricAux& aux);
CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const ExogeneityAux& aux);
CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const NonparametricAux& aux);

/// Applies the decision rule of the resolved path to the statistic n_s given
/// a covariance estimate (dimension M on the mixture path, m on the normal
/// path).
TestResult decide(double n_s, const CovarianceEstimate& cov,
                  const TestConfig& cfg);

/// H0: phi = phi0 for a known function phi0.
TestResult test_simple(const Sample& s,
                       const std::function<double(double)>& phi0,
                       const TestConfig& cfg);

/// H0: phi is a polynomial of the given degree (no intercept), estimated by
/// 2SLS with n_instruments = degree + 2 polynomial instruments.
TestResult test_parametric(const Sample& s, int degree, const TestConfig& cfg);

/// H0: Z is exogenous, i.e. phi(Z) = E[Y|Z]; the conditional mean is
/// estimated by series least squares with cfg.k terms.
TestResult test_exogeneity(const Sample& s, const TestConfig& cfg);

/// H0: a smooth solution of the conditional moment restriction exists; the
/// structural function is estimated by the series IV estimator. The
/// regressor and instrument basis families must differ. With z_restricted
/// set, the sample's z column is understood as the designated sub-vector of
/// the regressors (scalar case: the identical pipeline on that column).
TestResult test_nonparametric(const Sample& s, const TestConfig& cfg,
                              bool z_restricted = false);

}  // namespace nivtest::teststats
