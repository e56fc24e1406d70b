#include "nivtest/estimators.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace nivtest::estimators {

void Sample::validate() const {
  if (y.size() < 1) {
    throw Error(ErrorCode::ZeroLength, "Sample: empty");
  }
  if (z.size() != y.size() || w.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "Sample: y, z, w lengths differ");
  }
  if (!y.allFinite() || !z.allFinite() || !w.allFinite()) {
    throw Error(ErrorCode::NonFinite, "Sample: non-finite value");
  }
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (z(i) < 0.0 || z(i) > 1.0 || w(i) < 0.0 || w(i) > 1.0) {
      throw Error(ErrorCode::DomainViolation,
                  "Sample: z or w outside [0,1] at row " + std::to_string(i));
    }
  }
}

SeriesFit fit_series_regression(const Sample& s, BasisFamily family, int k) {
  s.validate();
  if (k < 1) {
    throw Error(ErrorCode::ZeroLength, "fit_series_regression: k must be >= 1");
  }
  const Matrix z_k = basis::design_matrix(family, s.z, k);
  const Matrix gram = z_k.transpose() * z_k;
  SeriesFit fit;
  fit.family = family;
  fit.k = k;
  fit.kind = SeriesFit::Kind::LeastSquares;
  fit.beta = linalg::generalized_inverse(gram) * (z_k.transpose() * s.y);
  return fit;
}

SeriesFit fit_series_iv(const Sample& s, BasisFamily family, int k) {
  s.validate();
  if (k < 1) {
    throw Error(ErrorCode::ZeroLength, "fit_series_iv: k must be >= 1");
  }
  const Matrix z_k = basis::design_matrix(family, s.z, k);
  const Matrix x_k = basis::design_matrix(family, s.w, k);
  const Matrix cross = x_k.transpose() * z_k;

  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();

  SeriesFit fit;
  fit.family = family;
  fit.k = k;
  fit.kind = SeriesFit::Kind::InstrumentalVariables;
  if (sv(0) > 0.0 && sv(sv.size() - 1) < 1e-6 * sv(0)) {
    fit.warnings.push_back("NearSingularCrossMoment: condition of X_k^t Z_k is " +
                           std::to_string(sv(0) / std::max(sv(sv.size() - 1),
                                                           1e-300)));
  }
  const double cutoff = 1e-12 * sv(0);
  Vector inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  }
  fit.beta = svd.matrixV() * inv_sv.asDiagonal() *
             (svd.matrixU().transpose() * (x_k.transpose() * s.y));
  return fit;
}

double predict(const SeriesFit& fit, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::OutOfDomain, "predict: argument outside [0,1]");
  }
  double acc = 0.0;
  for (int j = 0; j < fit.k; ++j) {
    acc += fit.beta(j) * basis::eval_basis(fit.family, j + 1, t);
  }
  return acc;
}

Matrix poly_gradient_matrix(const Eigen::Ref<const Vector>& z, int degree) {
  Matrix g(z.size(), degree);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double acc = 1.0;
    for (int l = 0; l < degree; ++l) {
      acc *= z(i);
      g(i, l) = acc;
    }
  }
  return g;
}

ParametricFit fit_poly_2sls(const Sample& s, int degree, int n_instruments) {
  s.validate();
  if (degree < 1) {
    throw Error(ErrorCode::ZeroLength, "fit_poly_2sls: degree must be >= 1");
  }
  if (n_instruments < degree + 1) {
    throw Error(ErrorCode::OutOfRange,
                "fit_poly_2sls: need at least degree + 1 instruments");
  }
  const Eigen::Index n = s.n();
  if (n <= n_instruments) {
    throw Error(ErrorCode::OutOfRange,
                "fit_poly_2sls: sample size must exceed instrument count");
  }

  const Matrix z_poly = poly_gradient_matrix(s.z, degree);
  Matrix psi(n, n_instruments);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 1.0;
    for (int l = 0; l < n_instruments; ++l) {
      psi(i, l) = acc;
      acc *= s.w(i);
    }
  }

  // the instruments must span enough directions to identify the parameters
  Eigen::JacobiSVD<Matrix> psi_svd(psi);
  const Vector& psv = psi_svd.singularValues();
  int psi_rank = 0;
  for (Eigen::Index i = 0; i < psv.size(); ++i) {
    if (psv(i) > 1e-12 * psv(0)) ++psi_rank;
  }
  if (psi_rank < degree) {
    throw Error(ErrorCode::RankDeficientInstruments,
                "fit_poly_2sls: instrument matrix rank " +
                    std::to_string(psi_rank) + " < " + std::to_string(degree));
  }

  const Matrix psi_gram_inv = linalg::generalized_inverse(psi.transpose() * psi);
  const Matrix z_hat = psi * (psi_gram_inv * (psi.transpose() * z_poly));
  const Matrix solve = linalg::generalized_inverse(z_hat.transpose() * z_poly);

  ParametricFit fit;
  fit.degree = degree;
  fit.theta = solve * (z_hat.transpose() * s.y);
  const Vector u_hat = s.y - z_poly * fit.theta;
  fit.influence = static_cast<double>(n) *
                  (u_hat.asDiagonal() * (z_hat * solve.transpose()));
  return fit;
}

}  // namespace nivtest::estimators
