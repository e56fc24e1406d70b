#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "nivtest/basis.hpp"
#include "nivtest/errors.hpp"

namespace nivtest::estimators {

using basis::BasisFamily;
using linalg::Matrix;
using linalg::Vector;

/// Observed data: outcome y, regressor z and instrument w, both in [0,1].
struct Sample {
  Vector y;
  Vector z;
  Vector w;

  Eigen::Index n() const noexcept { return y.size(); }

  /// Enforces equal lengths, finiteness and the [0,1] domain of z and w.
  void validate() const;
};

/// Series coefficients fitted by least squares or instrumental variables.
struct SeriesFit {
  enum class Kind { LeastSquares, InstrumentalVariables };

  BasisFamily family;
  int k = 0;
  Vector beta;
  Kind kind = Kind::LeastSquares;
  std::vector<std::string> warnings;
};

/// Polynomial model sum_{l=1}^{p} theta_l z^l fitted by two-stage least
/// squares, together with the influence-function rows of the estimator's
/// asymptotically linear representation.
struct ParametricFit {
  Vector theta;      // length p
  Matrix influence;  // n x p, row i = h(V_i)
  int degree = 0;
  std::vector<std::string> warnings;
};

/// beta = (Z_k^t Z_k)^- Z_k^t y with Z_k the series design at the regressor.
SeriesFit fit_series_regression(const Sample& s, BasisFamily family, int k);

/// beta = (X_k^t Z_k)^- X_k^t y with X_k the series design at the instrument.
SeriesFit fit_series_iv(const Sample& s, BasisFamily family, int k);

/// sum_j beta_j e_j(t)
double predict(const SeriesFit& fit, double t);

/// Two-stage least squares for the polynomial model with instrument vector
/// (1, w, ..., w^{q-1}), q = n_instruments >= degree + 1. The influence rows
/// are h(V_i) = n (Zhat^t Z)^- zhat_i uhat_i, whose sum vanishes by the
/// first-order condition.
ParametricFit fit_poly_2sls(const Sample& s, int degree, int n_instruments);

/// n x p matrix of regressor powers z^l, l = 1..p (the gradient of the
/// polynomial model in its coefficients).
Matrix poly_gradient_matrix(const Eigen::Ref<const Vector>& z, int degree);

}  // namespace nivtest::estimators
