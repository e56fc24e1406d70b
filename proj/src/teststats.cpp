#include "nivtest/teststats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nivtest::teststats {

namespace {

using nulldist::MixtureWeights;

void require_rows_match(const Eigen::Ref<const Vector>& residuals,
                        const Eigen::Ref<const Matrix>& wtau,
                        const char* who) {
  if (residuals.size() != wtau.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(who) + ": residual length " +
                    std::to_string(residuals.size()) + " vs design rows " +
                    std::to_string(wtau.rows()));
  }
  if (residuals.size() == 0) {
    throw Error(ErrorCode::ZeroLength, std::string(who) + ": empty residuals");
  }
}

CovarianceEstimate gram_covariance(const Matrix& b, double n) {
  CovarianceEstimate cov;
  cov.sigma_hat = (b.transpose() * b) / n;
  cov.mu_hat = cov.sigma_hat.trace();
  cov.varsigma_hat = cov.sigma_hat.norm();
  return cov;
}

struct DesignPair {
  Matrix wtau_m;  // n x m, weighted f-design for the statistic
  Matrix wtau_M;  // n x M, weighted f-design for the covariance
};

DesignPair build_designs(const Sample& s, const TestConfig& cfg) {
  const int cols = std::max(cfg.m, cfg.M);
  const Matrix design = basis::design_matrix(cfg.f_family, s.w, cols);
  const basis::WeightSequence tau = basis::make_weights(cfg.tau_kind, cols);
  const Matrix weighted = basis::weighted_design(design, tau);
  DesignPair pair;
  pair.wtau_m = weighted.leftCols(cfg.m);
  pair.wtau_M = weighted.leftCols(cfg.M);
  return pair;
}

void soft_warnings(const Sample& s, const TestConfig& cfg, Path path,
                   Diagnostics& diag) {
  if (path == Path::Normal &&
      static_cast<double>(cfg.m) * cfg.m * cfg.m >= static_cast<double>(s.n())) {
    diag.warnings.push_back("m^3 >= n: the normal approximation rests on m "
                            "growing slower than n^{1/3}");
  }
  if (cfg.k >= 1 && cfg.k >= cfg.m) {
    diag.warnings.push_back("k >= m: the estimator uses at least as many "
                            "terms as the statistic");
  }
}

/// Shared tail of the four test operations: statistic, path resolution,
/// covariance choice, decision, diagnostics.
TestResult run_decision(const Sample& s, const TestConfig& cfg,
                        const Vector& residuals,
                        const std::function<CovarianceEstimate(const Matrix&)>&
                            corrected_covariance,
                        std::vector<std::string> warnings) {
  const DesignPair designs = build_designs(s, cfg);
  const double n = static_cast<double>(s.n());
  const double n_s = n * raw_statistic(residuals, designs.wtau_m);

  const Path path = cfg.resolved_path();
  const CovarianceEstimate simple_m =
      covariance_simple(residuals, designs.wtau_m);

  TestResult result;
  if (path == Path::Normal) {
    result = decide(n_s, simple_m, cfg);
  } else {
    const CovarianceEstimate cov_M = corrected_covariance(designs.wtau_M);
    result = decide(n_s, cov_M, cfg);
  }
  result.diagnostics.mu_hat_simple = simple_m.mu_hat;
  result.diagnostics.varsigma_hat_simple = simple_m.varsigma_hat;
  result.diagnostics.k = cfg.k;
  for (auto& w : warnings) result.diagnostics.warnings.push_back(std::move(w));
  soft_warnings(s, cfg, path, result.diagnostics);
  return result;
}

}  // namespace

const char* path_name(Path p) noexcept {
  switch (p) {
    case Path::Normal: return "normal";
    case Path::Mixture: return "mixture";
    case Path::Auto: return "auto";
  }
  return "?";
}

Path TestConfig::resolved_path() const noexcept {
  if (path != Path::Auto) return path;
  const bool summable = tau_kind.type == WeightKind::Type::PowerDecay &&
                        tau_kind.exponent > 1.0;
  return summable ? Path::Mixture : Path::Normal;
}

void TestConfig::validate() const {
  if (m < 1) throw Error(ErrorCode::OutOfRange, "TestConfig: m must be >= 1");
  if (M < 1) throw Error(ErrorCode::OutOfRange, "TestConfig: M must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::OutOfRange, "TestConfig: alpha must lie in (0,1)");
  }
}

double raw_statistic(const Eigen::Ref<const Vector>& residuals,
                     const Eigen::Ref<const Matrix>& wtau) {
  require_rows_match(residuals, wtau, "raw_statistic");
  if (!residuals.allFinite() || !wtau.allFinite()) {
    throw Error(ErrorCode::NonFinite, "raw_statistic: non-finite input");
  }
  const double n = static_cast<double>(residuals.size());
  const Vector moments = (wtau.transpose() * residuals) / n;
  return moments.squaredNorm();
}

CovarianceEstimate covariance_simple(const Eigen::Ref<const Vector>& residuals,
                                     const Eigen::Ref<const Matrix>& wtau) {
  require_rows_match(residuals, wtau, "covariance_simple");
  const Matrix b = residuals.asDiagonal() * wtau;
  return gram_covariance(b, static_cast<double>(residuals.size()));
}

CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const ParametricAux& aux) {
  require_rows_match(residuals, wtau, "covariance_corrected");
  const Eigen::Index n = residuals.size();
  if (aux.a_k.rows() != n || aux.influence.rows() != n ||
      aux.a_k.cols() != aux.influence.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "covariance_corrected(parametric): aux dimensions");
  }
  // (diag(u) - n^{-1} h a_k^t) W computed without the n x n matrix
  const Matrix b = residuals.asDiagonal() * wtau -
                   aux.influence * (aux.a_k.transpose() * wtau) /
                       static_cast<double>(n);
  return gram_covariance(b, static_cast<double>(n));
}

CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const ExogeneityAux& aux) {
  require_rows_match(residuals, wtau, "covariance_corrected");
  const Eigen::Index n = residuals.size();
  if (aux.z_k.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "covariance_corrected(exogeneity): aux dimensions");
  }
  // The factor I - n^{-1} Z_k Z_k^t presumes a basis normalized so that
  // n^{-1} Z_k^t Z_k = I_k; under that normalization it equals the exact
  // least-squares annihilator, which is what we apply for a general basis.
  const Matrix gram_inv =
      linalg::generalized_inverse(aux.z_k.transpose() * aux.z_k);
  const Matrix c = wtau - aux.z_k * (gram_inv * (aux.z_k.transpose() * wtau));
  const Matrix b = residuals.asDiagonal() * c;
  return gram_covariance(b, static_cast<double>(n));
}

CovarianceEstimate covariance_corrected(const Eigen::Ref<const Vector>& residuals,
                                        const Eigen::Ref<const Matrix>& wtau,
                                        const NonparametricAux& aux) {
  require_rows_match(residuals, wtau, "covariance_corrected");
  const Eigen::Index n = residuals.size();
  if (aux.z_k.rows() != n || aux.w_k.rows() != n ||
      aux.z_k.cols() != aux.w_k.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "covariance_corrected(nonparametric): aux dimensions");
  }
  const Matrix cross_inv =
      linalg::generalized_inverse(aux.z_k.transpose() * aux.w_k);
  const Matrix c = wtau - aux.w_k * (cross_inv * (aux.z_k.transpose() * wtau));
  const Matrix b = residuals.asDiagonal() * c;
  return gram_covariance(b, static_cast<double>(n));
}

TestResult decide(double n_s, const CovarianceEstimate& cov,
                  const TestConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(n_s) || n_s < 0.0) {
    throw Error(ErrorCode::NonFinite, "decide: invalid statistic");
  }
  const Path path = cfg.resolved_path();

  TestResult result;
  result.n_s = n_s;
  result.path_used = path;
  result.diagnostics.m = cfg.m;
  result.diagnostics.M = cfg.M;
  result.diagnostics.tau_kind = cfg.tau_kind;
  result.diagnostics.mu_hat = cov.mu_hat;
  result.diagnostics.varsigma_hat = cov.varsigma_hat;

  if (path == Path::Normal) {
    if (cov.varsigma_hat <= 0.0) {
      result.critical_value = std::numeric_limits<double>::infinity();
      result.p_value = 1.0;
      result.reject = false;
      result.diagnostics.warnings.push_back(
          "degenerate covariance: varsigma_hat = 0");
      return result;
    }
    const double scale = std::sqrt(2.0) * cov.varsigma_hat;
    result.critical_value =
        cov.mu_hat + scale * nulldist::normal_quantile(cfg.alpha);
    result.p_value = nulldist::normal_survival((n_s - cov.mu_hat) / scale);
    result.reject = n_s > result.critical_value;
    return result;
  }

  if (cov.sigma_hat.rows() != cfg.M) {
    throw Error(ErrorCode::DimensionMismatch,
                "decide: covariance dimension " +
                    std::to_string(cov.sigma_hat.rows()) +
                    " does not match M = " + std::to_string(cfg.M));
  }
  Vector eigenvalues = linalg::sym_eigenvalues(cov.sigma_hat);
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) < 0.0) eigenvalues(i) = 0.0;
  }
  result.diagnostics.eigenvalues.assign(eigenvalues.data(),
                                        eigenvalues.data() + eigenvalues.size());
  MixtureWeights weights(eigenvalues);
  if (weights.degenerate()) {
    result.critical_value = std::numeric_limits<double>::infinity();
    result.p_value = 1.0;
    result.reject = false;
    result.diagnostics.warnings.push_back(
        "degenerate mixture: all estimated eigenvalues are zero");
    return result;
  }
  result.critical_value = nulldist::mixture_quantile(weights, cfg.alpha);
  result.p_value = nulldist::mixture_survival(weights, n_s);
  result.reject = n_s > result.critical_value;
  return result;
}

TestResult test_simple(const Sample& s,
                       const std::function<double(double)>& phi0,
                       const TestConfig& cfg) {
  cfg.validate();
  s.validate();
  Vector residuals(s.n());
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    residuals(i) = s.y(i) - phi0(s.z(i));
  }
  if (!residuals.allFinite()) {
    throw Error(ErrorCode::NonFinite, "test_simple: phi0 produced NaN/Inf");
  }
  return run_decision(
      s, cfg, residuals,
      [&](const Matrix& wtau_M) { return covariance_simple(residuals, wtau_M); },
      {});
}

TestResult test_parametric(const Sample& s, int degree, const TestConfig& cfg) {
  cfg.validate();
  const estimators::ParametricFit fit =
      estimators::fit_poly_2sls(s, degree, degree + 2);
  const Matrix a_k = estimators::poly_gradient_matrix(s.z, degree);
  const Vector residuals = s.y - a_k * fit.theta;
  return run_decision(
      s, cfg, residuals,
      [&](const Matrix& wtau_M) {
        return covariance_corrected(residuals, wtau_M,
                                    ParametricAux{a_k, fit.influence});
      },
      fit.warnings);
}

TestResult test_exogeneity(const Sample& s, const TestConfig& cfg) {
  cfg.validate();
  if (cfg.k < 1) {
    throw Error(ErrorCode::OutOfRange, "test_exogeneity: k must be >= 1");
  }
  const estimators::SeriesFit fit =
      estimators::fit_series_regression(s, cfg.e_family, cfg.k);
  const Matrix z_k = basis::design_matrix(cfg.e_family, s.z, cfg.k);
  const Vector residuals = s.y - z_k * fit.beta;
  return run_decision(
      s, cfg, residuals,
      [&](const Matrix& wtau_M) {
        return covariance_corrected(residuals, wtau_M, ExogeneityAux{z_k});
      },
      fit.warnings);
}

TestResult test_nonparametric(const Sample& s, const TestConfig& cfg,
                              bool z_restricted) {
  cfg.validate();
  if (cfg.k < 1) {
    throw Error(ErrorCode::OutOfRange, "test_nonparametric: k must be >= 1");
  }
  if (cfg.e_family == cfg.f_family) {
    throw Error(ErrorCode::BasisCollision,
                "test_nonparametric: identical instrument and regressor "
                "bases make the statistic degenerate");
  }
  const estimators::SeriesFit fit =
      estimators::fit_series_iv(s, cfg.e_family, cfg.k);
  const Matrix z_k = basis::design_matrix(cfg.e_family, s.z, cfg.k);
  const Matrix w_k = basis::design_matrix(cfg.e_family, s.w, cfg.k);
  const Vector residuals = s.y - z_k * fit.beta;
  std::vector<std::string> warnings = fit.warnings;
  if (z_restricted) {
    warnings.push_back("dimension-reduction variant: z holds the designated "
                       "regressor sub-vector");
  }
  return run_decision(
      s, cfg, residuals,
      [&](const Matrix& wtau_M) {
        return covariance_corrected(residuals, wtau_M,
                                    NonparametricAux{z_k, w_k});
      },
      std::move(warnings));
}

}  // namespace nivtest::teststats
