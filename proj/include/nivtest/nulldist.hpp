#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "nivtest/errors.hpp"

namespace nivtest::nulldist {

using Eigen::VectorXd;

/// Weights (lambda_j) of the limiting law sum_j lambda_j chi^2_{1j}.
/// Stored sorted descending; entries must be nonnegative (callers clip
/// negative estimated eigenvalues before construction). The all-zero
/// mixture is representable but degenerate.
class MixtureWeights {
 public:
  explicit MixtureWeights(VectorXd lambdas);

  const VectorXd& lambdas() const noexcept { return lambdas_; }
  Eigen::Index size() const noexcept { return lambdas_.size(); }
  bool degenerate() const noexcept { return n_positive_ == 0; }

 private:
  VectorXd lambdas_;
  Eigen::Index n_positive_;
};

/// P(sum_j lambda_j chi^2_{1j} > x) by Imhof characteristic-function
/// inversion,
///   P(Q > x) = 1/2 + (1/pi) Int_0^inf sin(theta(u)) / (u rho(u)) du,
///   theta(u) = (1/2) sum_j arctan(lambda_j u) - x u / 2,
///   rho(u)   = prod_j (1 + lambda_j^2 u^2)^{1/4}.
/// Result is clamped to [0, 1]; absolute accuracy well below 1e-6.
double mixture_survival(const MixtureWeights& w, double x);

/// q such that mixture_survival(w, q) = alpha within 1e-6, by bracketing
/// and bisection refinement.
double mixture_quantile(const MixtureWeights& w, double alpha);

/// Empirical (1 - alpha) quantile of `draws` simulated realizations
/// sum_j lambda_j G_j^2 with G_j iid standard normal from the counter-based
/// generator. Deterministic given (seed, draws).
double mixture_quantile_mc(const MixtureWeights& w, double alpha, long draws,
                           std::uint64_t seed);

/// Phi^{-1}(1 - alpha) via the AS 241 rational approximation (accurate to
/// well below 1e-8).
double normal_quantile(double alpha);

/// Survival function of N(0,1).
double normal_survival(double t);

}  // namespace nivtest::nulldist
