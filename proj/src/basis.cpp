#include "nivtest/basis.hpp"

#include <cmath>

namespace nivtest::basis {

const char* family_name(BasisFamily f) noexcept {
  return f == BasisFamily::Cosine ? "cosine" : "legendre";
}

WeightKind WeightKind::power_decay(double q) {
  if (!(q > 0.0)) {
    throw Error(ErrorCode::OutOfRange,
                "WeightKind: power-decay exponent must be > 0");
  }
  return {Type::PowerDecay, q};
}

std::string WeightKind::name() const {
  if (type == Type::Identity) return "id";
  // integral exponents print without a decimal point (pow1, pow2)
  if (exponent == static_cast<double>(static_cast<long>(exponent))) {
    return "pow" + std::to_string(static_cast<long>(exponent));
  }
  return "pow" + std::to_string(exponent);
}

double eval_basis(BasisFamily family, int j, double t) {
  if (j < 1) {
    throw Error(ErrorCode::IndexZero, "eval_basis: index must be >= 1");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::OutOfDomain,
                "eval_basis: argument " + std::to_string(t) +
                    " outside [0,1]");
  }
  if (family == BasisFamily::Cosine) {
    return std::sqrt(2.0) * std::cos(M_PI * j * t);
  }
  // Orthonormal shifted Legendre: e_j(t) = sqrt(2j-1) P_{j-1}(2t-1) with the
  // three-term recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
  const double x = 2.0 * t - 1.0;
  double p_prev = 1.0;  // P_0
  if (j == 1) return 1.0;
  double p = x;  // P_1
  for (int k = 1; k < j - 1; ++k) {
    const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
    p_prev = p;
    p = p_next;
  }
  return std::sqrt(2.0 * j - 1.0) * p;
}

WeightSequence make_weights(WeightKind kind, int m) {
  if (m < 1) {
    throw Error(ErrorCode::ZeroLength, "make_weights: length must be >= 1");
  }
  Vector values(m);
  if (kind.is_identity()) {
    values.setOnes();
  } else {
    for (int j = 0; j < m; ++j) {
      values(j) = std::pow(static_cast<double>(j + 1), -kind.exponent);
    }
  }
  return {kind, std::move(values)};
}

Matrix design_matrix(BasisFamily family, const Eigen::Ref<const Vector>& points,
                     int m) {
  if (m < 1) {
    throw Error(ErrorCode::ZeroLength, "design_matrix: m must be >= 1");
  }
  const Eigen::Index n = points.size();
  Matrix design(n, m);
  if (family == BasisFamily::Cosine) {
    const double sqrt2 = std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = points(i);
      if (!(t >= 0.0 && t <= 1.0)) {
        throw Error(ErrorCode::OutOfDomain,
                    "design_matrix: point " + std::to_string(t) +
                        " outside [0,1]");
      }
      for (int j = 0; j < m; ++j) {
        design(i, j) = sqrt2 * std::cos(M_PI * (j + 1) * t);
      }
    }
    return design;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = points(i);
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::OutOfDomain,
                  "design_matrix: point " + std::to_string(t) +
                      " outside [0,1]");
    }
    // run the Legendre recurrence once per point instead of once per entry
    const double x = 2.0 * t - 1.0;
    double p_prev = 1.0;
    double p = x;
    design(i, 0) = 1.0;
    if (m > 1) design(i, 1) = std::sqrt(3.0) * x;
    for (int j = 2; j < m; ++j) {
      const int k = j - 1;
      const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
      p_prev = p;
      p = p_next;
      design(i, j) = std::sqrt(2.0 * (j + 1) - 1.0) * p;
    }
  }
  return design;
}

Matrix weighted_design(const Eigen::Ref<const Matrix>& design,
                       const WeightSequence& tau) {
  if (design.cols() != tau.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "weighted_design: design has " + std::to_string(design.cols()) +
                    " columns, tau has " + std::to_string(tau.size()));
  }
  return design * tau.values.cwiseSqrt().asDiagonal();
}

}  // namespace nivtest::basis
