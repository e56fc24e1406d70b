#pragma once

#include <string>

#include <Eigen/Core>

#include "nivtest/errors.hpp"
#include "nivtest/linalg.hpp"

namespace nivtest::basis {

using linalg::Matrix;
using linalg::Vector;

/// Orthonormal families on [0,1] under Lebesgue measure.
///   Cosine:          f_j(t) = sqrt(2) cos(pi j t),  j >= 1
///   LegendreShifted: e_j(t) = sqrt(2j-1) P_{j-1}(2t-1), so e_1 = 1,
///                    e_2 = sqrt(3)(2t-1), ...
enum class BasisFamily { Cosine, LegendreShifted };

const char* family_name(BasisFamily f) noexcept;

/// Smoothing weight kind: either no smoothing (all tau_j = 1) or power
/// decay tau_j = j^{-q} with exponent q > 0.
struct WeightKind {
  enum class Type { Identity, PowerDecay };

  Type type = Type::Identity;
  double exponent = 0.0;  // only meaningful for PowerDecay

  static WeightKind identity() { return {Type::Identity, 0.0}; }
  static WeightKind power_decay(double q);

  bool is_identity() const noexcept { return type == Type::Identity; }
  std::string name() const;

  friend bool operator==(const WeightKind&, const WeightKind&) = default;
};

/// The eigenvalue sequence of the smoothing operator: positive,
/// nonincreasing, first element 1.
struct WeightSequence {
  WeightKind kind;
  Vector values;

  Eigen::Index size() const noexcept { return values.size(); }
};

double eval_basis(BasisFamily family, int j, double t);

WeightSequence make_weights(WeightKind kind, int m);

/// n x m matrix with entry (i, j) = eval_basis(family, j+1, points[i]).
Matrix design_matrix(BasisFamily family,
                     const Eigen::Ref<const Vector>& points, int m);

/// Scale column j of a design matrix by sqrt(tau_j).
Matrix weighted_design(const Eigen::Ref<const Matrix>& design,
                       const WeightSequence& tau);

}  // namespace nivtest::basis
