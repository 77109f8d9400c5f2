#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

namespace hmp {

/// Upper bound on state and control dimensions. Small vectors live on the
/// stack, which keeps the integrator inner loops allocation free.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using ChartId = std::string;

/// Theorem variant selecting which costate/Hamiltonian jump law applies.
enum class TheoremVariant {
  TimeInvariant,
  InteriorOptimal,
  TimeVaryingGuard,
  TimeVaryingJump,
  Combined,
};

std::string to_string(TheoremVariant v);
TheoremVariant variant_from_string(const std::string& name);

/// Whether the guard's time derivative enters the jump laws.
inline bool uses_time_normal(TheoremVariant v) {
  return v == TheoremVariant::TimeVaryingGuard || v == TheoremVariant::TimeVaryingJump ||
         v == TheoremVariant::Combined;
}

/// Whether the jump map's time derivative enters the jump laws.
inline bool uses_jump_time_derivative(TheoremVariant v) {
  return v == TheoremVariant::TimeVaryingJump || v == TheoremVariant::Combined;
}

/// Whether the costate jump is taken along an estimated value-function differential.
inline bool uses_value_differential(TheoremVariant v) {
  return v == TheoremVariant::InteriorOptimal || v == TheoremVariant::Combined;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace hmp
