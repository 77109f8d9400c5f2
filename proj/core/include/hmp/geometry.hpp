#pragma once

// Chart-based Riemannian primitives. A problem lives on a single chart, so
// points, tangent vectors and covectors are coordinate vectors tagged with the
// chart they belong to.

#include "hmp/types.hpp"

#include <functional>

namespace hmp {

struct ChartPoint {
  ChartId chart = "R^n";
  Vec coords;

  int dim() const { return static_cast<int>(coords.size()); }
};

struct TangentVec {
  ChartPoint base;
  Vec comps;
};

struct CotangentVec {
  ChartPoint base;
  Vec comps;
};

/// Riemannian metric evaluated in chart coordinates.
class MetricField {
 public:
  using Evaluator = std::function<Mat(const ChartPoint&)>;

  MetricField() = default;
  explicit MetricField(Evaluator eval) : eval_(std::move(eval)) {}

  static MetricField euclidean(int n);
  /// g = factor(x) * I.
  static MetricField conformal(int n, std::function<double(const Vec&)> factor);
  /// Round sphere of radius one in stereographic coordinates: 4/(1+|x|^2)^2 * I.
  static MetricField stereographic_sphere(int n);

  /// Evaluates and validates (finite, symmetric within 1e-12, Cholesky succeeds).
  Mat at(const ChartPoint& x) const;
  bool valid() const { return static_cast<bool>(eval_); }

 private:
  Evaluator eval_;
};

/// Space and time parts of the one-form dual to a guard normal on M x R.
struct SpaceTimeCovector {
  CotangentVec dn_x;
  double dn_t = 0.0;
};

/// <covector, vector> in coordinates.
double pairing(const CotangentVec& p, const TangentVec& v);

namespace geometry {

/// Index lowering g(v, .).
CotangentVec flat(const MetricField& metric, const TangentVec& v);

/// Norm of a covector under the cometric g^{-1} (plus the Euclidean time part).
double cometric_norm(const MetricField& metric, const SpaceTimeCovector& c);

/// Differential of a guard's defining function split into x and t parts,
/// optionally scaled to unit norm under g (+) 1. Throws DegenerateGuardError
/// when both parts vanish within 1e-12.
SpaceTimeCovector normal_covector(const Vec& guard_grad_x, double guard_grad_t,
                                  const MetricField& metric, const ChartPoint& x,
                                  bool normalize);

/// T*zeta: pulls back p_plus through the jump Jacobian, based at x_minus.
CotangentVec pullback_jump(const Mat& jump_jacobian, const CotangentVec& p_plus,
                           const ChartPoint& x_minus);

/// D*_t zeta(p): pairing of the post-jump costate with the jump's time derivative.
double time_pairing_jump(const TangentVec& d_t_zeta, const CotangentVec& p_plus);

/// Central-difference Jacobian with step 1e-6 (1 + |x|).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x);
/// Central-difference gradient of a scalar function with step 1e-6 (1 + |x|).
Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x);

}  // namespace geometry
}  // namespace hmp
