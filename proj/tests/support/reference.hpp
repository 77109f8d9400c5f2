#pragma once

// Test-only reference computations, kept independent of the library's code paths.

#include "hmp/types.hpp"

#include <cmath>
#include <functional>

namespace hmp::reference {

/// exp(A) by scaling and squaring with a 30-term Taylor series.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Central difference of a vector-valued function along direction v.
inline Vec directional_fd(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& v, double h) {
  return (fn(x + h * v) - fn(x - h * v)) / (2.0 * h);
}

}  // namespace hmp::reference
