#pragma once

// Small derivative-free building blocks shared by the Hamiltonian minimizer
// and the direct oracles. Internal to the library.

#include <Eigen/Dense>

#include <functional>

namespace hmp::detail {

struct ScalarMin {
  double x = 0.0;
  double fx = 0.0;
};

/// Golden-section search for a minimum of f on [a, b] to interval width tol.
ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double tol);

struct BfgsOptions {
  int max_iter = 200;
  double gtol = 1e-9;       // stop when |grad|_inf <= gtol
  double fd_step = 1e-6;    // central-difference step, scaled by 1 + |x_i|
  double max_step = 1.0;    // cap on |alpha d|_inf per iteration
};

struct BfgsResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  int iterations = 0;
};

/// Quasi-Newton minimization with finite-difference gradients and Armijo
/// backtracking. Non-finite objective values are treated as rejections.
BfgsResult bfgs(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                const BfgsOptions& opts);

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step);

}  // namespace hmp::detail
