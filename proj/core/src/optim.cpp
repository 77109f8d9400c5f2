#include "optim.hpp"

#include <cmath>
#include <limits>

namespace hmp::detail {

ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? ScalarMin{c, fc} : ScalarMin{d, fd};
}

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x[i]));
    y[i] = x[i] + h;
    const double fp = f(y);
    y[i] = x[i] - h;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
    if (!std::isfinite(g[i])) g[i] = 0.0;
  }
  return g;
}

BfgsResult bfgs(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                const BfgsOptions& opts) {
  const Eigen::Index n = x.size();
  BfgsResult res;
  double fx = f(x);
  if (n == 0 || !std::isfinite(fx)) {
    res.x = x;
    res.fx = fx;
    return res;
  }
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = central_gradient(f, x, opts.fd_step);
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (g.cwiseAbs().maxCoeff() <= opts.gtol) break;
    Eigen::VectorXd d = -hinv * g;
    if (d.dot(g) >= 0.0) {
      hinv.setIdentity();
      d = -g;
    }
    const double dmax = d.cwiseAbs().maxCoeff();
    if (dmax > opts.max_step) d *= opts.max_step / dmax;
    const double slope = d.dot(g);
    double alpha = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    while (alpha > 1e-14) {
      x_new = x + alpha * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd g_new = central_gradient(f, x_new, opts.fd_step);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
      hinv = (ident - rho * s * y.transpose()) * hinv * (ident - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    const double df = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (df <= 1e-16 * (1.0 + std::abs(fx)) && s.cwiseAbs().maxCoeff() <= 1e-12) break;
  }
  res.x = x;
  res.fx = fx;
  res.iterations = it;
  return res;
}

}  // namespace hmp::detail
