#include "hmp/geometry.hpp"

#include "hmp/errors.hpp"

#include <cmath>
#include <sstream>

namespace hmp {

std::string to_string(TheoremVariant v) {
  switch (v) {
    case TheoremVariant::TimeInvariant: return "TimeInvariant";
    case TheoremVariant::InteriorOptimal: return "InteriorOptimal";
    case TheoremVariant::TimeVaryingGuard: return "TimeVaryingGuard";
    case TheoremVariant::TimeVaryingJump: return "TimeVaryingJump";
    case TheoremVariant::Combined: return "Combined";
  }
  return "?";
}

TheoremVariant variant_from_string(const std::string& name) {
  for (auto v : {TheoremVariant::TimeInvariant, TheoremVariant::InteriorOptimal,
                 TheoremVariant::TimeVaryingGuard, TheoremVariant::TimeVaryingJump,
                 TheoremVariant::Combined}) {
    if (to_string(v) == name) return v;
  }
  throw ContractError("unknown theorem variant '" + name + "'");
}

MetricField MetricField::euclidean(int n) {
  return MetricField([n](const ChartPoint&) -> Mat { return Mat::Identity(n, n); });
}

MetricField MetricField::conformal(int n, std::function<double(const Vec&)> factor) {
  return MetricField([n, factor = std::move(factor)](const ChartPoint& x) -> Mat {
    return factor(x.coords) * Mat::Identity(n, n);
  });
}

MetricField MetricField::stereographic_sphere(int n) {
  return conformal(n, [](const Vec& x) {
    const double s = 1.0 + x.squaredNorm();
    return 4.0 / (s * s);
  });
}

Mat MetricField::at(const ChartPoint& x) const {
  if (!eval_) throw GeometryError("metric field has no evaluator");
  Mat g = eval_(x);
  const int n = x.dim();
  if (g.rows() != n || g.cols() != n) {
    throw GeometryError("metric dimension does not match chart point");
  }
  if (!g.allFinite()) throw GeometryError("metric has non-finite entries");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw GeometryError("metric is not symmetric");
  }
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw GeometryError("metric is not positive definite at the evaluated point");
  }
  return g;
}

double pairing(const CotangentVec& p, const TangentVec& v) {
  if (p.comps.size() != v.comps.size()) {
    throw ContractError("pairing: covector and vector dimensions differ");
  }
  return p.comps.dot(v.comps);
}

namespace geometry {

CotangentVec flat(const MetricField& metric, const TangentVec& v) {
  if (v.comps.size() != v.base.coords.size()) {
    throw ContractError("flat: vector and base point dimensions differ");
  }
  const Mat g = metric.at(v.base);
  return CotangentVec{v.base, g * v.comps};
}

double cometric_norm(const MetricField& metric, const SpaceTimeCovector& c) {
  const Mat g = metric.at(c.dn_x.base);
  const Vec w = g.llt().solve(c.dn_x.comps);
  return std::sqrt(c.dn_x.comps.dot(w) + c.dn_t * c.dn_t);
}

SpaceTimeCovector normal_covector(const Vec& guard_grad_x, double guard_grad_t,
                                  const MetricField& metric, const ChartPoint& x,
                                  bool normalize) {
  if (guard_grad_x.size() != x.coords.size()) {
    throw ContractError("normal_covector: gradient dimension does not match the point");
  }
  if (!guard_grad_x.allFinite() || !std::isfinite(guard_grad_t)) {
    throw GeometryError("normal_covector: non-finite guard gradient");
  }
  const double scale = guard_grad_x.cwiseAbs().maxCoeff();
  if (std::max(scale, std::abs(guard_grad_t)) <= 1e-12) {
    std::ostringstream msg;
    msg << "guard differential vanishes at x = " << x.coords.transpose()
        << "; the guard is not an embedded hypersurface there";
    throw DegenerateGuardError(msg.str());
  }
  SpaceTimeCovector c{CotangentVec{x, guard_grad_x}, guard_grad_t};
  if (normalize) {
    const double norm = cometric_norm(metric, c);
    c.dn_x.comps /= norm;
    c.dn_t /= norm;
  }
  return c;
}

CotangentVec pullback_jump(const Mat& jump_jacobian, const CotangentVec& p_plus,
                           const ChartPoint& x_minus) {
  const auto n = p_plus.comps.size();
  if (jump_jacobian.rows() != n || jump_jacobian.cols() != x_minus.coords.size()) {
    throw ContractError("pullback_jump: jump Jacobian dimensions do not match");
  }
  return CotangentVec{x_minus, jump_jacobian.transpose() * p_plus.comps};
}

double time_pairing_jump(const TangentVec& d_t_zeta, const CotangentVec& p_plus) {
  if (d_t_zeta.base.chart != p_plus.base.chart ||
      d_t_zeta.base.coords.size() != p_plus.base.coords.size()) {
    throw ContractError("time_pairing_jump: vector and covector live on different charts");
  }
  const double tol = 1e-9 * (1.0 + p_plus.base.coords.cwiseAbs().maxCoeff());
  if ((d_t_zeta.base.coords - p_plus.base.coords).cwiseAbs().maxCoeff() > tol) {
    throw ContractError("time_pairing_jump: vector and covector are based at different points");
  }
  return pairing(p_plus, d_t_zeta);
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x) {
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  Vec xp = x;
  for (int j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    const Vec fp = fn(xp);
    xp[j] = x[j] - h;
    const Vec fm = fn(xp);
    xp[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x) {
  Vec grad(x.size());
  Vec xp = x;
  for (int j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    const double fp = fn(xp);
    xp[j] = x[j] - h;
    const double fm = fn(xp);
    xp[j] = x[j];
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace geometry
}  // namespace hmp
