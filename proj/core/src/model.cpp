#include "hmp/model.hpp"

#include "hmp/errors.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace hmp {

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != lower.size()) return false;
  for (int i = 0; i < u.size(); ++i) {
    if (!(u[i] >= lower[i] - tol && u[i] <= upper[i] + tol)) return false;
  }
  return true;
}

Mat Mode::dfdx(const Vec& x, const Vec& u, double t) const {
  if (jacobian_x) return jacobian_x(x, u, t);
  return geometry::fd_jacobian([&](const Vec& y) { return dynamics(y, u, t); }, x);
}

GuardGradient Guard::gradient(const Vec& x, double t) const {
  if (grad) return grad(x, t);
  GuardGradient g;
  g.dx = geometry::fd_gradient([&](const Vec& y) { return fn(y, t); }, x);
  if (time_varying) {
    const double h = 1e-6 * (1.0 + std::abs(t));
    g.dt = (fn(x, t + h) - fn(x, t - h)) / (2.0 * h);
  }
  return g;
}

Mat Jump::jacobian(const Vec& x, double t) const {
  if (jacobian_x) return jacobian_x(x, t);
  return geometry::fd_jacobian([&](const Vec& y) { return map(y, t); }, x);
}

Vec Jump::time_derivative(const Vec& x, double t) const {
  if (!time_varying) return Vec::Zero(x.size());
  if (d_t) return d_t(x, t);
  const double h = 1e-6 * (1.0 + std::abs(t));
  return (map(x, t + h) - map(x, t - h)) / (2.0 * h);
}

Jump Jump::identity() {
  Jump j;
  j.map = [](const Vec& x, double) { return x; };
  j.jacobian_x = [](const Vec& x, double) -> Mat {
    return Mat::Identity(x.size(), x.size());
  };
  return j;
}

Vec TerminalCost::gradient(const Vec& x) const {
  if (grad) return grad(x);
  return geometry::fd_gradient(fn, x);
}

namespace model {

namespace {

bool close_rel(const Mat& analytic, const Mat& fd, double tol) {
  const double scale = 1.0 + fd.cwiseAbs().maxCoeff();
  return (analytic - fd).cwiseAbs().maxCoeff() <= tol * scale;
}

std::vector<Vec> probe_points(const HybridProblem& p, int count) {
  std::vector<Vec> pts;
  pts.push_back(p.x0.coords);
  Vec lo = p.box_lo;
  Vec hi = p.box_hi;
  if (lo.size() != p.n || hi.size() != p.n) {
    lo = p.x0.coords.array() - 1.0;
    hi = p.x0.coords.array() + 1.0;
  }
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 1; k < count; ++k) {
    Vec x(p.n);
    for (int i = 0; i < p.n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    pts.push_back(x);
  }
  return pts;
}

std::vector<Vec> probe_controls(const ControlSet& set) {
  std::vector<Vec> us;
  us.push_back(set.lower);
  us.push_back(set.upper);
  us.push_back(0.5 * (set.lower + set.upper));
  us.push_back(0.75 * set.lower + 0.25 * set.upper);
  return us;
}

std::string describe(const std::string& what, int index) {
  std::ostringstream s;
  s << what << " " << index;
  return s.str();
}

}  // namespace

ValidationReport validate(const HybridProblem& p) {
  ValidationReport rep;
  auto fail = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };

  if (p.n < 1 || p.n > kMaxDim) fail("state dimension out of range");
  if (p.m < 1 || p.m > kMaxDim) fail("control dimension out of range");
  if (p.x0.coords.size() != p.n) fail("x0 dimension mismatch");
  else if (!p.x0.coords.allFinite()) fail("x0 not finite");
  if (!std::isfinite(p.t0) || !std::isfinite(p.tf) || !(p.t0 < p.tf)) {
    fail("horizon requires finite t0 < tf");
  }
  if (p.modes.empty()) fail("problem has no modes");
  if (p.guards.size() + 1 != p.modes.size()) fail("guard/mode count mismatch");
  if (p.jumps.size() != p.guards.size()) fail("jump/guard count mismatch");
  if (p.control_set.lower.size() != p.m || p.control_set.upper.size() != p.m) {
    fail("control set dimension mismatch");
  } else if (!p.control_set.lower.allFinite() || !p.control_set.upper.allFinite()) {
    fail("control set bounds not finite");
  } else if ((p.control_set.lower.array() > p.control_set.upper.array()).any()) {
    fail("control set lower bound exceeds upper bound");
  }
  if (!p.terminal_cost.fn) fail("terminal cost missing");
  if (!p.metric.valid()) fail("metric missing");
  for (int i : p.cost_accumulators) {
    if (i < 0 || i >= p.n) fail("cost accumulator index out of range");
  }
  for (std::size_t i = 0; i < p.modes.size(); ++i) {
    if (!p.modes[i].dynamics) fail(describe("dynamics missing for mode", static_cast<int>(i)));
  }
  for (std::size_t i = 0; i < p.guards.size(); ++i) {
    if (!p.guards[i].fn) fail(describe("defining function missing for guard", static_cast<int>(i)));
  }
  for (std::size_t i = 0; i < p.jumps.size(); ++i) {
    if (!p.jumps[i].map) fail(describe("map missing for jump", static_cast<int>(i)));
  }
  if (p.default_guess) {
    const auto& g = *p.default_guess;
    if (g.p0.size() != p.n || g.switch_times.size() != p.guards.size() ||
        g.mus.size() != p.guards.size()) {
      fail("default guess dimension mismatch");
    }
  }
  if (!p.suboptimal_controls.empty() && p.suboptimal_controls.size() != p.modes.size()) {
    fail("suboptimal control law count mismatch");
  }
  // Everything below evaluates user callbacks, which is only meaningful on a
  // structurally sound instance.
  if (!rep.ok()) return rep;

  const auto points = probe_points(p, 16);
  const auto controls = probe_controls(p.control_set);
  const double tmid = 0.5 * (p.t0 + p.tf);
  const double tf_probe[] = {p.t0, tmid, p.tf};

  try {
    for (const auto& x : points) p.metric.at(p.point(x));
  } catch (const Error& e) {
    fail(std::string("metric invalid: ") + e.what());
  }

  for (std::size_t q = 0; q < p.modes.size(); ++q) {
    const Mode& mode = p.modes[q];
    bool finite = true;
    bool jac_ok = true;
    bool min_ok = true;
    for (const auto& x : points) {
      for (const auto& u : controls) {
        for (double t : tf_probe) {
          const Vec f = mode.f(x, u, t);
          if (f.size() != p.n || !f.allFinite()) {
            finite = false;
            continue;
          }
          if (mode.jacobian_x) {
            const Mat a = mode.jacobian_x(x, u, t);
            const Mat fd = geometry::fd_jacobian([&](const Vec& y) { return mode.f(y, u, t); }, x);
            if (a.rows() != p.n || a.cols() != p.n || !close_rel(a, fd, 1e-5)) jac_ok = false;
          }
        }
      }
      if (mode.hamiltonian_minimizer && p.m == 1 && finite) {
        // The registered minimizer must do at least as well as a fine grid.
        std::mt19937_64 rng(static_cast<unsigned long long>(q) + 17ULL);
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec costate(p.n);
        for (int i = 0; i < p.n; ++i) costate[i] = normal(rng);
        const Vec ustar = mode.hamiltonian_minimizer(x, costate, tmid, p.control_set);
        const double hstar = costate.dot(mode.f(x, ustar, tmid));
        Vec u(1);
        for (int k = 0; k <= 200; ++k) {
          u[0] = p.control_set.lower[0] +
                 (p.control_set.upper[0] - p.control_set.lower[0]) * k / 200.0;
          if (costate.dot(mode.f(x, u, tmid)) < hstar - 1e-8) min_ok = false;
        }
        if (!p.control_set.contains(ustar, 1e-12)) min_ok = false;
      }
    }
    if (!finite) fail(describe("dynamics not finite in the probe box for mode", static_cast<int>(q)));
    if (!jac_ok) fail(describe("dynamics Jacobian inconsistent for mode", static_cast<int>(q)));
    if (!min_ok) fail(describe("Hamiltonian minimizer not minimal for mode", static_cast<int>(q)));
  }

  for (std::size_t i = 0; i < p.guards.size(); ++i) {
    const Guard& g = p.guards[i];
    bool ok = true;
    bool static_ok = true;
    for (const auto& x : points) {
      for (double t : tf_probe) {
        const double h = 1e-6 * (1.0 + std::abs(t));
        const double gt_fd = (g.fn(x, t + h) - g.fn(x, t - h)) / (2.0 * h);
        if (!g.time_varying && std::abs(gt_fd) > 1e-8) static_ok = false;
        if (!g.grad) continue;
        const GuardGradient a = g.grad(x, t);
        const Vec gx_fd = geometry::fd_gradient([&](const Vec& y) { return g.fn(y, t); }, x);
        if (a.dx.size() != p.n || !close_rel(a.dx, gx_fd, 1e-5)) ok = false;
        if (std::abs(a.dt - gt_fd) > 1e-5 * (1.0 + std::abs(gt_fd))) ok = false;
        if (!g.time_varying && a.dt != 0.0) static_ok = false;
      }
    }
    if (!ok) fail(describe("guard gradient inconsistent for guard", static_cast<int>(i)));
    if (!static_ok) fail(describe("time-invariant guard depends on time: guard", static_cast<int>(i)));
  }

  for (std::size_t i = 0; i < p.jumps.size(); ++i) {
    const Jump& j = p.jumps[i];
    bool ok = true;
    bool static_ok = true;
    for (const auto& x : points) {
      for (double t : tf_probe) {
        const Vec y = j.apply(x, t);
        if (y.size() != p.n || !y.allFinite()) {
          ok = false;
          continue;
        }
        const double h = 1e-6 * (1.0 + std::abs(t));
        const Vec dt_fd = (j.map(x, t + h) - j.map(x, t - h)) / (2.0 * h);
        if (!j.time_varying && dt_fd.cwiseAbs().maxCoeff() > 1e-8) static_ok = false;
        if (j.jacobian_x) {
          const Mat fd = geometry::fd_jacobian([&](const Vec& z) { return j.map(z, t); }, x);
          if (!close_rel(j.jacobian_x(x, t), fd, 1e-5)) ok = false;
        }
        if (j.time_varying && j.d_t && !close_rel(j.d_t(x, t), dt_fd, 1e-5)) ok = false;
      }
    }
    if (!ok) fail(describe("jump derivatives inconsistent for jump", static_cast<int>(i)));
    if (!static_ok) fail(describe("time-invariant jump depends on time: jump", static_cast<int>(i)));
  }

  if (p.terminal_cost.grad) {
    bool ok = true;
    for (const auto& x : points) {
      const Vec a = p.terminal_cost.grad(x);
      const Vec fd = geometry::fd_gradient(p.terminal_cost.fn, x);
      if (a.size() != p.n || !close_rel(a, fd, 1e-6)) ok = false;
    }
    if (!ok) fail("terminal gradient inconsistent");
  }

  bool any_tv_guard = false;
  bool any_tv_jump = false;
  for (const auto& g : p.guards) any_tv_guard = any_tv_guard || g.time_varying;
  for (const auto& j : p.jumps) any_tv_jump = any_tv_jump || j.time_varying;
  switch (p.variant) {
    case TheoremVariant::TimeInvariant:
    case TheoremVariant::InteriorOptimal:
      if (any_tv_guard || any_tv_jump) {
        fail("variant " + to_string(p.variant) + " requires time-invariant guards and jumps");
      }
      if (p.variant == TheoremVariant::InteriorOptimal && p.guards.empty()) {
        fail("variant InteriorOptimal requires at least one switching");
      }
      break;
    case TheoremVariant::TimeVaryingGuard:
      if (!any_tv_guard) fail("variant TimeVaryingGuard requires a time-varying guard");
      if (any_tv_jump) fail("variant TimeVaryingGuard does not admit time-varying jumps");
      break;
    case TheoremVariant::TimeVaryingJump:
      if (!any_tv_jump) fail("variant TimeVaryingJump requires a time-varying jump");
      break;
    case TheoremVariant::Combined:
      if (!any_tv_guard || !any_tv_jump) {
        fail("variant Combined requires a time-varying guard and a time-varying jump");
      }
      break;
  }
  return rep;
}

ControlLaw constant_law(const Vec& u) {
  return [u](double, const Vec&, const Vec*) { return u; };
}

}  // namespace model
}  // namespace hmp
