#include "roughflow/rde_solver.hpp"

#include "roughflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace roughflow {

void SolveConfig::validate() const {
  validate_alpha(alpha);
  if (base_subdiv < 1) throw ValidationError("SolveConfig: base_subdiv must be >= 1");
  if (!(step_tol > 0.0)) throw ValidationError("SolveConfig: step_tol must be positive");
  if (!(jacobian_tol > 0.0)) throw ValidationError("SolveConfig: jacobian_tol must be positive");
  if (confirmations < 1) throw ValidationError("SolveConfig: confirmations must be >= 1");
  if (!(explosion_radius > 0.0)) throw ValidationError("SolveConfig: explosion_radius must be positive");
  if (max_subdiv < base_subdiv) throw ValidationError("SolveConfig: max_subdiv must be >= base_subdiv");
}

std::size_t sample_index(const std::vector<double>& times, double t) {
  if (times.empty()) throw ValidationError("trajectory is empty");
  const double tol = 1e-12 * std::max({1.0, std::abs(times.front()), std::abs(times.back())});
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol) {
    std::ostringstream os;
    os << "time " << t << " is not a sample of the trajectory";
    throw ValidationError(os.str());
  }
  return static_cast<std::size_t>(std::distance(times.begin(), it));
}

Vector davie_step(const Vector& x, const Increment& inc, const VectorFieldFamily& V) {
  const auto d = static_cast<int>(V.driver_dim());
  if (inc.dim() != d) {
    throw ValidationError("davie_step: increment dimension does not match the number of driving fields");
  }
  const Vector v0 = V.eval(0, x);
  std::vector<Vector> vs;
  vs.reserve(static_cast<std::size_t>(d));
  for (int i = 1; i <= d; ++i) vs.push_back(V.eval(i, x));

  Vector out = x + v0 * inc.dt;
  for (int i = 0; i < d; ++i) {
    if (inc.level1[i] != 0.0) out += vs[static_cast<std::size_t>(i)] * inc.level1[i];
  }
  // V_j V_k Id(x) = grad V_k(x) . V_j(x), weighted by w^{2,jk}.
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      const double w2 = inc.level2(j, k);
      if (w2 != 0.0) out += V.jvp(k + 1, x, vs[static_cast<std::size_t>(j)]) * w2;
    }
  }
  if (inc.dt != 0.0) {
    const bool drift_free = v0.isZero(0.0);
    if (!drift_free) out += 0.5 * inc.dt * inc.dt * V.jvp(0, x, v0);
    for (int k = 0; k < d; ++k) {
      const double w1 = inc.level1[k];
      if (w1 == 0.0) continue;
      Vector cross = V.jvp(0, x, vs[static_cast<std::size_t>(k)]);
      if (!drift_free) cross += V.jvp(k + 1, x, v0);
      out += 0.5 * inc.dt * w1 * cross;
    }
  }
  return out;
}

std::vector<double> subdivision_grid(const GridRoughPath& path, double a, double b, int n) {
  if (n < 1) throw ValidationError("subdivision_grid: n must be >= 1");
  if (!(a <= b)) throw ValidationError("subdivision_grid: need a <= b");
  std::vector<double> knots{a};
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  for (double t : path.times()) {
    if (t > a + tol && t < b - tol) knots.push_back(t);
  }
  if (b > a) knots.push_back(b);

  std::vector<double> grid{a};
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double u = knots[k];
    const double v = knots[k + 1];
    const std::size_t cell = path.locate(u);
    int steps = n;
    if (path.kinds()[cell] == CellKind::atomic) {
      const bool whole_cell = std::abs(u - path.times()[cell]) <= tol && std::abs(v - path.times()[cell + 1]) <= tol;
      if (!whole_cell) {
        std::ostringstream os;
        os << "cannot subdivide inside atomic cell [" << path.times()[cell] << ", " << path.times()[cell + 1] << "]";
        throw ValidationError(os.str());
      }
      steps = 1;
    }
    for (int j = 1; j < steps; ++j) {
      grid.push_back(u + (v - u) * (static_cast<double>(j) / steps));
    }
    grid.push_back(v);
  }
  return grid;
}

namespace {

void check_dimensions(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V) {
  if (xi.size() != V.state_dim()) {
    throw ValidationError("initial point dimension does not match the vector fields");
  }
  if (path.dim() != V.driver_dim()) {
    throw ValidationError("driver dimension does not match the number of driving fields");
  }
  if (!xi.allFinite()) throw ValidationError("initial point is not finite");
}

void check_explosion(const Vector& x, double t, double radius) {
  if (!x.allFinite() || x.norm() > radius) {
    std::ostringstream os;
    os << "solution left the ball of radius " << radius << " at t = " << t;
    throw ExplosionError(os.str(), t);
  }
}

}  // namespace

Trajectory solve_on_grid(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                         const std::vector<double>& grid, double explosion_radius) {
  check_dimensions(xi, path, V);
  if (grid.empty()) throw ValidationError("solve_on_grid: empty grid");
  Trajectory traj;
  traj.times = grid;
  traj.states.reserve(grid.size());
  traj.states.push_back(xi);
  Vector x = xi;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    x = davie_step(x, path.increment(grid[k], grid[k + 1]), V);
    check_explosion(x, grid[k + 1], explosion_radius);
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory solve_rde(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                     const SolveConfig& cfg, std::optional<double> a_opt, std::optional<double> b_opt) {
  cfg.validate();
  if (cfg.alpha != path.alpha()) {
    throw ValidationError("solve_rde: config alpha does not match the driver");
  }
  const double a = a_opt.value_or(path.start());
  const double b = b_opt.value_or(path.end());
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  if (a < path.start() - tol || b > path.end() + tol || a > b) {
    throw ValidationError("solve_rde: interval outside the driver domain");
  }
  int n = cfg.base_subdiv;
  std::vector<double> grid = subdivision_grid(path, a, b, n);
  Trajectory traj = solve_on_grid(xi, path, V, grid, cfg.explosion_radius);
  traj.subdivision = n;
  traj.converged = true;
  if (!cfg.refine) return traj;

  traj.converged = false;
  int agreed = 0;
  while (2 * n <= cfg.max_subdiv) {
    std::vector<double> finer = subdivision_grid(path, a, b, 2 * n);
    if (finer.size() == grid.size()) {  // only atomic cells: nothing to refine
      traj.converged = true;
      break;
    }
    Trajectory next = solve_on_grid(xi, path, V, finer, cfg.explosion_radius);
    const double change = (next.final_state() - traj.final_state()).norm();
    n *= 2;
    grid = std::move(finer);
    traj = std::move(next);
    traj.subdivision = n;
    // a single small change can be a sign flip of a non-monotone error
    agreed = change < cfg.step_tol ? agreed + 1 : 0;
    if (agreed >= cfg.confirmations) {
      traj.converged = true;
      break;
    }
  }
  return traj;
}

Trajectory solve_with_jacobians(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                                const SolveConfig& cfg, int order, std::optional<double> a,
                                std::optional<double> b) {
  if (order != 1 && order != 2) {
    throw ValidationError("solve_with_jacobians: order must be 1 or 2");
  }
  if (V.order() < order + 1) {
    throw ValidationError("solve_with_jacobians: vector fields lack the derivatives this order needs");
  }
  check_dimensions(xi, path, V);
  const JacobianSystem system(V, order);
  SolveConfig joint_cfg = cfg;
  joint_cfg.step_tol = std::min(cfg.step_tol, cfg.jacobian_tol);
  Trajectory joint = solve_rde(system.initial_state(xi), path, system, joint_cfg, a, b);

  Trajectory traj;
  traj.times = std::move(joint.times);
  traj.subdivision = joint.subdivision;
  traj.converged = joint.converged;
  traj.states.reserve(traj.times.size());
  traj.j1.reserve(traj.times.size());
  traj.jinv.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const Vector& X = joint.states[k];
    traj.states.push_back(system.state_part(X));
    traj.j1.push_back(system.j1_part(X));
    traj.jinv.push_back(system.jinv_part(X));
    if (order == 2) traj.j2.push_back(system.j2_part(X));
    const double cond = traj.j1.back().norm() * traj.jinv.back().norm();
    if (!std::isfinite(cond) || cond > kConditionTol) {
      std::ostringstream os;
      os << "flow Jacobian is numerically singular (condition estimate " << cond << ") at t = " << traj.times[k];
      throw SingularityError(os.str(), traj.times[k]);
    }
  }
  return traj;
}

Vector inverse_flow_point(const Vector& eta, const GridRoughPath& path, const VectorFieldFamily& V,
                          const SolveConfig& cfg, double S) {
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  if (S < path.start() - tol || S > path.end() + tol) {
    throw ValidationError("inverse_flow_point: S outside the driver domain");
  }
  if (S <= path.start() + tol) return eta;
  const GridRoughPath reversed = time_reverse(restrict_to(path, path.start(), S), path.start() + S);
  const DriftFlipped flipped(V);
  return solve_rde(eta, reversed, flipped, cfg).final_state();
}

RemainderFit fit_davie_remainder(const Trajectory& traj, const GridRoughPath& path, const VectorFieldFamily& V,
                                 const TestFunction& f, double alpha, RemainderLadder ladder) {
  validate_alpha(alpha);
  if (ladder.coarsest < 0 || ladder.finest - ladder.coarsest < 2) {
    throw ValidationError("check_davie_remainder: ladder needs at least three interval lengths");
  }
  const int d = static_cast<int>(V.driver_dim());
  const double a = traj.times.front();
  const double span = traj.times.back() - a;

  RemainderFit fit;
  // every ladder interval is one (log|t - s|, log|R|) sample; exact zeros carry no slope information
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int level = ladder.coarsest; level <= ladder.finest; ++level) {
    const std::size_t count = std::size_t{1} << level;
    const double length = std::ldexp(span, -level);
    double worst = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      const double s = a + std::ldexp(span * static_cast<double>(j), -level);
      const double t = a + std::ldexp(span * static_cast<double>(j + 1), -level);
      const Vector& xs = traj.state_at(s);
      const Vector& xt = traj.state_at(t);
      const Increment inc = path.increment(s, t);
      const Vector df = f.grad(xs);
      const Matrix d2f = f.hess(xs);
      std::vector<Vector> vs;
      for (int i = 1; i <= d; ++i) vs.push_back(V.eval(i, xs));
      double expansion = df.dot(V.eval(0, xs)) * (t - s);
      for (int i = 0; i < d; ++i) expansion += df.dot(vs[static_cast<std::size_t>(i)]) * inc.level1[i];
      for (int j2 = 0; j2 < d; ++j2) {
        for (int k2 = 0; k2 < d; ++k2) {
          const Vector& vj = vs[static_cast<std::size_t>(j2)];
          const Vector& vk = vs[static_cast<std::size_t>(k2)];
          // V_j V_k f = d2f(V_k, V_j) + df . (grad V_k . V_j)
          const double vjvkf = vk.dot(d2f * vj) + df.dot(V.jvp(k2 + 1, xs, vj));
          expansion += vjvkf * inc.level2(j2, k2);
        }
      }
      const double remainder = std::abs(f.value(xt) - f.value(xs) - expansion);
      worst = std::max(worst, remainder);
      if (remainder > 0.0) {
        const double lx = std::log(length);
        const double ly = std::log(remainder);
        n += 1.0;
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
    }
    if (worst > 0.0) {
      fit.lengths.push_back(length);
      fit.max_remainder.push_back(worst);
    }
  }
  if (fit.lengths.empty()) {
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  if (fit.lengths.size() < 2) {
    throw NumericalError("check_davie_remainder: insufficient non-zero ladder points for a fit");
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

double check_davie_remainder(const Trajectory& traj, const GridRoughPath& path, const VectorFieldFamily& V,
                             const TestFunction& f, double alpha, RemainderLadder ladder) {
  return fit_davie_remainder(traj, path, V, f, alpha, ladder).slope;
}

}  // namespace roughflow
