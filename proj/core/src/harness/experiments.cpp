#include "roughflow/harness/experiments.hpp"

#include "roughflow/errors.hpp"
#include "roughflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <boost/numeric/odeint.hpp>

namespace roughflow::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw NumericalError("trajectories sampled on different grids");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, (a.states[k] - b.states[k]).norm());
  return worst;
}

SolveConfig fixed_config(const ExperimentConfig& cfg, int subdiv) {
  SolveConfig s;
  s.alpha = cfg.alpha;
  s.refine = false;
  s.base_subdiv = subdiv;
  s.max_subdiv = std::max(subdiv, s.max_subdiv);
  return s;
}

}  // namespace

SolveConfig solve_config(const ExperimentConfig& cfg) {
  SolveConfig s;
  s.alpha = cfg.alpha;
  s.base_subdiv = cfg.subdiv;
  s.refine = cfg.refine;
  s.max_subdiv = std::max(cfg.subdiv, s.max_subdiv);
  return s;
}

std::shared_ptr<FieldFamily> config_field(const ExperimentConfig& cfg) {
  auto V = make_named_field(cfg.field, cfg.p, cfg.d);
  if (V->state_dim() != cfg.p || V->driver_dim() != cfg.d) {
    throw ValidationError("field '" + cfg.field + "' has p = " + std::to_string(V->state_dim()) +
                          ", d = " + std::to_string(V->driver_dim()) + "; set p and d accordingly");
  }
  return V;
}

Vector config_x0(const ExperimentConfig& cfg) {
  if (cfg.x0.empty()) return Vector::Ones(cfg.p);
  return Eigen::Map<const Vector>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));
}

Eigen::Index leafwise_dim(const std::string& name) { return name == "sheared" ? 2 : 1; }

LeafPoint config_leaf_point(const ExperimentConfig& cfg, const SuspensionSpace& space) {
  LeafPoint m;
  const Eigen::Index p = space.leaf_dim();
  if (!cfg.y0.empty()) {
    if (static_cast<Eigen::Index>(cfg.y0.size()) != p) {
      throw ValidationError("y0 must have as many entries as the leaf dimension");
    }
    m.y = Eigen::Map<const Vector>(cfg.y0.data(), p);
  } else {
    m.y = Vector::Zero(p);
    m.y[0] = 0.25;
  }
  m.z = cfg.z0.empty() ? ZPoint{} : space.transversal().parse(cfg.z0);
  space.validate(m);
  return m;
}

CameronMartinPath config_skeleton(const ExperimentConfig& cfg) {
  if (!cfg.h_file.empty()) {
    CameronMartinPath h = make_cameron_martin(read_path_csv_file(cfg.h_file));
    if (h.path.dim() != cfg.d) throw ValidationError("h_file dimension does not match d");
    if (h.path.start() != 0.0) throw ValidationError("h_file must start at t = 0");
    return h;
  }
  PiecewisePath h;
  h.times = {0.0, cfg.T};
  h.values = {Vector::Zero(cfg.d), Vector::Constant(cfg.d, cfg.T)};
  return make_cameron_martin(std::move(h));
}

// ---- Wong-Zakai ---------------------------------------------------------------

bool strictly_decreasing(const std::vector<double>& values) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (!(values[k] < values[k - 1])) return false;
  }
  return true;
}

ConvergenceTable wong_zakai_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto V = config_field(cfg);
  const Vector x0 = config_x0(cfg);
  const auto Z = make_transversal(cfg.transversal);
  const SuspensionSpace space(Z, leafwise_dim(cfg.leaf_field));
  const auto U = make_leafwise_field(cfg.leaf_field, Z, space.leaf_dim());
  const bool foliated = U->driver_dim() == cfg.d;
  const LeafPoint m0 = config_leaf_point(cfg, space);

  const PiecewisePath w = sample_brownian(cfg.d, cfg.T, cfg.brownian_level, cfg.seed);
  const int finest = cfg.m_hi + 1;
  const auto nlevels = static_cast<std::size_t>(finest - cfg.m_lo + 1);

  struct Level {
    PiecewisePath path;
    std::unique_ptr<GridRoughPath> driver;
    Trajectory traj;
    FoliatedTrajectory leaf;
    double round_trip = kNaN;
    std::string error;
  };
  auto levels = parallel_map(nlevels, [&](std::size_t k) {
    const int m = cfg.m_lo + static_cast<int>(k);
    Level L;
    L.path = dyadic_approx(w, m);
    L.driver = std::make_unique<GridRoughPath>(lift_piecewise_linear(L.path, cfg.alpha));
    // level m with s 2^(finest - m) steps per cell lands on the common grid
    const SolveConfig scfg = fixed_config(cfg, cfg.experiment_subdiv << (finest - m));
    try {
      L.traj = solve_rde(x0, *L.driver, *V, scfg);
      L.round_trip = (inverse_flow_point(L.traj.final_state(), *L.driver, *V, scfg, cfg.T) - x0).norm();
      if (foliated) L.leaf = solve_rde_foliated(space, m0, *L.driver, *U, scfg);
    } catch (const NumericalError& e) {
      L.error = e.what();
    }
    return L;
  });

  ConvergenceTable table;
  table.seed = cfg.seed;
  table.field = cfg.field;
  table.leaf_field = cfg.leaf_field;
  table.transversal = cfg.transversal;
  for (std::size_t k = 0; k + 1 < nlevels; ++k) {
    const Level& a = levels[k];
    const Level& b = levels[k + 1];
    ConvergenceRow row;
    row.m = cfg.m_lo + static_cast<int>(k);
    row.driver_distance = rp_distance(*a.driver, *b.driver);
    row.level1_sup = 0.0;
    for (std::size_t j = 0; j < b.path.times.size(); ++j) {
      row.level1_sup = std::max(row.level1_sup, (a.path.at(b.path.times[j]) - b.path.values[j]).norm());
    }
    row.round_trip = a.round_trip;
    if (!a.error.empty() || !b.error.empty()) {
      row.error = !a.error.empty() ? a.error : b.error;
      row.solution_sup = kNaN;
      row.foliated_sup = kNaN;
    } else {
      row.solution_sup = sup_distance(a.traj, b.traj);
      row.foliated_sup = kNaN;
      if (foliated) {
        if (a.leaf.size() != b.leaf.size()) throw NumericalError("foliated trajectories on different grids");
        double worst = 0.0;
        for (std::size_t j = 0; j < a.leaf.size(); ++j) {
          worst = std::max(worst, space.distance(a.leaf.points[j], b.leaf.points[j]));
        }
        row.foliated_sup = worst;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "m,driver_distance,level1_sup,solution_sup,foliated_sup,round_trip,error\n" << std::setprecision(17);
  for (const auto& r : table.rows) {
    os << r.m << ',' << r.driver_distance << ',' << r.level1_sup << ',' << r.solution_sup << ',' << r.foliated_sup
       << ',' << r.round_trip << ',';
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << msg << '\n';
  }
}

// ---- support ------------------------------------------------------------------

SupportReport support_skeleton_demo(const ExperimentConfig& cfg, const CameronMartinPath& h) {
  cfg.validate();
  h.path.validate();
  if (h.path.dim() != cfg.d) throw ValidationError("skeleton dimension does not match d");
  const auto V = config_field(cfg);
  const Vector x0 = config_x0(cfg);
  const GridRoughPath H = cameron_martin_lift(h, cfg.alpha);

  SupportReport report;
  report.hnorm_sq = h.hnorm_sq;
  report.skeleton = solve_rde(x0, H, *V, solve_config(cfg));
  report.rde_final = report.skeleton.final_state();

  // ODE oracle, one straight segment of h at a time.
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const auto p = static_cast<std::size_t>(cfg.p);
  State x(x0.data(), x0.data() + x0.size());
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  report.ode_distance = 0.0;
  const auto& times = report.skeleton.times;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double s = times[k];
    const double t = times[k + 1];
    const std::size_t seg = static_cast<std::size_t>(
        std::upper_bound(h.path.times.begin(), h.path.times.end(), 0.5 * (s + t)) - h.path.times.begin() - 1);
    const Vector slope = (h.path.values[seg + 1] - h.path.values[seg]) / (h.path.times[seg + 1] - h.path.times[seg]);
    auto rhs = [&](const State& xs, State& dx, double) {
      const Vector xv = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(p));
      Vector v = V->eval(0, xv);
      for (int i = 1; i <= cfg.d; ++i) v += slope[i - 1] * V->eval(i, xv);
      dx.assign(v.data(), v.data() + v.size());
    };
    ode::integrate_adaptive(stepper, rhs, x, s, t, (t - s) / 4.0);
    const Vector xv = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(p));
    report.ode_distance = std::max(report.ode_distance, (xv - report.skeleton.states[k + 1]).norm());
  }
  report.ode_final = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(p));

  const auto Z = make_transversal(cfg.transversal);
  const SuspensionSpace space(Z, leafwise_dim(cfg.leaf_field));
  const auto U = make_leafwise_field(cfg.leaf_field, Z, space.leaf_dim());
  if (U->driver_dim() == cfg.d) {
    report.has_foliated = true;
    report.foliated_final = solve_rde_foliated(space, config_leaf_point(cfg, space), H, *U, solve_config(cfg))
                                .final_point();
  }

  // Reachability: compare Brownian flows with the skeleton at the dyadic knots.
  if (std::abs(h.path.end() - cfg.T) > 1e-12 * std::max(1.0, cfg.T)) {
    throw ValidationError("skeleton must be defined on [0, T]");
  }
  std::vector<double> dyadic;
  for (std::size_t j = 0; j <= (std::size_t{1} << cfg.level); ++j) {
    dyadic.push_back(std::ldexp(cfg.T * static_cast<double>(j), -cfg.level));
  }
  std::vector<double> grid;
  std::set_union(dyadic.begin(), dyadic.end(), h.path.times.begin(), h.path.times.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end(), [&](double u, double v) { return v - u <= 1e-12 * cfg.T; }),
             grid.end());
  grid.back() = cfg.T;
  const SolveConfig fixed = fixed_config(cfg, cfg.experiment_subdiv);
  const Trajectory target = solve_rde(x0, resample(H, grid), *V, fixed);
  const auto n = static_cast<std::size_t>(cfg.samples);
  auto dists = parallel_map(n, [&](std::size_t k) {
    const std::uint64_t seed = cfg.seed + k;
    SkeletonSample s{seed, std::numeric_limits<double>::infinity()};
    try {
      const GridRoughPath W = lift_piecewise_linear(sample_brownian(cfg.d, cfg.T, cfg.level, seed), cfg.alpha);
      const Trajectory traj = solve_rde(x0, W, *V, fixed);
      double worst = 0.0;
      for (double t : dyadic) worst = std::max(worst, (traj.state_at(t) - target.state_at(t)).norm());
      s.distance = worst;
    } catch (const NumericalError&) {
    }
    return s;
  });
  report.samples = std::move(dists);
  report.min_distance = std::numeric_limits<double>::infinity();
  for (const auto& s : report.samples) {
    if (s.distance < report.min_distance) {
      report.min_distance = s.distance;
      report.best_seed = s.seed;
    }
  }
  return report;
}

// ---- LDP ----------------------------------------------------------------------

double rate_function(const CameronMartinPath& h) { return 0.5 * h.hnorm_sq; }

LdpReport ldp_experiment(const ExperimentConfig& cfg, const CameronMartinPath& h) {
  cfg.validate();
  const auto V = config_field(cfg);
  const Vector x0 = config_x0(cfg);
  const SolveConfig fixed = fixed_config(cfg, cfg.experiment_subdiv);
  const auto n = static_cast<std::size_t>(cfg.samples);

  LdpReport report;
  report.hnorm_sq = h.hnorm_sq;
  report.rate = rate_function(h);
  report.delta = cfg.delta;
  report.slack = 2.0 / std::sqrt(static_cast<double>(n));

  PiecewisePath flat;
  const std::size_t cells = std::size_t{1} << cfg.level;
  for (std::size_t j = 0; j <= cells; ++j) {
    flat.times.push_back(std::ldexp(cfg.T * static_cast<double>(j), -cfg.level));
    flat.values.push_back(Vector::Zero(cfg.d));
  }
  const Trajectory reference = solve_rde(x0, lift_piecewise_linear(flat, cfg.alpha), *V, fixed);

  // per seed: sup distance for every epsilon (+inf on blow-up)
  auto per_seed = parallel_map(n, [&](std::size_t k) {
    const GridRoughPath W =
        lift_piecewise_linear(sample_brownian(cfg.d, cfg.T, cfg.level, cfg.seed + k), cfg.alpha);
    std::vector<double> out;
    for (double eps : cfg.epsilons) {
      try {
        out.push_back(sup_distance(solve_rde(x0, dilate(W, eps), *V, fixed), reference));
      } catch (const NumericalError&) {
        out.push_back(std::numeric_limits<double>::infinity());
      }
    }
    return out;
  });

  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    LdpRow row;
    row.epsilon = cfg.epsilons[e];
    row.samples = static_cast<int>(n);
    for (const auto& d : per_seed) {
      if (std::isinf(d[e])) ++row.exploded;
      if (d[e] > cfg.delta) ++row.exceed;
    }
    row.q = static_cast<double>(row.exceed) / static_cast<double>(n);
    if (!report.rows.empty() && row.q > report.rows.back().q + report.slack) report.nonincreasing = false;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace roughflow::harness
