#include "roughflow/foliated.hpp"

#include "roughflow/errors.hpp"
#include "roughflow/parallel.hpp"
#include "roughflow/rough_lift.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace roughflow {

namespace {

// Largest deck shift we are willing to resolve by iterating F.
constexpr double kMaxShift = 1 << 20;

// n with y1 - n in [0, 1). A tiny negative y1 rounds onto the seam: y1 + 1 == 1.0,
// so such points are snapped to y1 = 0 in the same chart.
std::int64_t seam_shift(double& y1) {
  if (!std::isfinite(y1) || std::abs(y1) > kMaxShift) {
    throw ValidationError("fiber coordinate is non-finite or too far from the fundamental domain");
  }
  auto n = static_cast<std::int64_t>(std::floor(y1));
  double r = y1 - static_cast<double>(n);
  if (r >= 1.0) {
    n += 1;
    r = 0.0;
  }
  y1 = r;
  return n;
}

}  // namespace

// ---- suspension space ---------------------------------------------------------

SuspensionSpace::SuspensionSpace(std::shared_ptr<const Transversal> transversal, Eigen::Index p)
    : transversal_(std::move(transversal)), p_(p) {
  if (!transversal_) throw ValidationError("SuspensionSpace: missing transversal");
  if (p_ < 1) throw ValidationError("SuspensionSpace: leaf dimension must be >= 1");
}

std::string SuspensionSpace::description() const {
  return "suspension(p=" + std::to_string(p_) + ", " + transversal_->description() + ")";
}

LeafPoint SuspensionSpace::deck(const LeafPoint& m, std::int64_t n) const {
  LeafPoint out = m;
  out.y[0] -= static_cast<double>(n);
  out.z = transversal_->power(m.z, n);
  out.winding += n;
  return out;
}

LeafPoint SuspensionSpace::normalize(const LeafPoint& m) const {
  validate(m);
  LeafPoint out = m;
  const std::int64_t n = seam_shift(out.y[0]);
  out.z = transversal_->power(m.z, n);
  out.winding += n;
  return out;
}

void SuspensionSpace::validate(const LeafPoint& m) const {
  if (m.y.size() != p_) throw ValidationError("leaf point has the wrong fiber dimension");
  if (!m.y.allFinite()) throw ValidationError("leaf point is not finite");
  if (!transversal_->contains(m.z)) throw ValidationError("leaf point z lies outside the transversal");
}

double SuspensionSpace::leaf_distance(const LeafPoint& a, const LeafPoint& b) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t n = -1; n <= 1; ++n) {
    if (transversal_->power(b.z, -n) != a.z) continue;
    Vector diff = a.y - b.y;
    diff[0] -= static_cast<double>(n);
    best = std::min(best, diff.norm());
  }
  return best;
}

double SuspensionSpace::distance(const LeafPoint& a, const LeafPoint& b) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t n = -1; n <= 1; ++n) {
    Vector diff = a.y - b.y;
    diff[0] -= static_cast<double>(n);
    best = std::min(best, diff.norm() + transversal_->distance(a.z, transversal_->power(b.z, -n)));
  }
  return best;
}

LeafPoint SuspensionSpace::sample(std::uint64_t seed, std::uint64_t index) const {
  LeafPoint m;
  m.y.resize(p_);
  const auto base = index * static_cast<std::uint64_t>(p_);
  m.y[0] = counter_uniform(seed, base) - 0x1.0p-54;  // stays in [0, 1)
  for (Eigen::Index k = 1; k < p_; ++k) {
    m.y[k] = 2.0 * counter_uniform(seed, base + static_cast<std::uint64_t>(k)) - 1.0;
  }
  m.z = transversal_->sample(seed ^ 0x6a09e667f3bcc909ULL, index);
  return m;
}

// ---- leafwise families --------------------------------------------------------

Tensor3 LeafwiseVectorFieldFamily::hess(int, const Vector&, ZPoint) const {
  throw ValidationError("leafwise field family has no second-derivative oracle");
}

Tensor4 LeafwiseVectorFieldFamily::third(int, const Vector&, ZPoint) const {
  throw ValidationError("leafwise field family has no third-derivative oracle");
}

SuspendedFieldFamily::SuspendedFieldFamily(std::string name, std::shared_ptr<const Transversal> transversal,
                                           Eigen::Index p, std::vector<Component> components, bool self_check)
    : name_(std::move(name)), transversal_(std::move(transversal)), p_(p), components_(std::move(components)) {
  if (!transversal_) throw ValidationError(name_ + ": missing transversal");
  if (p_ < 1) throw ValidationError(name_ + ": leaf dimension must be >= 1");
  if (components_.size() < 2) throw ValidationError(name_ + ": need a drift and at least one driving field");
  bool all_hess = true;
  bool all_third = true;
  for (const auto& c : components_) {
    if (!c.eval || !c.grad) throw ValidationError(name_ + ": every component needs eval and grad");
    all_hess = all_hess && static_cast<bool>(c.hess);
    all_third = all_third && static_cast<bool>(c.third);
  }
  order_ = all_hess ? (all_third ? 3 : 2) : 1;
  if (self_check) {
    // U(., c(z)) at y_1 = 1 must continue as U(., c(F z)) at y_1 = 0, up to the available derivatives
    double seam = 0.0;
    for (std::uint64_t k = 0; k < 8; ++k) {
      const ZPoint z = transversal_->sample(29, k);
      const double c_left = transversal_->coordinate(z);
      const double c_right = transversal_->coordinate(transversal_->forward(z));
      Vector left(p_);
      for (Eigen::Index j = 0; j < p_; ++j) left[j] = 2.0 * counter_uniform(31 + k, static_cast<std::uint64_t>(j)) - 1.0;
      left[0] = 1.0;
      Vector right = left;
      right[0] = 0.0;
      for (const auto& c : components_) {
        const auto rel = [](double diff, double scale) { return diff / (1.0 + scale); };
        const Vector a = c.eval(left, c_left);
        seam = std::max(seam, rel((a - c.eval(right, c_right)).norm(), a.norm()));
        const Matrix g = c.grad(left, c_left);
        seam = std::max(seam, rel((g - c.grad(right, c_right)).norm(), g.norm()));
        if (order_ >= 2) {
          Tensor3 h = c.hess(left, c_left);
          const double hs = h.max_abs();
          h -= c.hess(right, c_right);
          seam = std::max(seam, rel(h.max_abs(), hs));
        }
        if (order_ >= 3) {
          Vector e = Vector::Ones(p_);
          Tensor3 t = c.third(left, c_left).contract_last(e);
          const double ts = t.max_abs();
          t -= c.third(right, c_right).contract_last(e);
          seam = std::max(seam, rel(t.max_abs(), ts));
        }
      }
    }
    if (!(seam <= 1e-8)) {
      std::ostringstream os;
      os << name_ << ": field does not continue smoothly across y_1 = 1 (mismatch " << seam << ")";
      throw ValidationError(os.str());
    }
    for (std::uint64_t k = 0; k < 3; ++k) {
      const double err = derivative_mismatch(freeze(*this, transversal_->sample(17, k)), 8, k + 1, 1.5);
      if (!(err <= 1e-5)) {
        std::ostringstream os;
        os << name_ << ": derivative oracles disagree with finite differences (" << err << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

const SuspendedFieldFamily::Component& SuspendedFieldFamily::component(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= components_.size()) {
    throw ValidationError(name_ + ": field index out of range");
  }
  return components_[static_cast<std::size_t>(i)];
}

std::pair<Vector, double> SuspendedFieldFamily::reduce(const Vector& y, ZPoint z) const {
  if (y.size() != p_) throw ValidationError(name_ + ": point has the wrong dimension");
  Vector u = y;
  const std::int64_t n = seam_shift(u[0]);
  return {std::move(u), transversal_->coordinate(transversal_->power(z, n))};
}

Vector SuspendedFieldFamily::eval(int i, const Vector& y, ZPoint z) const {
  const auto& c = component(i);
  const auto [u, zc] = reduce(y, z);
  return c.eval(u, zc);
}

Matrix SuspendedFieldFamily::grad(int i, const Vector& y, ZPoint z) const {
  const auto& c = component(i);
  const auto [u, zc] = reduce(y, z);
  return c.grad(u, zc);
}

Tensor3 SuspendedFieldFamily::hess(int i, const Vector& y, ZPoint z) const {
  const auto& c = component(i);
  if (!c.hess) return LeafwiseVectorFieldFamily::hess(i, y, z);
  const auto [u, zc] = reduce(y, z);
  return c.hess(u, zc);
}

Tensor4 SuspendedFieldFamily::third(int i, const Vector& y, ZPoint z) const {
  const auto& c = component(i);
  if (!c.third) return LeafwiseVectorFieldFamily::third(i, y, z);
  const auto [u, zc] = reduce(y, z);
  return c.third(u, zc);
}

FrozenField freeze(const LeafwiseVectorFieldFamily& V, ZPoint z) { return FrozenField(V, z); }

Vector LeafwiseDriftFlipped::eval(int i, const Vector& y, ZPoint z) const {
  return i == 0 ? Vector(-base_.eval(0, y, z)) : base_.eval(i, y, z);
}

Matrix LeafwiseDriftFlipped::grad(int i, const Vector& y, ZPoint z) const {
  return i == 0 ? Matrix(-base_.grad(0, y, z)) : base_.grad(i, y, z);
}

Tensor3 LeafwiseDriftFlipped::hess(int i, const Vector& y, ZPoint z) const {
  Tensor3 h = base_.hess(i, y, z);
  if (i == 0) h *= -1.0;
  return h;
}

Tensor4 LeafwiseDriftFlipped::third(int i, const Vector& y, ZPoint z) const {
  Tensor4 t = base_.third(i, y, z);
  if (i == 0) {
    const Eigen::Index n = t.size();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = 0; c < n; ++c)
          for (Eigen::Index e = 0; e < n; ++e) t(a, b, c, e) = -t(a, b, c, e);
  }
  return t;
}

double periodicity_mismatch(const LeafwiseVectorFieldFamily& V, const SuspensionSpace& space, int probes,
                            std::uint64_t seed) {
  const Eigen::Index p = V.leaf_dim();
  const auto& Z = space.transversal();
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Vector y(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      y[j] = 3.0 * counter_uniform(seed, static_cast<std::uint64_t>(k * p + j)) - 1.5;
    }
    const ZPoint z = Z.sample(seed, static_cast<std::uint64_t>(k));
    Vector shifted = y;
    shifted[0] += 1.0;
    for (int i = 0; i <= static_cast<int>(V.driver_dim()); ++i) {
      const double diff = (V.eval(i, shifted, Z.backward(z)) - V.eval(i, y, z)).cwiseAbs().maxCoeff();
      worst = std::max(worst, diff);
    }
  }
  return worst;
}

// ---- named leafwise fields ------------------------------------------------------

namespace {

using Jet = std::array<double, 4>;  // value and three derivatives
using Profile = std::function<Jet(double u, double zc)>;

Jet jet_mul(const Jet& a, const Jet& b) {
  return {a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
          a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3]};
}

Jet jet_affine(double c, double s, const Jet& a) { return {c + s * a[0], s * a[1], s * a[2], s * a[3]}; }

Jet jet_add(const Jet& a, const Jet& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }

// b(u) = 256 q^4, q = u(1 - u)
Jet bump_jet(double u) {
  const double q = u * (1.0 - u);
  const double dq = 1.0 - 2.0 * u;
  return {256.0 * q * q * q * q, 1024.0 * q * q * q * dq, 1024.0 * (3.0 * q * q * dq * dq - 2.0 * q * q * q),
          1024.0 * (6.0 * q * dq * dq * dq - 18.0 * q * q * dq)};
}

Jet sin2pi_jet(double u) {
  constexpr double w = 2.0 * std::numbers::pi;
  const double s = std::sin(w * u);
  const double c = std::cos(w * u);
  return {s, w * c, -w * w * s, -w * w * w * c};
}

double cos2pi(double zc) { return std::cos(2.0 * std::numbers::pi * zc); }

// 1 + 1/2 b(u) cos(2 pi zc)
Jet modulation(double u, double zc) { return jet_affine(1.0, 0.5 * cos2pi(zc), bump_jet(u)); }

// f(y[in], zc) e_out
SuspendedFieldFamily::Component axis_component(Eigen::Index p, Eigen::Index out, Eigen::Index in, Profile f) {
  SuspendedFieldFamily::Component c;
  c.eval = [p, out, in, f](const Vector& y, double zc) {
    Vector v = Vector::Zero(p);
    v[out] = f(y[in], zc)[0];
    return v;
  };
  c.grad = [p, out, in, f](const Vector& y, double zc) {
    Matrix g = Matrix::Zero(p, p);
    g(out, in) = f(y[in], zc)[1];
    return g;
  };
  c.hess = [p, out, in, f](const Vector& y, double zc) {
    Tensor3 h(p);
    h(out, in, in) = f(y[in], zc)[2];
    return h;
  };
  c.third = [p, out, in, f](const Vector& y, double zc) {
    Tensor4 t(p);
    t(out, in, in, in) = f(y[in], zc)[3];
    return t;
  };
  return c;
}

SuspendedFieldFamily::Component zero_component(Eigen::Index p) {
  return axis_component(p, 0, 0, [](double, double) { return Jet{0.0, 0.0, 0.0, 0.0}; });
}

void require_dim(const std::string& name, Eigen::Index p, Eigen::Index want) {
  if (p != want) {
    throw ValidationError("leafwise field '" + name + "' needs p = " + std::to_string(want));
  }
}

}  // namespace

std::shared_ptr<SuspendedFieldFamily> make_leafwise_field(const std::string& name,
                                                          std::shared_ptr<const Transversal> transversal,
                                                          Eigen::Index p) {
  using C = SuspendedFieldFamily::Component;
  const auto constant = [](double c) { return [c](double, double) { return Jet{c, 0.0, 0.0, 0.0}; }; };
  const auto build = [&](std::vector<C> comps) {
    return std::make_shared<SuspendedFieldFamily>(name, transversal, p, std::move(comps));
  };
  if (p < 1) throw ValidationError("leafwise field: p must be >= 1");

  if (name == "zero") return build({zero_component(p), zero_component(p)});
  if (name == "unit") return build({zero_component(p), axis_component(p, 0, 0, constant(1.0))});
  if (name == "drift") return build({axis_component(p, 0, 0, constant(1.0)), zero_component(p)});
  if (name == "bump") {
    require_dim(name, p, 1);
    return build({zero_component(p), axis_component(p, 0, 0, modulation)});
  }
  if (name == "sine") {
    require_dim(name, p, 1);
    return build({zero_component(p), axis_component(p, 0, 0, [](double u, double zc) {
                    return jet_mul(sin2pi_jet(u), modulation(u, zc));
                  })});
  }
  if (name == "bump_drift") {
    require_dim(name, p, 1);
    const Profile drift = [](double u, double zc) { return jet_affine(0.0, 0.3, modulation(u, zc)); };
    const Profile noise = [](double u, double zc) {
      return jet_add(jet_affine(0.5, 0.25, sin2pi_jet(u)), jet_affine(0.0, 0.25 * cos2pi(zc), bump_jet(u)));
    };
    return build({axis_component(p, 0, 0, drift), axis_component(p, 0, 0, noise)});
  }
  if (name == "sheared") {
    require_dim(name, p, 2);
    const Profile sine = [](double u, double) {
      return Jet{std::sin(u), std::cos(u), -std::sin(u), -std::cos(u)};
    };
    return build({zero_component(p), axis_component(p, 0, 0, modulation), axis_component(p, 1, 1, sine)});
  }
  throw ValidationError("unknown leafwise field '" + name +
                        "' (zero, unit, drift, bump, sine, bump_drift, sheared)");
}

std::vector<std::string> leafwise_suite_names() { return {"bump", "sine", "bump_drift"}; }

// ---- solver -------------------------------------------------------------------

std::size_t FoliatedTrajectory::index_of(double t) const { return sample_index(times, t); }

namespace {

// Frozen family for the current chart, rebuilt when z changes.
class ChartFields {
 public:
  ChartFields(const LeafwiseVectorFieldFamily& V, int order) : V_(V), order_(order) {}

  const VectorFieldFamily& at(ZPoint z) {
    if (!frozen_ || frozen_->z() != z) {
      system_.reset();
      frozen_ = std::make_unique<FrozenField>(V_, z);
      if (order_ > 0) system_ = std::make_unique<JacobianSystem>(*frozen_, order_);
    }
    if (system_) return *system_;
    return *frozen_;
  }

 private:
  const LeafwiseVectorFieldFamily& V_;
  int order_;
  std::unique_ptr<FrozenField> frozen_;
  std::unique_ptr<JacobianSystem> system_;
};

struct ChartRun {
  std::vector<double> times;
  std::vector<Vector> states;  // chart coordinates, possibly augmented
  std::vector<ZPoint> z;
  std::vector<std::int64_t> winding;
  std::vector<Transition> transitions;
};

// Time in [s, t] where the first fiber coordinate of the step from X reaches
// `boundary`, by bisection to 1e-12 in the fiber coordinate.
double locate_crossing(const Vector& X, double s, double t, const GridRoughPath& path, const VectorFieldFamily& F,
                       double boundary) {
  if (path.kinds()[path.locate(0.5 * (s + t))] == CellKind::atomic) return t;
  const double g_lo = X[0] - boundary;
  if (g_lo == 0.0) return s;
  double lo = s;
  double hi = t;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g = davie_step(X, path.increment(s, mid), F)[0] - boundary;
    if (std::abs(g) <= 1e-12) return mid;
    if ((g < 0.0) == (g_lo < 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ChartRun run_charts(const SuspensionSpace& space, const Vector& X0, ZPoint z0, std::int64_t w0,
                    const GridRoughPath& path, const LeafwiseVectorFieldFamily& V, int order,
                    const std::vector<double>& grid, double radius, std::size_t max_transitions) {
  const auto& Z = space.transversal();
  const Eigen::Index p = space.leaf_dim();
  ChartFields fields(V, order);
  ChartRun run;
  run.times = grid;
  run.states.reserve(grid.size());
  run.z.reserve(grid.size());
  run.winding.reserve(grid.size());
  Vector X = X0;
  ZPoint z = z0;
  std::int64_t winding = w0;
  run.states.push_back(X);
  run.z.push_back(z);
  run.winding.push_back(winding);

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const VectorFieldFamily& F = fields.at(z);
    Vector next = davie_step(X, path.increment(grid[k], grid[k + 1]), F);
    if (!next.allFinite() || next.head(p).norm() > radius) {
      std::ostringstream os;
      os << "leafwise solution left the ball of radius " << radius << " at t = " << grid[k + 1];
      throw ExplosionError(os.str(), grid[k + 1]);
    }
    const double y1 = next[0];
    if (y1 >= 2.0 || y1 < -1.0) {
      std::ostringstream os;
      os << "one step crossed more than one seam at t = " << grid[k + 1] << "; increase base_subdiv";
      throw NumericalError(os.str());
    }
    std::int64_t n = y1 >= 1.0 ? 1 : (y1 < 0.0 ? -1 : 0);
    if (n != 0) {
      const double when = locate_crossing(X, grid[k], grid[k + 1], path, F, n > 0 ? 1.0 : 0.0);
      next[0] -= static_cast<double>(n);
      if (next[0] >= 1.0) {  // y1 was a hair below 0; keep the chart
        next[0] = 0.0;
        n = 0;
      }
      if (n != 0) {
        z = Z.power(z, n);
        winding += n;
        run.transitions.push_back(Transition{when, k + 1, static_cast<int>(n)});
        if (run.transitions.size() > max_transitions) {
          throw NumericalError("foliated solve exceeded the maximum number of chart transitions");
        }
      }
    }
    X = std::move(next);
    run.states.push_back(X);
    run.z.push_back(z);
    run.winding.push_back(winding);
  }
  return run;
}

FoliatedTrajectory solve_foliated_impl(const SuspensionSpace& space, const LeafPoint& m0, const GridRoughPath& path,
                                       const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg, int order,
                                       std::optional<double> a_opt, std::optional<double> b_opt,
                                       std::size_t max_transitions) {
  cfg.validate();
  if (cfg.alpha != path.alpha()) throw ValidationError("solve_rde_foliated: config alpha does not match the driver");
  if (V.leaf_dim() != space.leaf_dim()) {
    throw ValidationError("solve_rde_foliated: field leaf dimension does not match the space");
  }
  if (path.dim() != V.driver_dim()) {
    throw ValidationError("driver dimension does not match the number of driving fields");
  }
  if (order > 0 && V.order() < order + 1) {
    throw ValidationError("solve_foliated_with_jacobians: fields lack the derivatives this order needs");
  }
  const double a = a_opt.value_or(path.start());
  const double b = b_opt.value_or(path.end());
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  if (a < path.start() - tol || b > path.end() + tol || a > b) {
    throw ValidationError("solve_rde_foliated: interval outside the driver domain");
  }
  const LeafPoint start = space.normalize(m0);
  const FrozenField frozen0(V, start.z);
  std::unique_ptr<JacobianSystem> layout;
  Vector X0 = start.y;
  if (order > 0) {
    layout = std::make_unique<JacobianSystem>(frozen0, order);
    X0 = layout->initial_state(start.y);
  }

  const Eigen::Index p = space.leaf_dim();
  auto endpoint = [&](const ChartRun& r) { return LeafPoint{r.states.back().head(p), r.z.back(), r.winding.back()}; };

  int n = cfg.base_subdiv;
  std::vector<double> grid = subdivision_grid(path, a, b, n);
  ChartRun run = run_charts(space, X0, start.z, start.winding, path, V, order, grid, cfg.explosion_radius,
                            max_transitions);
  bool converged = true;
  if (cfg.refine) {
    converged = false;
    int agreed = 0;
    while (2 * n <= cfg.max_subdiv) {
      std::vector<double> finer = subdivision_grid(path, a, b, 2 * n);
      if (finer.size() == grid.size()) {
        converged = true;
        break;
      }
      ChartRun next = run_charts(space, X0, start.z, start.winding, path, V, order, finer, cfg.explosion_radius,
                                 max_transitions);
      double change = space.distance(endpoint(run), endpoint(next));
      if (order > 0) {
        const Eigen::Index rest = X0.size() - p;
        change += (run.states.back().tail(rest) - next.states.back().tail(rest)).norm();
      }
      n *= 2;
      grid = std::move(finer);
      run = std::move(next);
      agreed = change < (order > 0 ? std::min(cfg.step_tol, cfg.jacobian_tol) : cfg.step_tol) ? agreed + 1 : 0;
      if (agreed >= cfg.confirmations) {
        converged = true;
        break;
      }
    }
  }

  FoliatedTrajectory traj;
  traj.times = std::move(run.times);
  traj.transitions = std::move(run.transitions);
  traj.subdivision = n;
  traj.converged = converged;
  traj.points.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const Vector& X = run.states[k];
    traj.points.push_back(LeafPoint{X.head(p), run.z[k], run.winding[k]});
    if (order > 0) {
      traj.j1.push_back(layout->j1_part(X));
      traj.jinv.push_back(layout->jinv_part(X));
      if (order == 2) traj.j2.push_back(layout->j2_part(X));
      const double cond = traj.j1.back().norm() * traj.jinv.back().norm();
      if (!std::isfinite(cond) || cond > kConditionTol) {
        std::ostringstream os;
        os << "leafwise flow Jacobian is numerically singular (condition estimate " << cond << ") at t = "
           << traj.times[k];
        throw SingularityError(os.str(), traj.times[k]);
      }
    }
  }
  return traj;
}

}  // namespace

FoliatedTrajectory solve_rde_foliated(const SuspensionSpace& space, const LeafPoint& m0, const GridRoughPath& path,
                                      const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                                      std::optional<double> a, std::optional<double> b,
                                      std::size_t max_transitions) {
  return solve_foliated_impl(space, m0, path, V, cfg, 0, a, b, max_transitions);
}

FoliatedTrajectory solve_foliated_with_jacobians(const SuspensionSpace& space, const LeafPoint& m0,
                                                 const GridRoughPath& path, const LeafwiseVectorFieldFamily& V,
                                                 const SolveConfig& cfg, int order, std::optional<double> a,
                                                 std::optional<double> b) {
  if (order != 1 && order != 2) throw ValidationError("solve_foliated_with_jacobians: order must be 1 or 2");
  return solve_foliated_impl(space, m0, path, V, cfg, order, a, b, kMaxTransitions);
}

LeafPoint inverse_flow_foliated(const SuspensionSpace& space, const LeafPoint& eta, const GridRoughPath& path,
                                const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg, double S) {
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  if (S < path.start() - tol || S > path.end() + tol) {
    throw ValidationError("inverse_flow_foliated: S outside the driver domain");
  }
  if (S <= path.start() + tol) return space.normalize(eta);
  const GridRoughPath reversed = time_reverse(restrict_to(path, path.start(), S), path.start() + S);
  const LeafwiseDriftFlipped flipped(V);
  return solve_rde_foliated(space, eta, reversed, flipped, cfg).final_point();
}

LeafCheckReport leaf_check(const SuspensionSpace& space, const FoliatedTrajectory& traj) {
  const auto& Z = space.transversal();
  LeafCheckReport report;
  auto fail = [&](std::size_t k, const std::string& why) {
    report.ok = false;
    report.first_bad_index = k;
    report.first_bad_time = traj.times[k];
    std::ostringstream os;
    os << why << " at sample " << k << " (t = " << std::setprecision(17) << traj.times[k] << ")";
    report.message = os.str();
    return report;
  };
  if (traj.points.size() != traj.times.size()) {
    report.ok = false;
    report.message = "trajectory has mismatched sample arrays";
    return report;
  }
  std::size_t next_transition = 0;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const LeafPoint& m = traj.points[k];
    if (m.y.size() < 1 || !(m.y[0] >= 0.0 && m.y[0] < 1.0)) return fail(k, "fiber coordinate outside [0, 1)");
    if (k == 0) continue;
    const LeafPoint& prev = traj.points[k - 1];
    const std::int64_t step = m.winding - prev.winding;
    if (step == 0) {
      if (m.z != prev.z) return fail(k, "transversal coordinate changed without a transition");
      continue;
    }
    if (step == 1) {
      if (m.z != Z.forward(prev.z)) return fail(k, "transition is not F");
    } else if (step == -1) {
      if (m.z != Z.backward(prev.z)) return fail(k, "transition is not F^-1");
    } else {
      return fail(k, "winding jumped by more than one");
    }
    double when = traj.times[k];
    while (next_transition < traj.transitions.size() && traj.transitions[next_transition].index < k) {
      ++next_transition;
    }
    if (next_transition < traj.transitions.size() && traj.transitions[next_transition].index == k) {
      when = traj.transitions[next_transition].time;
    }
    report.winding_history.push_back(WindingEvent{when, k, static_cast<int>(step), m.winding});
  }
  return report;
}

FlowGridReport flow_grid(const SuspensionSpace& space, const std::vector<LeafPoint>& points,
                         const GridRoughPath& path, const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                         const std::vector<double>& times) {
  const double tol = 1e-12 * std::max({1.0, std::abs(path.start()), std::abs(path.end())});
  for (double t : times) {
    if (t < path.start() - tol || t > path.end() + tol) throw ValidationError("flow_grid: time outside the driver domain");
  }
  for (const auto& m : points) space.validate(m);

  auto rows = parallel_map(points.size(), [&](std::size_t k) {
    std::vector<FlowSample> out;
    const LeafPoint source = space.normalize(points[k]);
    for (double t : times) {
      FlowSample s;
      s.point = k;
      s.time = t;
      s.source = points[k];
      if (t <= path.start() + tol) {
        s.image = source;
        s.back = source;
      } else {
        s.image = solve_rde_foliated(space, source, path, V, cfg, path.start(), t).final_point();
        s.back = inverse_flow_foliated(space, s.image, path, V, cfg, t);
      }
      s.round_trip = space.leaf_distance(source, s.back);
      out.push_back(std::move(s));
    }
    return out;
  });

  FlowGridReport report;
  report.min_source_distance = std::numeric_limits<double>::infinity();
  report.min_image_distance.assign(times.size(), std::numeric_limits<double>::infinity());
  for (auto& row : rows) {
    for (auto& s : row) {
      report.max_round_trip = std::max(report.max_round_trip, s.round_trip);
      report.samples.push_back(std::move(s));
    }
  }
  const std::size_t nt = times.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      report.min_source_distance = std::min(report.min_source_distance, space.distance(points[i], points[j]));
      for (std::size_t q = 0; q < nt; ++q) {
        const double d = space.distance(report.samples[i * nt + q].image, report.samples[j * nt + q].image);
        report.min_image_distance[q] = std::min(report.min_image_distance[q], d);
      }
    }
  }
  for (double d : report.min_image_distance) report.injective = report.injective && d > 0.0;
  return report;
}

std::vector<FlowJacobianSample> flow_jacobian_grid(const SuspensionSpace& space,
                                                   const std::vector<LeafPoint>& points, const GridRoughPath& path,
                                                   const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                                                   int order) {
  return parallel_map(points.size(), [&](std::size_t k) {
    const FoliatedTrajectory traj = solve_foliated_with_jacobians(space, points[k], path, V, cfg, order);
    FlowJacobianSample s;
    s.source = points[k];
    s.image = traj.final_point();
    s.j1 = traj.j1.back();
    s.jinv = traj.jinv.back();
    if (order == 2) s.j2 = traj.j2.back();
    s.det = s.j1.determinant();
    if (!std::isfinite(s.det) || std::abs(s.det) < 1e-12) {
      std::ostringstream os;
      os << "leafwise flow Jacobian is singular (det = " << s.det << ") for point " << k;
      throw SingularityError(os.str(), traj.times.back());
    }
    return s;
  });
}

void write_foliated_csv(std::ostream& os, const SuspensionSpace& space, const FoliatedTrajectory& traj) {
  const Eigen::Index p = space.leaf_dim();
  os << 't';
  for (Eigen::Index i = 0; i < p; ++i) os << ",y" << (i + 1);
  os << ",z_repr,winding\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const LeafPoint& m = traj.points[k];
    os << traj.times[k];
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << m.y[i];
    os << ',' << space.transversal().repr(m.z) << ',' << m.winding << '\n';
  }
}

}  // namespace roughflow
