#include "roughflow/tensor_algebra.hpp"

#include "roughflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace roughflow {

namespace {

double snap_tolerance(double start, double end) {
  return 1e-12 * std::max({1.0, std::abs(start), std::abs(end)});
}

double dt_tolerance(double start, double end) {
  return 1e-9 * std::max({1.0, std::abs(start), std::abs(end)});
}

}  // namespace

void validate_alpha(double alpha) {
  if (!(alpha > 1.0 / 3.0 && alpha < 0.5)) {
    std::ostringstream os;
    os << "alpha must lie in (1/3, 1/2), got " << alpha;
    throw ValidationError(os.str());
  }
}

Increment Increment::zero(Eigen::Index d, double dt) {
  return Increment{Vector::Zero(d), Matrix::Zero(d, d), dt};
}

Increment Increment::segment(const Vector& delta, double dt) {
  return Increment{delta, 0.5 * delta * delta.transpose(), dt};
}

Increment chen_combine(const Increment& a, const Increment& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("chen_combine: dimension mismatch");
  }
  Increment out;
  out.level1 = a.level1 + b.level1;
  out.level2 = a.level2 + b.level2 + a.level1 * b.level1.transpose();
  out.dt = a.dt + b.dt;
  return out;
}

Increment chen_inverse(const Increment& a) {
  // From chen_combine(a, x) = 0: x1 = -a1, x2 = -a2 + a1 a1^T.
  Increment out;
  out.level1 = -a.level1;
  out.level2 = -a.level2 + a.level1 * a.level1.transpose();
  out.dt = -a.dt;
  return out;
}

double check_shuffle(const Increment& inc) {
  const Matrix residual = inc.level1 * inc.level1.transpose() - inc.level2 - inc.level2.transpose();
  return residual.size() == 0 ? 0.0 : residual.cwiseAbs().maxCoeff();
}

double chen_residual(const Increment& a, const Increment& b, const Increment& ab) {
  const Increment c = chen_combine(a, b);
  const double diff = std::max((c.level1 - ab.level1).cwiseAbs().maxCoeff(),
                               (c.level2 - ab.level2).cwiseAbs().maxCoeff());
  const double scale = 1.0 + a.level1.norm() * b.level1.norm() + a.level2.norm() + b.level2.norm();
  return diff / scale;
}

GridRoughPath::GridRoughPath(std::vector<double> times, std::vector<Increment> cells,
                             std::vector<CellKind> kinds, double alpha, bool geometric)
    : times_(std::move(times)),
      cells_(std::move(cells)),
      kinds_(std::move(kinds)),
      alpha_(alpha),
      geometric_(geometric) {
  validate_alpha(alpha_);
  if (times_.size() < 2) {
    throw ValidationError("GridRoughPath needs at least one cell");
  }
  if (cells_.size() + 1 != times_.size() || kinds_.size() != cells_.size()) {
    throw ValidationError("GridRoughPath: times/cells/kinds size mismatch");
  }
  dim_ = cells_.front().dim();
  const double dt_tol = dt_tolerance(times_.front(), times_.back());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Increment& c = cells_[i];
    if (!std::isfinite(times_[i + 1]) || !(times_[i + 1] > times_[i])) {
      throw ValidationError("GridRoughPath: times must be finite and strictly increasing");
    }
    if (c.dim() != dim_ || c.level2.rows() != dim_ || c.level2.cols() != dim_) {
      throw ValidationError("GridRoughPath: inconsistent increment dimensions");
    }
    if (!(c.dt >= 0.0) || std::abs(c.dt - (times_[i + 1] - times_[i])) > dt_tol) {
      throw ValidationError("GridRoughPath: cell dt does not match its interval");
    }
    const double scale = 1.0 + c.level1.squaredNorm();
    if (kinds_[i] == CellKind::linear) {
      const Matrix expected = 0.5 * c.level1 * c.level1.transpose();
      if ((c.level2 - expected).cwiseAbs().maxCoeff() > kChenTol * scale) {
        throw ValidationError("GridRoughPath: linear cell level2 is not 1/2 l1 (x) l1");
      }
    }
    if (geometric_ && check_shuffle(c) > kShuffleTol * scale) {
      throw ValidationError("GridRoughPath: geometric flag set but a cell violates the shuffle relation");
    }
  }
  prefix_.reserve(times_.size());
  prefix_.push_back(Increment::zero(dim_));
  for (const Increment& c : cells_) {
    prefix_.push_back(chen_combine(prefix_.back(), c));
  }
}

bool GridRoughPath::all_linear() const {
  return std::all_of(kinds_.begin(), kinds_.end(), [](CellKind k) { return k == CellKind::linear; });
}

Increment GridRoughPath::knot_increment(std::size_t i, std::size_t j) const {
  if (i > j || j >= times_.size()) {
    throw ValidationError("knot_increment: bad knot indices");
  }
  if (i == j) {
    return Increment::zero(dim_);
  }
  if (j == i + 1) {
    return cells_[i];
  }
  const Increment& pi = prefix_[i];
  const Increment& pj = prefix_[j];
  Increment out;
  out.level1 = pj.level1 - pi.level1;
  out.level2 = pj.level2 - pi.level2 - pi.level1 * out.level1.transpose();
  out.dt = times_[j] - times_[i];
  return out;
}

std::size_t GridRoughPath::locate(double t) const {
  if (t >= times_.back()) {
    return cells_.size() - 1;
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) {
    return 0;
  }
  return static_cast<std::size_t>(std::distance(times_.begin(), it)) - 1;
}

bool GridRoughPath::is_knot(double t) const {
  return std::binary_search(times_.begin(), times_.end(), t);
}

Increment GridRoughPath::within_cell(std::size_t cell, double s, double t) const {
  if (s == times_[cell] && t == times_[cell + 1]) {
    return cells_[cell];
  }
  if (kinds_[cell] == CellKind::atomic) {
    std::ostringstream os;
    os << "interior query [" << s << ", " << t << "] on atomic cell [" << times_[cell] << ", "
       << times_[cell + 1] << "]";
    throw ValidationError(os.str());
  }
  const double frac = (t - s) / (times_[cell + 1] - times_[cell]);
  Increment out = Increment::segment(frac * cells_[cell].level1, t - s);
  return out;
}

Increment GridRoughPath::increment(double s, double t) const {
  const double tol = snap_tolerance(times_.front(), times_.back());
  if (!(s <= t) || s < times_.front() - tol || t > times_.back() + tol) {
    std::ostringstream os;
    os << "query [" << s << ", " << t << "] outside [" << times_.front() << ", " << times_.back()
       << "] or reversed";
    throw ValidationError(os.str());
  }
  // Snap to knots within round-off so that reflected or shifted grids line up.
  auto snap = [&](double x) {
    x = std::clamp(x, times_.front(), times_.back());
    const std::size_t c = locate(x);
    if (std::abs(x - times_[c]) <= tol) return times_[c];
    if (std::abs(x - times_[c + 1]) <= tol) return times_[c + 1];
    return x;
  };
  s = snap(s);
  t = snap(t);
  if (s == t) {
    return Increment::zero(dim_);
  }
  // a = first knot >= s, b = last knot <= t.
  const auto a_it = std::lower_bound(times_.begin(), times_.end(), s);
  const auto b_it = std::prev(std::upper_bound(times_.begin(), times_.end(), t));
  const auto a = static_cast<std::size_t>(std::distance(times_.begin(), a_it));
  const auto b = static_cast<std::size_t>(std::distance(times_.begin(), b_it));
  if (a_it == times_.end() || a > b) {
    return within_cell(locate(s), s, t);
  }
  Increment out = knot_increment(a, b);
  if (s < times_[a]) {
    out = chen_combine(within_cell(a - 1, s, times_[a]), out);
  }
  if (t > times_[b]) {
    out = chen_combine(out, within_cell(b, times_[b], t));
  }
  out.dt = t - s;
  return out;
}

Increment query_increment(const GridRoughPath& path, double s, double t) {
  return path.increment(s, t);
}

double max_chen_residual(const GridRoughPath& path) {
  const std::size_t n = path.times().size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const Increment ij = path.knot_increment(i, j);
      for (std::size_t k = j; k < n; ++k) {
        worst = std::max(worst, chen_residual(ij, path.knot_increment(j, k), path.knot_increment(i, k)));
      }
    }
  }
  return worst;
}

double max_shuffle_residual(const GridRoughPath& path) {
  const std::size_t n = path.times().size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Increment inc = path.knot_increment(i, j);
      worst = std::max(worst, check_shuffle(inc) / (1.0 + inc.level1.squaredNorm()));
    }
  }
  return worst;
}

namespace {

// Prefix increments over [t_0, t_i] in flat arrays, so the O(N^2) pair loops
// below run without allocating.
struct FlatPrefix {
  Eigen::Index d = 0;
  std::vector<double> l1;  // n x d
  std::vector<double> l2;  // n x d x d, row-major

  explicit FlatPrefix(const GridRoughPath& path) : d(path.dim()) {
    const std::size_t n = path.times().size();
    const auto dd = static_cast<std::size_t>(d);
    l1.resize(n * dd);
    l2.resize(n * dd * dd);
    for (std::size_t i = 1; i < n; ++i) {
      const Increment inc = path.knot_increment(0, i);
      for (std::size_t a = 0; a < dd; ++a) {
        l1[i * dd + a] = inc.level1[static_cast<Eigen::Index>(a)];
        for (std::size_t b = 0; b < dd; ++b) {
          l2[(i * dd + a) * dd + b] = inc.level2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
    }
  }

  // Squared norms of X_ij (or of X_ij - Y_ij when other != nullptr), via
  // X_ij^1 = P_j^1 - P_i^1 and X_ij^2 = P_j^2 - P_i^2 - P_i^1 (x) X_ij^1.
  std::pair<double, double> pair_sq(std::size_t i, std::size_t j, const FlatPrefix* other) const {
    const auto dd = static_cast<std::size_t>(d);
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t a = 0; a < dd; ++a) {
      double x1a = l1[j * dd + a] - l1[i * dd + a];
      if (other) x1a -= other->l1[j * dd + a] - other->l1[i * dd + a];
      s1 += x1a * x1a;
      for (std::size_t b = 0; b < dd; ++b) {
        double x2 = l2[(j * dd + a) * dd + b] - l2[(i * dd + a) * dd + b] -
                    l1[i * dd + a] * (l1[j * dd + b] - l1[i * dd + b]);
        if (other) {
          x2 -= other->l2[(j * dd + a) * dd + b] - other->l2[(i * dd + a) * dd + b] -
                other->l1[i * dd + a] * (other->l1[j * dd + b] - other->l1[i * dd + b]);
        }
        s2 += x2 * x2;
      }
    }
    return {s1, s2};
  }
};

}  // namespace

HolderReport holder_norms(const GridRoughPath& path) {
  HolderReport report;
  report.alpha = path.alpha();
  const auto& times = path.times();
  const std::size_t n = times.size();
  const FlatPrefix flat(path);
  double best1 = 0.0;
  double best2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto [s1, s2] = flat.pair_sq(i, j, nullptr);
      const double ha = std::pow(times[j] - times[i], path.alpha());
      best1 = std::max(best1, std::sqrt(s1) / ha);
      best2 = std::max(best2, std::sqrt(s2) / (ha * ha));
    }
  }
  report.norm1 = best1;
  report.norm2 = best2;
  return report;
}

namespace {

std::vector<double> common_grid(const GridRoughPath& a, const GridRoughPath& b) {
  const auto& ta = a.times();
  const auto& tb = b.times();
  std::vector<double> grid;
  if (a.all_linear() && b.all_linear()) {
    std::set_union(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(grid));
  } else {
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(grid));
  }
  // Drop near-duplicates introduced by round-off in one of the grids.
  const double tol = snap_tolerance(a.start(), a.end());
  std::vector<double> out;
  for (double t : grid) {
    if (out.empty() || t - out.back() > tol) out.push_back(t);
  }
  if (!out.empty()) {
    out.front() = a.start();
    out.back() = a.end();
  }
  return out;
}

}  // namespace

double rp_distance(const GridRoughPath& a, const GridRoughPath& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("rp_distance: driver dimensions differ");
  }
  if (a.alpha() != b.alpha()) {
    throw ValidationError("rp_distance: alpha differs");
  }
  const double tol = snap_tolerance(a.start(), a.end());
  if (std::abs(a.start() - b.start()) > tol || std::abs(a.end() - b.end()) > tol) {
    throw ValidationError("rp_distance: domains differ");
  }
  const std::vector<double> grid = common_grid(a, b);
  if (grid.size() < 2) {
    throw ValidationError("rp_distance: no common grid");
  }
  const FlatPrefix fa(resample(a, grid));
  const FlatPrefix fb(resample(b, grid));
  const double alpha = a.alpha();
  double d1 = 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const auto [s1, s2] = fa.pair_sq(i, j, &fb);
      const double ha = std::pow(grid[j] - grid[i], alpha);
      d1 = std::max(d1, std::sqrt(s1) / ha);
      d2 = std::max(d2, std::sqrt(s2) / (ha * ha));
    }
  }
  return std::max(d1, d2);
}

GridRoughPath resample(const GridRoughPath& path, const std::vector<double>& grid) {
  if (grid.size() < 2) {
    throw ValidationError("resample: grid needs at least two points");
  }
  std::vector<Increment> cells;
  std::vector<CellKind> kinds;
  cells.reserve(grid.size() - 1);
  kinds.reserve(grid.size() - 1);
  const double tol = snap_tolerance(path.start(), path.end());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (!(grid[k + 1] > grid[k])) {
      throw ValidationError("resample: grid must be strictly increasing");
    }
    cells.push_back(path.increment(grid[k], grid[k + 1]));
    const std::size_t c = path.locate(grid[k]);
    const bool single_cell = grid[k + 1] <= path.times()[c + 1] + tol;
    kinds.push_back(single_cell ? path.kinds()[c] : CellKind::atomic);
    cells.back().dt = grid[k + 1] - grid[k];
  }
  return GridRoughPath(grid, std::move(cells), std::move(kinds), path.alpha(), path.geometric());
}

GridRoughPath restrict_to(const GridRoughPath& path, double a, double b) {
  if (!(a < b)) {
    throw ValidationError("restrict_to: need a < b");
  }
  const double tol = snap_tolerance(path.start(), path.end());
  std::vector<double> grid{a};
  for (double t : path.times()) {
    if (t > a + tol && t < b - tol) grid.push_back(t);
  }
  grid.push_back(b);
  return resample(path, grid);
}

GridRoughPath time_reverse(const GridRoughPath& path, double T) {
  const auto& times = path.times();
  const std::size_t n = path.num_cells();
  std::vector<double> rtimes(n + 1);
  std::vector<Increment> rcells(n);
  std::vector<CellKind> rkinds(n);
  for (std::size_t k = 0; k <= n; ++k) {
    rtimes[k] = T - times[n - k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Increment& c = path.cells()[n - 1 - k];
    rcells[k] = Increment{-c.level1, c.level2.transpose(), c.dt};
    rkinds[k] = path.kinds()[n - 1 - k];
  }
  return GridRoughPath(std::move(rtimes), std::move(rcells), std::move(rkinds), path.alpha(),
                       path.geometric());
}

GridRoughPath dilate(const GridRoughPath& path, double eps) {
  std::vector<Increment> cells = path.cells();
  for (Increment& c : cells) {
    c.level1 *= eps;
    c.level2 *= eps * eps;
  }
  return GridRoughPath(path.times(), std::move(cells), path.kinds(), path.alpha(), path.geometric());
}

GridRoughPath time_shift(const GridRoughPath& path, double t0) {
  std::vector<double> times = path.times();
  for (double& t : times) t += t0;
  return GridRoughPath(std::move(times), path.cells(), path.kinds(), path.alpha(), path.geometric());
}

}  // namespace roughflow
