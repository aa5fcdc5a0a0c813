#pragma once

// Truncated level-2 tensor algebra over R^d and rough paths stored on a time grid.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace roughflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultAlpha = 0.4;
// Chen and shuffle identities are exact in real arithmetic for every constructor
// in this library, so anything above this is a bug rather than approximation error.
inline constexpr double kChenTol = 1e-10;
inline constexpr double kShuffleTol = 1e-10;

// Throws ValidationError unless alpha lies in the open interval (1/3, 1/2).
void validate_alpha(double alpha);

/// One rough-path increment over an interval [s, t]: the level-1 vector,
/// the level-2 matrix of iterated integrals and the interval length t - s.
struct Increment {
  Vector level1;
  Matrix level2;
  double dt = 0.0;

  static Increment zero(Eigen::Index d, double dt = 0.0);
  /// Increment of a straight segment: level2 = 1/2 delta (x) delta.
  static Increment segment(const Vector& delta, double dt);

  Eigen::Index dim() const { return level1.size(); }
};

/// Chen product: the increment over [s, t] from those over [s, u] and [u, t].
Increment chen_combine(const Increment& a, const Increment& b);

/// Group inverse: chen_combine(a, chen_inverse(a)) is the zero increment (with dt = 0).
Increment chen_inverse(const Increment& a);

/// max_{j,k} |l1_j l1_k - l2_jk - l2_kj|.
double check_shuffle(const Increment& inc);

/// Absolute-plus-relative Chen mismatch between chen_combine(a, b) and `ab`,
/// scaled by 1 + |a.l1||b.l1| + |a.l2| + |b.l2|.
double chen_residual(const Increment& a, const Increment& b, const Increment& ab);

enum class CellKind {
  linear,  // straight segment, interior queries answered in closed form
  atomic,  // only the full cell increment is known, interior queries refused
};

/// A rough path on a finite grid t_0 < ... < t_N. Each consecutive interval
/// stores its increment; any other (s, t) is reconstructed with Chen's identity.
/// Immutable after construction.
class GridRoughPath {
 public:
  GridRoughPath(std::vector<double> times, std::vector<Increment> cells, std::vector<CellKind> kinds,
                double alpha, bool geometric);

  Eigen::Index dim() const { return dim_; }
  double alpha() const { return alpha_; }
  bool geometric() const { return geometric_; }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }
  std::size_t num_cells() const { return cells_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Increment>& cells() const { return cells_; }
  const std::vector<CellKind>& kinds() const { return kinds_; }
  bool all_linear() const;

  /// Increment between grid knots i <= j.
  Increment knot_increment(std::size_t i, std::size_t j) const;

  /// Increment over arbitrary [s, t] inside the domain.
  /// Throws ValidationError for out-of-range times or interior queries on atomic cells.
  Increment increment(double s, double t) const;

  /// Index of the cell containing t (t_i <= t < t_{i+1}); N - 1 for t == end().
  std::size_t locate(double t) const;
  /// Whether t is exactly a grid knot.
  bool is_knot(double t) const;

 private:
  Increment within_cell(std::size_t cell, double s, double t) const;

  std::vector<double> times_;
  std::vector<Increment> cells_;
  std::vector<CellKind> kinds_;
  std::vector<Increment> prefix_;  // increment over [t_0, t_i]
  Eigen::Index dim_ = 0;
  double alpha_ = kDefaultAlpha;
  bool geometric_ = false;
};

Increment query_increment(const GridRoughPath& path, double s, double t);

/// Largest Chen residual over all grid triples i <= j <= k.
double max_chen_residual(const GridRoughPath& path);
/// Largest shuffle residual over all grid pairs, scaled by 1 + |l1|^2.
double max_shuffle_residual(const GridRoughPath& path);

/// Hoelder norms taken over grid pairs only, hence a lower bound for the
/// supremum over the continuum of pairs.
struct HolderReport {
  double norm1 = 0.0;
  double norm2 = 0.0;
  double alpha = kDefaultAlpha;
};

HolderReport holder_norms(const GridRoughPath& path);

/// Inhomogeneous distance max_i ||w^i - v^i||_{i alpha} over common grid pairs.
/// When both paths have only linear cells the union of the two grids is used,
/// otherwise their intersection. Domains, alpha and d must agree.
double rp_distance(const GridRoughPath& a, const GridRoughPath& b);

/// Re-express `path` on `grid` (which must lie inside the domain and hit both ends).
GridRoughPath resample(const GridRoughPath& path, const std::vector<double>& grid);

/// Restriction to [a, b]; the new grid is a, the interior knots, b.
GridRoughPath restrict_to(const GridRoughPath& path, double a, double b);

/// (R_T w)^1_{s,t} = -w^1_{T-t,T-s},  (R_T w)^{2,ij}_{s,t} = w^{2,ji}_{T-t,T-s}.
GridRoughPath time_reverse(const GridRoughPath& path, double T);

/// (eps w^1, eps^2 w^2).
GridRoughPath dilate(const GridRoughPath& path, double eps);

/// Relabels the grid by t -> t + t0.
GridRoughPath time_shift(const GridRoughPath& path, double t0);

}  // namespace roughflow
