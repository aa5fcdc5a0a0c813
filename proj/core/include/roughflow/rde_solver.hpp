#pragma once

// Davie-type step-2 solver for dx = sum_i V_i(x) dw^i + V_0(x) dt on R^p, with
// flow Jacobians and inverse flows through time-reversed drivers.

#include "roughflow/tensor_algebra.hpp"
#include "roughflow/vector_field.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace roughflow {

inline constexpr double kJacobianTol = 1e-8;
inline constexpr double kConditionTol = 1e12;

struct SolveConfig {
  double alpha = kDefaultAlpha;
  /// Steps per grid cell (linear cells only; atomic cells take one step).
  int base_subdiv = 8;
  /// Double the subdivision until the endpoint moves by less than step_tol
  /// on `confirmations` consecutive doublings.
  bool refine = true;
  double step_tol = 1e-7;
  int confirmations = 2;
  /// Tolerance used instead when the Jacobians are integrated too (the smaller of the two applies).
  double jacobian_tol = 1e-8;
  /// The state leaving this ball is reported as an explosion.
  double explosion_radius = 1e8;
  /// Upper limit for refinement.
  int max_subdiv = 1 << 14;

  void validate() const;
};

/// Index of the entry of the sorted `times` equal to t within round-off; throws ValidationError otherwise.
std::size_t sample_index(const std::vector<double>& times, double t);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  // Filled by solve_with_jacobians only.
  std::vector<Matrix> j1;
  std::vector<Matrix> jinv;
  std::vector<Tensor3> j2;
  /// Per-cell subdivision that produced the samples.
  int subdivision = 0;
  /// False when refinement hit max_subdiv before meeting step_tol.
  bool converged = true;

  std::size_t size() const { return times.size(); }
  const Vector& final_state() const { return states.back(); }
  /// Index of the sample at time t (within round-off). Throws if t is not a sample time.
  std::size_t index_of(double t) const { return sample_index(times, t); }
  const Vector& state_at(double t) const { return states[index_of(t)]; }
};

/// One step of the second-order scheme
///   x + sum_i V_i w^{1,i} + sum_{j,k} (grad V_k . V_j) w^{2,jk} + V_0 dt
/// plus the space-time terms 1/2 (grad V_0 . V_0) dt^2 and
/// 1/2 dt w^{1,k} (grad V_k . V_0 + grad V_0 . V_k), which are O(|t-s|^{1+alpha})
/// and exact for straight segments.
Vector davie_step(const Vector& x, const Increment& inc, const VectorFieldFamily& V);

/// Path knots inside [a, b] plus a and b, each linear cell split into n equal steps.
std::vector<double> subdivision_grid(const GridRoughPath& path, double a, double b, int n);

/// Composition of davie_step over `grid`. Throws ExplosionError if the state
/// leaves the ball of radius `explosion_radius` or stops being finite.
Trajectory solve_on_grid(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                         const std::vector<double>& grid,
                         double explosion_radius = std::numeric_limits<double>::infinity());

/// Solve on [a, b] (whole path domain when omitted).
Trajectory solve_rde(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                     const SolveConfig& cfg, std::optional<double> a = std::nullopt,
                     std::optional<double> b = std::nullopt);

/// Augments the state with J^(1), J^(-1) (and J^(2) when order == 2) and solves the joint system.
/// Needs V.order() >= order + 1. Throws SingularityError if |J1||J^(-1)| exceeds kConditionTol.
Trajectory solve_with_jacobians(const Vector& xi, const GridRoughPath& path, const VectorFieldFamily& V,
                                const SolveConfig& cfg, int order, std::optional<double> a = std::nullopt,
                                std::optional<double> b = std::nullopt);

/// Inverse of xi -> x_S: solve from eta along the reversal of path|[start, S]
/// with the drift sign flipped.
Vector inverse_flow_point(const Vector& eta, const GridRoughPath& path, const VectorFieldFamily& V,
                          const SolveConfig& cfg, double S);

/// Dyadic interval lengths (b - a) / 2^k for k in [coarsest, finest].
struct RemainderLadder {
  int coarsest = 1;
  int finest = 8;
};

/// Least-squares slope of log|R_{s,t}| against log|t - s| over every dyadic
/// interval of the ladder, where R is the remainder of the second-order
/// expansion of f along the trajectory. Returns +infinity when R vanishes identically.
double check_davie_remainder(const Trajectory& traj, const GridRoughPath& path, const VectorFieldFamily& V,
                             const TestFunction& f, double alpha, RemainderLadder ladder = {});

/// Same, also returning the largest |R| at each ladder length.
struct RemainderFit {
  double slope = 0.0;
  std::vector<double> lengths;
  std::vector<double> max_remainder;
};
RemainderFit fit_davie_remainder(const Trajectory& traj, const GridRoughPath& path, const VectorFieldFamily& V,
                                 const TestFunction& f, double alpha, RemainderLadder ladder = {});

/// The joint system (x, J1, J^(-1)[, J2]) as a vector field family on R^{p + 2p^2 [+ p^3]}.
/// Keeps the base-field derivatives at the last x per field, so one instance
/// must not be shared between threads.
class JacobianSystem final : public VectorFieldFamily {
 public:
  JacobianSystem(const VectorFieldFamily& base, int order);

  Eigen::Index state_dim() const override { return dim_; }
  Eigen::Index driver_dim() const override { return base_.driver_dim(); }
  int order() const override { return 1; }
  Vector eval(int i, const Vector& X) const override;
  Matrix grad(int i, const Vector& X) const override;
  Vector jvp(int i, const Vector& X, const Vector& Y) const override;

  Eigen::Index base_dim() const { return p_; }
  int jacobian_order() const { return order_; }

  Vector pack(const Vector& x, const Matrix& j1, const Matrix& jinv, const Tensor3* j2) const;
  Vector initial_state(const Vector& xi) const;
  Vector state_part(const Vector& X) const { return X.head(p_); }
  Matrix j1_part(const Vector& X) const;
  Matrix jinv_part(const Vector& X) const;
  Tensor3 j2_part(const Vector& X) const;

 private:
  struct Derivatives {
    Vector x;
    Matrix grad;
    Tensor3 hess;
    Tensor4 third;
    bool valid = false;
  };
  const Derivatives& derivatives(int i, const Vector& x) const;

  const VectorFieldFamily& base_;
  int order_;
  Eigen::Index p_;
  Eigen::Index dim_;
  mutable std::vector<Derivatives> cache_;
};

}  // namespace roughflow
