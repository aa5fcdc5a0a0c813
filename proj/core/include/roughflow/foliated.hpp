#pragma once

// Mapping tori M = (R^p x Z) / Z with (y, z) ~ (y - n e_1, F^n(z)), leafwise
// vector fields on them, and the chart-continuation solver.
//
// Charts: the solver keeps z frozen and integrates y in R^p. Whenever the first
// fiber coordinate leaves [0, 1) it applies the deck transformation, so the
// stored z only ever changes by F or F^-1.

#include "roughflow/rde_solver.hpp"
#include "roughflow/transversal.hpp"
#include "roughflow/vector_field.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace roughflow {

struct LeafPoint {
  Vector y;
  ZPoint z;
  /// Net number of deck transformations applied since the start.
  std::int64_t winding = 0;
};

class SuspensionSpace {
 public:
  explicit SuspensionSpace(std::shared_ptr<const Transversal> transversal, Eigen::Index p = 1);

  const Transversal& transversal() const { return *transversal_; }
  std::shared_ptr<const Transversal> transversal_ptr() const { return transversal_; }
  Eigen::Index leaf_dim() const { return p_; }
  std::string description() const;

  /// (y, z) -> (y - n e_1, F^n(z)), winding + n. Same point of M.
  LeafPoint deck(const LeafPoint& m, std::int64_t n) const;
  /// Representative with y_1 in [0, 1).
  LeafPoint normalize(const LeafPoint& m) const;
  /// Throws ValidationError on wrong dimension, non-finite y or a z outside the transversal.
  void validate(const LeafPoint& m) const;

  /// |y_a - y_b'| over the representatives b' of b whose z equals z_a exactly
  /// (deck shifts -1, 0, 1); +infinity when none does.
  double leaf_distance(const LeafPoint& a, const LeafPoint& b) const;
  /// min over n in {-1, 0, 1} of |y_a - y_b - n e_1| + d_Z(z_a, F^-n z_b).
  double distance(const LeafPoint& a, const LeafPoint& b) const;

  /// y_1 uniform in [0, 1), other fiber coordinates uniform in [-1, 1], z from the transversal.
  LeafPoint sample(std::uint64_t seed, std::uint64_t index) const;

 private:
  std::shared_ptr<const Transversal> transversal_;
  Eigen::Index p_;
};

/// V_0 (drift), V_1..V_d on the leaves, given in the chart coordinates (y, z).
/// Contract: eval(i, y + e_1, F^-1 z) == eval(i, y, z).
class LeafwiseVectorFieldFamily {
 public:
  virtual ~LeafwiseVectorFieldFamily() = default;

  virtual Eigen::Index leaf_dim() const = 0;
  virtual Eigen::Index driver_dim() const = 0;
  /// Highest y-derivative the oracles provide.
  virtual int order() const = 0;

  virtual Vector eval(int i, const Vector& y, ZPoint z) const = 0;
  virtual Matrix grad(int i, const Vector& y, ZPoint z) const = 0;
  virtual Tensor3 hess(int i, const Vector& y, ZPoint z) const;
  virtual Tensor4 third(int i, const Vector& y, ZPoint z) const;
};

/// Field given on the fundamental domain 0 <= y_1 < 1 as U_i(y, c) with
/// c = coordinate(z), and extended by V_i(y, z) = U_i(y - n e_1, c(F^n z)),
/// n = floor(y_1). The extension satisfies the periodicity contract by
/// construction; smoothness across y_1 in Z is the caller's business. With
/// self_check, U and its derivatives at y_1 = 1 are matched against the
/// continuation at y_1 = 0 (to 1e-8), and the oracles against finite differences.
class SuspendedFieldFamily final : public LeafwiseVectorFieldFamily {
 public:
  struct Component {
    std::function<Vector(const Vector&, double)> eval;
    std::function<Matrix(const Vector&, double)> grad;
    std::function<Tensor3(const Vector&, double)> hess;
    std::function<Tensor4(const Vector&, double)> third;
  };

  SuspendedFieldFamily(std::string name, std::shared_ptr<const Transversal> transversal, Eigen::Index p,
                       std::vector<Component> components, bool self_check = true);

  const std::string& name() const { return name_; }
  Eigen::Index leaf_dim() const override { return p_; }
  Eigen::Index driver_dim() const override { return static_cast<Eigen::Index>(components_.size()) - 1; }
  int order() const override { return order_; }
  Vector eval(int i, const Vector& y, ZPoint z) const override;
  Matrix grad(int i, const Vector& y, ZPoint z) const override;
  Tensor3 hess(int i, const Vector& y, ZPoint z) const override;
  Tensor4 third(int i, const Vector& y, ZPoint z) const override;

 private:
  const Component& component(int i) const;
  /// Fundamental-domain chart point and transversal coordinate for (y, z).
  std::pair<Vector, double> reduce(const Vector& y, ZPoint z) const;

  std::string name_;
  std::shared_ptr<const Transversal> transversal_;
  Eigen::Index p_;
  std::vector<Component> components_;
  int order_ = 1;
};

/// y -> V_i(y, z) for a fixed z, as an R^p family. Holds a reference to V.
class FrozenField final : public VectorFieldFamily {
 public:
  FrozenField(const LeafwiseVectorFieldFamily& V, ZPoint z) : V_(V), z_(z) {}

  Eigen::Index state_dim() const override { return V_.leaf_dim(); }
  Eigen::Index driver_dim() const override { return V_.driver_dim(); }
  int order() const override { return V_.order(); }
  Vector eval(int i, const Vector& y) const override { return V_.eval(i, y, z_); }
  Matrix grad(int i, const Vector& y) const override { return V_.grad(i, y, z_); }
  Tensor3 hess(int i, const Vector& y) const override { return V_.hess(i, y, z_); }
  Tensor4 third(int i, const Vector& y) const override { return V_.third(i, y, z_); }

  ZPoint z() const { return z_; }

 private:
  const LeafwiseVectorFieldFamily& V_;
  ZPoint z_;
};

FrozenField freeze(const LeafwiseVectorFieldFamily& V, ZPoint z);

/// Leafwise version of DriftFlipped.
class LeafwiseDriftFlipped final : public LeafwiseVectorFieldFamily {
 public:
  explicit LeafwiseDriftFlipped(const LeafwiseVectorFieldFamily& base) : base_(base) {}

  Eigen::Index leaf_dim() const override { return base_.leaf_dim(); }
  Eigen::Index driver_dim() const override { return base_.driver_dim(); }
  int order() const override { return base_.order(); }
  Vector eval(int i, const Vector& y, ZPoint z) const override;
  Matrix grad(int i, const Vector& y, ZPoint z) const override;
  Tensor3 hess(int i, const Vector& y, ZPoint z) const override;
  Tensor4 third(int i, const Vector& y, ZPoint z) const override;

 private:
  const LeafwiseVectorFieldFamily& base_;
};

/// Largest |eval(i, y + e_1, F^-1 z) - eval(i, y, z)| over random probes.
double periodicity_mismatch(const LeafwiseVectorFieldFamily& V, const SuspensionSpace& space, int probes = 64,
                            std::uint64_t seed = 1);

// ---- named leafwise fields ------------------------------------------------------
//
//   zero       all fields vanish (d = 1)
//   unit       V_1 = e_1: translation along the leaves
//   drift      V_0 = e_1, V_1 = 0
//   bump       V_1 = (1 + 1/2 b(y_1) cos 2 pi c(z)) e_1
//   sine       V_1 = sin(2 pi y_1)(1 + 1/2 b(y_1) cos 2 pi c(z)) e_1
//   bump_drift V_0 = 0.3 (1 + 1/2 b cos 2 pi c) e_1, V_1 = (0.5 + 0.25 sin 2 pi y_1 + 0.25 b cos 2 pi c) e_1
//   sheared    p = 2, d = 2: V_1 = bump profile e_1, V_2 = sin(y_2) e_2
//
// b(u) = 256 (u(1-u))^4 on the fundamental domain: its first three derivatives
// vanish at u = 0, 1, which keeps the extended fields C^3 across the seams.
// zero, unit and drift accept any p; sheared needs p = 2; the rest need p = 1.
std::shared_ptr<SuspendedFieldFamily> make_leafwise_field(const std::string& name,
                                                          std::shared_ptr<const Transversal> transversal,
                                                          Eigen::Index p = 1);
/// The smooth non-trivial suite used by experiments: bump, sine, bump_drift.
std::vector<std::string> leafwise_suite_names();

// ---- solver -------------------------------------------------------------------

inline constexpr std::size_t kMaxTransitions = 1'000'000;

struct Transition {
  /// Crossing time located by bisection on the fiber coordinate (diagnostic).
  double time = 0.0;
  /// First sample index expressed in the new chart.
  std::size_t index = 0;
  /// +1 applied F, -1 applied F^-1.
  int direction = 0;
};

struct FoliatedTrajectory {
  std::vector<double> times;
  std::vector<LeafPoint> points;
  // Leafwise Jacobians, filled by solve_foliated_with_jacobians only.
  std::vector<Matrix> j1;
  std::vector<Matrix> jinv;
  std::vector<Tensor3> j2;
  std::vector<Transition> transitions;
  int subdivision = 0;
  bool converged = true;

  std::size_t size() const { return times.size(); }
  const LeafPoint& final_point() const { return points.back(); }
  std::size_t index_of(double t) const;
};

/// Solves on M from m0 over [a, b]. The start point is first normalized to the
/// fundamental domain. Throws ExplosionError, and NumericalError when one step
/// crosses more than one seam or the transition count exceeds max_transitions.
FoliatedTrajectory solve_rde_foliated(const SuspensionSpace& space, const LeafPoint& m0, const GridRoughPath& path,
                                      const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                                      std::optional<double> a = std::nullopt, std::optional<double> b = std::nullopt,
                                      std::size_t max_transitions = kMaxTransitions);

/// Same, with the leafwise Jacobians. The deck transformation has derivative Id,
/// so the Jacobians carry over transitions unchanged. Needs V.order() >= order + 1.
FoliatedTrajectory solve_foliated_with_jacobians(const SuspensionSpace& space, const LeafPoint& m0,
                                                 const GridRoughPath& path, const LeafwiseVectorFieldFamily& V,
                                                 const SolveConfig& cfg, int order,
                                                 std::optional<double> a = std::nullopt,
                                                 std::optional<double> b = std::nullopt);

/// Inverse of m -> x_S(m): solve from eta along the reversed driver on [start, S] with the drift flipped.
LeafPoint inverse_flow_foliated(const SuspensionSpace& space, const LeafPoint& eta, const GridRoughPath& path,
                                const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg, double S);

struct WindingEvent {
  double time = 0.0;
  std::size_t index = 0;
  int direction = 0;
  std::int64_t winding = 0;
};

struct LeafCheckReport {
  bool ok = true;
  std::size_t first_bad_index = 0;
  double first_bad_time = 0.0;
  std::string message;
  std::vector<WindingEvent> winding_history;
};

/// z bit-identical between consecutive samples unless the winding moves by
/// exactly one and z moves by exactly F or F^-1; y_1 in [0, 1) throughout.
LeafCheckReport leaf_check(const SuspensionSpace& space, const FoliatedTrajectory& traj);

struct FlowSample {
  std::size_t point = 0;
  double time = 0.0;
  LeafPoint source;
  LeafPoint image;
  /// Inverse flow applied to image.
  LeafPoint back;
  /// leaf_distance(source, back).
  double round_trip = 0.0;
};

struct FlowGridReport {
  std::vector<FlowSample> samples;  // ordered by (point, time)
  double max_round_trip = 0.0;
  double min_source_distance = 0.0;
  /// Per requested time.
  std::vector<double> min_image_distance;
  bool injective = true;
};

/// Images of every point at every time in `times` (within the driver domain),
/// inverse-flow round trips and pairwise-distance diagnostics. Points run in parallel.
FlowGridReport flow_grid(const SuspensionSpace& space, const std::vector<LeafPoint>& points,
                         const GridRoughPath& path, const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                         const std::vector<double>& times);

struct FlowJacobianSample {
  LeafPoint source;
  LeafPoint image;
  Matrix j1;
  Matrix jinv;
  Tensor3 j2;
  double det = 0.0;
};

/// Leafwise Jacobians of the flow at the end of the driver. Throws
/// SingularityError when det J1 vanishes numerically.
std::vector<FlowJacobianSample> flow_jacobian_grid(const SuspensionSpace& space,
                                                   const std::vector<LeafPoint>& points, const GridRoughPath& path,
                                                   const LeafwiseVectorFieldFamily& V, const SolveConfig& cfg,
                                                   int order);

/// CSV `t,y1..yp,z_repr,winding`.
void write_foliated_csv(std::ostream& os, const SuspensionSpace& space, const FoliatedTrajectory& traj);

}  // namespace roughflow
