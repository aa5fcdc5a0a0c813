#pragma once

// Experiment drivers: Wong-Zakai convergence, support skeletons and
// small-noise concentration. Each is a pure function of its config.

#include "roughflow/foliated.hpp"
#include "roughflow/harness/config.hpp"
#include "roughflow/rde_solver.hpp"
#include "roughflow/rough_lift.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace roughflow::harness {

/// SolveConfig from the experiment config (alpha, subdiv, refine).
SolveConfig solve_config(const ExperimentConfig& cfg);
/// Field named cfg.field; its dimensions must agree with cfg.p and cfg.d.
std::shared_ptr<FieldFamily> config_field(const ExperimentConfig& cfg);
/// cfg.x0, or ones(p).
Vector config_x0(const ExperimentConfig& cfg);
/// Leaf dimension used by a named leafwise field (2 for sheared, else 1).
Eigen::Index leafwise_dim(const std::string& name);
/// Start point on the suspension from cfg.y0 (default 0.25 e_1) and cfg.z0 (default the base point).
LeafPoint config_leaf_point(const ExperimentConfig& cfg, const SuspensionSpace& space);
/// Piecewise-linear h: read from cfg.h_file, or h_t = t (1, ..., 1) on [0, T].
CameronMartinPath config_skeleton(const ExperimentConfig& cfg);

struct ConvergenceRow {
  int m = 0;
  /// d_alpha(W(m), W(m+1)) on the union grid.
  double driver_distance = 0.0;
  /// sup |w(m) - w(m+1)| over the level-(m+1) knots.
  double level1_sup = 0.0;
  /// sup over common samples of |x(m) - x(m+1)| on R^p.
  double solution_sup = 0.0;
  /// Same on the suspension space (NaN when the leafwise field needs another driver dimension).
  double foliated_sup = 0.0;
  /// |inverse flow(flow(x0)) - x0| at level m.
  double round_trip = 0.0;
  /// Solver error recorded for this row, empty when none.
  std::string error;
};

struct ConvergenceTable {
  std::uint64_t seed = 0;
  std::string field;
  std::string leaf_field;
  std::string transversal;
  std::vector<ConvergenceRow> rows;
};

/// Levels m = m_lo..m_hi from one Brownian sample at brownian_level. All levels
/// are solved on the same grid (level m_hi + 1 knots, experiment_subdiv steps each).
ConvergenceTable wong_zakai_experiment(const ExperimentConfig& cfg);
bool strictly_decreasing(const std::vector<double>& values);
void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);

struct SkeletonSample {
  std::uint64_t seed = 0;
  double distance = 0.0;
};

struct SupportReport {
  double hnorm_sq = 0.0;
  Vector rde_final;
  Vector ode_final;
  /// sup over the RDE sample times of |x_rde - x_ode|.
  double ode_distance = 0.0;
  Trajectory skeleton;
  /// Foliated skeleton from the configured leaf point with cfg.leaf_field (when d matches).
  bool has_foliated = false;
  LeafPoint foliated_final;
  /// Reachability: flow distance from Brownian drivers at cfg.level to the skeleton, sorted by seed.
  std::vector<SkeletonSample> samples;
  double min_distance = 0.0;
  std::uint64_t best_seed = 0;
};

/// Solves the skeleton equation as an RDE along the lift of h and, independently,
/// as the ODE dx = V_0 dt + sum_i V_i h'^i dt with an adaptive Dormand-Prince
/// integrator (tolerance 1e-13) segment by segment.
SupportReport support_skeleton_demo(const ExperimentConfig& cfg, const CameronMartinPath& h);

struct LdpRow {
  double epsilon = 0.0;
  int exceed = 0;    // seeds with sup distance > delta
  int exploded = 0;  // seeds whose solve blew up (counted in exceed)
  int samples = 0;
  double q = 0.0;
};

struct LdpReport {
  double hnorm_sq = 0.0;
  double rate = 0.0;  // J(h) = hnorm_sq / 2
  double delta = 0.0;
  double slack = 0.0;  // 2 / sqrt(N)
  std::vector<LdpRow> rows;
  /// q(eps_{k+1}) <= q(eps_k) + slack for every k.
  bool nonincreasing = true;
};

double rate_function(const CameronMartinPath& h);

/// Small-noise concentration: fraction of seeds seed..seed+N-1 whose flow from
/// x0 driven by eps W(level) strays further than delta (sup over samples) from
/// the drift-only flow.
LdpReport ldp_experiment(const ExperimentConfig& cfg, const CameronMartinPath& h);

}  // namespace roughflow::harness
