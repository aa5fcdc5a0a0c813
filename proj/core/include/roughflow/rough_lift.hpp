#pragma once

// Geometric rough paths from concrete paths: piecewise-linear lifts, dyadic
// approximations, seeded Brownian samples and Cameron-Martin paths.

#include "roughflow/tensor_algebra.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace roughflow {

/// Piecewise-linear path in R^d through (times[k], values[k]), starting at 0.
struct PiecewisePath {
  std::vector<double> times;
  std::vector<Vector> values;

  Eigen::Index dim() const { return values.empty() ? 0 : values.front().size(); }
  std::size_t num_segments() const { return times.empty() ? 0 : times.size() - 1; }
  double start() const { return times.front(); }
  double end() const { return times.back(); }

  /// Linear interpolation at t.
  Vector at(double t) const;
  /// Throws ValidationError unless times increase strictly and values[0] == 0.
  void validate() const;
};

/// Cameron-Martin path restricted to piecewise-linear h, with its exact
/// squared norm sum |dh|^2 / dt.
struct CameronMartinPath {
  PiecewisePath path;
  double hnorm_sq = 0.0;
};

CameronMartinPath make_cameron_martin(PiecewisePath h);

GridRoughPath lift_piecewise_linear(const PiecewisePath& w, double alpha = kDefaultAlpha);

/// Values at the dyadic knots jT/2^m, linear in between. The sample grid must contain those knots.
PiecewisePath dyadic_approx(const PiecewisePath& samples, int m);

inline constexpr int kMaxBrownianLevel = 24;

/// d-dimensional Brownian samples at jT/2^M. The k-th standard normal is a pure
/// function of (seed, k): SplitMix64 at counters 2*floor(k/2) and 2*floor(k/2)+1,
/// mapped to 53-bit uniforms and paired through Box-Muller.
PiecewisePath sample_brownian(int d, double T, int M, std::uint64_t seed);

/// Standard normal number `index` of the stream for `seed`.
double counter_normal(std::uint64_t seed, std::uint64_t index);
/// Raw 64 random bits at `counter` of the stream for `seed`.
std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter);
/// Uniform on (0, 1) with 53 random bits.
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

/// W(m) = L(w(m)).
GridRoughPath brownian_rough_path(const PiecewisePath& w, int m, double alpha = kDefaultAlpha);

GridRoughPath cameron_martin_lift(const CameronMartinPath& h, double alpha = kDefaultAlpha);

/// (R_T w)(t) = w_{T-t} - w_T for a path on [0, T].
PiecewisePath reverse_path(const PiecewisePath& w);

/// CSV with header `t,w1,...,wd`, 17 significant digits.
void write_path_csv(std::ostream& os, const PiecewisePath& w);
PiecewisePath read_path_csv(std::istream& is);
PiecewisePath read_path_csv_file(const std::string& filename);

}  // namespace roughflow
