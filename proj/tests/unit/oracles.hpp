#pragma once

// Reference computations written directly from the definitions, independent of
// the library code paths they are compared against.

#include "roughflow/rough_lift.hpp"

#include <cmath>
#include <random>

namespace oracle {

using roughflow::Matrix;
using roughflow::Vector;

// Level-2 iterated integrals of the polygon through pts[i..j]:
// sum_{a<b} D_a (x) D_b + 1/2 sum_a D_a (x) D_a.
inline Matrix polygon_level2(const std::vector<Vector>& pts, std::size_t i, std::size_t j) {
  const auto d = pts.front().size();
  Matrix s = Matrix::Zero(d, d);
  for (std::size_t a = i; a < j; ++a) {
    const Vector da = pts[a + 1] - pts[a];
    s += 0.5 * da * da.transpose();
    for (std::size_t b = a + 1; b < j; ++b) s += da * (pts[b + 1] - pts[b]).transpose();
  }
  return s;
}

// Random piecewise-linear path starting at 0, via std::mt19937_64.
inline roughflow::PiecewisePath random_path(std::mt19937_64& rng, int d, int segments, double T = 1.0) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  roughflow::PiecewisePath w;
  std::vector<double> gaps(static_cast<std::size_t>(segments));
  double total = 0.0;
  for (auto& g : gaps) total += (g = u(rng));
  w.times.push_back(0.0);
  w.values.push_back(Vector::Zero(d));
  double t = 0.0;
  for (int k = 0; k < segments; ++k) {
    t += T * gaps[static_cast<std::size_t>(k)] / total;
    Vector v = w.values.back();
    for (int i = 0; i < d; ++i) v[i] += n01(rng);
    w.times.push_back(k + 1 == segments ? T : t);
    w.values.push_back(v);
  }
  return w;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
