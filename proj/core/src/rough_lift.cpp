#include "roughflow/rough_lift.hpp"

#include "roughflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace roughflow {

Vector PiecewisePath::at(double t) const {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
  const double lambda = (t - times[k]) / (times[k + 1] - times[k]);
  return values[k] + lambda * (values[k + 1] - values[k]);
}

void PiecewisePath::validate() const {
  if (times.size() < 2 || times.size() != values.size()) {
    throw ValidationError("PiecewisePath: need at least two knots and one value per knot");
  }
  const Eigen::Index d = values.front().size();
  if (d < 1) {
    throw ValidationError("PiecewisePath: dimension must be >= 1");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (values[k].size() != d || !values[k].allFinite() || !std::isfinite(times[k])) {
      throw ValidationError("PiecewisePath: inconsistent or non-finite values");
    }
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw ValidationError("PiecewisePath: times must be strictly increasing");
    }
  }
  if (!values.front().isZero(0.0)) {
    throw ValidationError("PiecewisePath: path must start at 0");
  }
}

CameronMartinPath make_cameron_martin(PiecewisePath h) {
  h.validate();
  double norm_sq = 0.0;
  for (std::size_t k = 0; k + 1 < h.times.size(); ++k) {
    norm_sq += (h.values[k + 1] - h.values[k]).squaredNorm() / (h.times[k + 1] - h.times[k]);
  }
  return CameronMartinPath{std::move(h), norm_sq};
}

GridRoughPath lift_piecewise_linear(const PiecewisePath& w, double alpha) {
  w.validate();
  const std::size_t n = w.num_segments();
  std::vector<Increment> cells;
  cells.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    cells.push_back(Increment::segment(w.values[k + 1] - w.values[k], w.times[k + 1] - w.times[k]));
  }
  return GridRoughPath(w.times, std::move(cells), std::vector<CellKind>(n, CellKind::linear), alpha,
                       /*geometric=*/true);
}

PiecewisePath dyadic_approx(const PiecewisePath& samples, int m) {
  samples.validate();
  if (m < 0 || m > kMaxBrownianLevel + 6) {
    throw ValidationError("dyadic_approx: level out of range");
  }
  if (samples.start() != 0.0) {
    throw ValidationError("dyadic_approx: sample path must start at t = 0");
  }
  const double T = samples.end();
  const double tol = 1e-12 * std::max(1.0, T);
  const std::size_t count = std::size_t{1} << m;
  PiecewisePath out;
  out.times.reserve(count + 1);
  out.values.reserve(count + 1);
  auto cursor = samples.times.begin();
  for (std::size_t j = 0; j <= count; ++j) {
    const double t = std::ldexp(T * static_cast<double>(j), -m);
    cursor = std::lower_bound(cursor, samples.times.end(), t - tol);
    if (cursor == samples.times.end() || std::abs(*cursor - t) > tol) {
      std::ostringstream os;
      os << "dyadic_approx: sample grid lacks the level-" << m << " knot t = " << t;
      throw ValidationError(os.str());
    }
    out.times.push_back(t);
    out.values.push_back(samples.values[static_cast<std::size_t>(cursor - samples.times.begin())]);
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ counter);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return (static_cast<double>(counter_bits(seed, counter) >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t pair = index & ~std::uint64_t{1};
  const double u1 = counter_uniform(seed, pair);
  const double u2 = counter_uniform(seed, pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
}

PiecewisePath sample_brownian(int d, double T, int M, std::uint64_t seed) {
  if (d < 1) {
    throw ValidationError("sample_brownian: d must be >= 1");
  }
  if (M < 0 || M > kMaxBrownianLevel) {
    throw ValidationError("sample_brownian: M must lie in [0, 24]");
  }
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw ValidationError("sample_brownian: T must be positive");
  }
  // Levy midpoint construction: the level-m knots do not depend on M.
  // node id 1 is W_T, node (2^l + k) with k odd is the level-l midpoint k 2^-l T
  const std::size_t count = std::size_t{1} << M;
  PiecewisePath w;
  w.times.resize(count + 1);
  w.values.assign(count + 1, Vector::Zero(d));
  for (std::size_t j = 0; j <= count; ++j) {
    w.times[j] = std::ldexp(T * static_cast<double>(j), -M);
  }
  const auto z = [&](std::uint64_t node, int i) {
    return counter_normal(seed, node * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(i));
  };
  const double root_t = std::sqrt(T);
  for (int i = 0; i < d; ++i) w.values[count][i] = root_t * z(1, i);
  for (int l = 1; l <= M; ++l) {
    const std::size_t stride = count >> l;
    const double sd = 0.5 * std::sqrt(std::ldexp(T, -(l - 1)));
    for (std::size_t k = 1; k < (std::size_t{1} << l); k += 2) {
      const std::size_t j = k * stride;
      const std::uint64_t node = (std::uint64_t{1} << l) + k;
      for (int i = 0; i < d; ++i) {
        w.values[j][i] = 0.5 * (w.values[j - stride][i] + w.values[j + stride][i]) + sd * z(node, i);
      }
    }
  }
  return w;
}

GridRoughPath brownian_rough_path(const PiecewisePath& w, int m, double alpha) {
  return lift_piecewise_linear(dyadic_approx(w, m), alpha);
}

GridRoughPath cameron_martin_lift(const CameronMartinPath& h, double alpha) {
  return lift_piecewise_linear(h.path, alpha);
}

PiecewisePath reverse_path(const PiecewisePath& w) {
  w.validate();
  const double T = w.end();
  const std::size_t n = w.times.size();
  PiecewisePath out;
  out.times.resize(n);
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.times[k] = T - w.times[n - 1 - k];
    out.values[k] = w.values[n - 1 - k] - w.values.back();
  }
  out.times.front() = 0.0;
  out.values.front().setZero();
  return out;
}

void write_path_csv(std::ostream& os, const PiecewisePath& w) {
  os << "t";
  for (Eigen::Index i = 0; i < w.dim(); ++i) os << ",w" << (i + 1);
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < w.times.size(); ++k) {
    os << w.times[k];
    for (Eigen::Index i = 0; i < w.dim(); ++i) os << ',' << w.values[k][i];
    os << '\n';
  }
}

PiecewisePath read_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ValidationError("path CSV: empty input");
  }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t") {
    throw ValidationError("path CSV: header must be t,w1,...,wd");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] != "w" + std::to_string(i)) {
      throw ValidationError("path CSV: header must be t,w1,...,wd");
    }
  }
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  PiecewisePath w;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw ValidationError("path CSV: bad number on row " + std::to_string(row));
      }
      fields.push_back(v);
    }
    if (fields.size() != header.size()) {
      throw ValidationError("path CSV: wrong column count on row " + std::to_string(row));
    }
    w.times.push_back(fields[0]);
    w.values.emplace_back(Eigen::Map<const Vector>(fields.data() + 1, d));
  }
  w.validate();
  return w;
}

PiecewisePath read_path_csv_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) {
    throw ValidationError("cannot open path file " + filename);
  }
  return read_path_csv(in);
}

}  // namespace roughflow
