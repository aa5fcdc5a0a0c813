#include "oracles.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/tensor_algebra.hpp"

#include <doctest.h>

#include <random>

using namespace roughflow;

namespace {

GridRoughPath l_path() {
  // e1 on [0, 1], then e2 on [1, 2]
  std::vector<Increment> cells{Increment::segment(Vector::Unit(2, 0), 1.0),
                               Increment::segment(Vector::Unit(2, 1), 1.0)};
  return GridRoughPath({0.0, 1.0, 2.0}, cells, {CellKind::linear, CellKind::linear}, 0.4, true);
}

}  // namespace

TEST_SUITE("tensor_algebra") {

TEST_CASE("segment increment is symmetric with shuffle residual zero") {
  Vector delta(3);
  delta << 1.0, -2.0, 0.5;
  const Increment inc = Increment::segment(delta, 0.3);
  CHECK(inc.dt == 0.3);
  CHECK(oracle::max_abs(inc.level2 - 0.5 * delta * delta.transpose()) == 0.0);
  CHECK(check_shuffle(inc) == 0.0);
}

TEST_CASE("L-shaped path has the area term in the off-diagonal") {
  const GridRoughPath w = l_path();
  const Increment inc = query_increment(w, 0.0, 2.0);
  Matrix expect(2, 2);
  expect << 0.5, 1.0, 0.0, 0.5;
  CHECK(oracle::max_abs(inc.level2 - expect) <= 1e-15);
  CHECK(inc.level1.isApprox(Vector::Ones(2)));
  CHECK(inc.dt == 2.0);
}

TEST_CASE("interior queries on linear cells scale the segment") {
  const GridRoughPath w = l_path();
  const Increment inc = w.increment(0.25, 0.75);
  CHECK(inc.level1[0] == doctest::Approx(0.5));
  CHECK(inc.level1[1] == 0.0);
  CHECK(inc.level2(0, 0) == doctest::Approx(0.125));
  const Increment across = w.increment(0.5, 1.5);
  // half of e1 then half of e2
  CHECK(across.level2(0, 1) == doctest::Approx(0.25));
  CHECK(across.level2(1, 0) == doctest::Approx(0.0));
  CHECK(check_shuffle(across) <= 1e-15);
}

TEST_CASE("chen product is associative and has inverses") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  auto rnd = [&] {
    Increment a = Increment::zero(3, 0.1);
    for (int i = 0; i < 3; ++i) a.level1[i] = n01(rng);
    for (int i = 0; i < 9; ++i) a.level2.data()[i] = n01(rng);
    return a;
  };
  const Increment a = rnd(), b = rnd(), c = rnd();
  const Increment left = chen_combine(chen_combine(a, b), c);
  const Increment right = chen_combine(a, chen_combine(b, c));
  CHECK(oracle::max_abs(left.level2 - right.level2) <= 1e-12);
  CHECK((left.level1 - right.level1).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(left.dt == doctest::Approx(0.3));
  const Increment id = chen_combine(a, chen_inverse(a));
  CHECK(id.level1.cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(oracle::max_abs(id.level2) <= 1e-14);
  CHECK(chen_residual(a, b, chen_combine(a, b)) == 0.0);
  Increment wrong = chen_combine(a, b);
  wrong.level2(0, 1) += 1.0;
  CHECK(chen_residual(a, b, wrong) > 1e-3);
}

TEST_CASE("knot increments agree with the polygon oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = oracle::random_path(rng, 1 + trial % 4, 5 + trial);
    const GridRoughPath x = lift_piecewise_linear(w);
    for (std::size_t i = 0; i < w.times.size(); ++i) {
      for (std::size_t j = i; j < w.times.size(); ++j) {
        const Increment inc = x.knot_increment(i, j);
        const Matrix expect = oracle::polygon_level2(w.values, i, j);
        CHECK(oracle::max_abs(inc.level2 - expect) <= 1e-12 * (1.0 + oracle::max_abs(expect)));
      }
    }
    CHECK(max_chen_residual(x) <= 1e-12);
    CHECK(max_shuffle_residual(x) <= 1e-12);
  }
}

TEST_CASE("validation errors") {
  CHECK_THROWS_AS(validate_alpha(1.0 / 3.0), ValidationError);
  CHECK_THROWS_AS(validate_alpha(0.5), ValidationError);
  CHECK_NOTHROW(validate_alpha(0.4));
  const Increment e1 = Increment::segment(Vector::Unit(2, 0), 1.0);
  CHECK_THROWS_AS(GridRoughPath({0.0, 1.0}, {e1, e1}, {CellKind::linear}, 0.4, true), ValidationError);
  CHECK_THROWS_AS(GridRoughPath({1.0, 0.0}, {e1}, {CellKind::linear}, 0.4, true), ValidationError);
  CHECK_THROWS_AS(GridRoughPath({0.0, 1.0}, {e1}, {CellKind::linear}, 0.7, true), ValidationError);
  const GridRoughPath w = l_path();
  CHECK_THROWS_AS(w.increment(-0.1, 1.0), ValidationError);
  CHECK_THROWS_AS(w.increment(1.0, 2.5), ValidationError);
  CHECK_THROWS_AS(w.increment(1.5, 0.5), ValidationError);
}

TEST_CASE("atomic cells refuse interior queries") {
  const Increment e1 = Increment::segment(Vector::Unit(1, 0), 1.0);
  const GridRoughPath w({0.0, 1.0, 2.0}, {e1, e1}, {CellKind::atomic, CellKind::linear}, 0.4, true);
  CHECK_NOTHROW(w.increment(0.0, 2.0));
  CHECK_NOTHROW(w.increment(1.0, 1.5));
  CHECK_THROWS_AS(w.increment(0.5, 2.0), ValidationError);
  CHECK_FALSE(w.all_linear());
}

TEST_CASE("locate and is_knot") {
  const GridRoughPath w = l_path();
  CHECK(w.locate(0.0) == 0);
  CHECK(w.locate(0.99) == 0);
  CHECK(w.locate(1.0) == 1);
  CHECK(w.locate(2.0) == 1);
  CHECK(w.is_knot(1.0));
  CHECK_FALSE(w.is_knot(1.5));
}

TEST_CASE("hoelder norms of a single segment") {
  Vector delta(2);
  delta << 3.0, 4.0;
  const GridRoughPath w({0.0, 1.0}, {Increment::segment(delta, 1.0)}, {CellKind::linear}, 0.4, true);
  const HolderReport h = holder_norms(w);
  CHECK(h.norm1 == doctest::Approx(5.0));
  CHECK(h.norm2 == doctest::Approx(12.5));  // |1/2 d d^T|_F = |d|^2 / 2
}

TEST_CASE("rp_distance is a metric on examples") {
  std::mt19937_64 rng(5);
  const auto a = lift_piecewise_linear(oracle::random_path(rng, 2, 8));
  const auto b = lift_piecewise_linear(oracle::random_path(rng, 2, 5));
  CHECK(rp_distance(a, a) == 0.0);
  CHECK(rp_distance(a, b) > 0.0);
  CHECK(rp_distance(a, b) == doctest::Approx(rp_distance(b, a)).epsilon(1e-12));
  const auto e = lift_piecewise_linear(oracle::random_path(rng, 3, 4));
  CHECK_THROWS_AS(rp_distance(a, e), ValidationError);
}

TEST_CASE("rp_distance between a path and its dilation") {
  std::mt19937_64 rng(8);
  const auto a = lift_piecewise_linear(oracle::random_path(rng, 2, 6));
  const HolderReport h = holder_norms(a);
  const auto z = dilate(a, 0.0);
  // distance to the zero path is max(norm1, norm2)
  CHECK(rp_distance(a, z) == doctest::Approx(std::max(h.norm1, h.norm2)).epsilon(1e-12));
}

TEST_CASE("time reversal is an involution") {
  std::mt19937_64 rng(9);
  const auto a = lift_piecewise_linear(oracle::random_path(rng, 3, 10, 2.0));
  const auto rr = time_reverse(time_reverse(a, 2.0), 2.0);
  REQUIRE(rr.num_cells() == a.num_cells());
  for (std::size_t k = 0; k < a.num_cells(); ++k) {
    CHECK(oracle::max_abs(rr.cells()[k].level2 - a.cells()[k].level2) <= 1e-14);
    CHECK(std::abs(rr.times()[k] - a.times()[k]) <= 1e-14);
  }
  const Increment full = a.increment(0.0, 2.0);
  const Increment rev = time_reverse(a, 2.0).increment(0.0, 2.0);
  // reversal of the whole path is the group inverse
  const Increment id = chen_combine(full, rev);
  CHECK(oracle::max_abs(id.level2) <= 1e-12);
}

TEST_CASE("restrict, resample and shift keep increments") {
  std::mt19937_64 rng(10);
  const auto a = lift_piecewise_linear(oracle::random_path(rng, 2, 6));
  const auto r = restrict_to(a, 0.2, 0.7);
  CHECK(r.start() == 0.2);
  CHECK(r.end() == 0.7);
  CHECK(oracle::max_abs(r.increment(0.2, 0.7).level2 - a.increment(0.2, 0.7).level2) <= 1e-13);
  const auto g = resample(a, {0.0, 0.1, 0.45, 1.0});
  CHECK(g.num_cells() == 3);
  CHECK(oracle::max_abs(g.increment(0.1, 1.0).level2 - a.increment(0.1, 1.0).level2) <= 1e-13);
  const auto s = time_shift(a, 3.0);
  CHECK(s.start() == 3.0);
  CHECK(oracle::max_abs(s.increment(3.1, 3.9).level2 - a.increment(0.1, 0.9).level2) <= 1e-13);
  CHECK_THROWS_AS(restrict_to(a, 0.7, 0.2), ValidationError);
}

TEST_CASE("dilation scales the two levels by eps and eps^2") {
  std::mt19937_64 rng(12);
  const auto a = lift_piecewise_linear(oracle::random_path(rng, 2, 4));
  const auto b = dilate(a, 0.5);
  const Increment ia = a.increment(0.0, 1.0), ib = b.increment(0.0, 1.0);
  CHECK((ib.level1 - 0.5 * ia.level1).norm() <= 1e-15);
  CHECK(oracle::max_abs(ib.level2 - 0.25 * ia.level2) <= 1e-15);
}

}
