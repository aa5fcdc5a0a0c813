#include "roughflow/errors.hpp"
#include "roughflow/transversal.hpp"

#include <doctest.h>

#include <cmath>

using namespace roughflow;

namespace {

void check_metric(const Transversal& Z) {
  for (std::uint64_t k = 0; k < 40; ++k) {
    const ZPoint a = Z.sample(3, 3 * k), b = Z.sample(3, 3 * k + 1), c = Z.sample(3, 3 * k + 2);
    CHECK(Z.contains(a));
    CHECK(Z.distance(a, a) == 0.0);
    CHECK(Z.distance(a, b) == Z.distance(b, a));
    CHECK(Z.distance(a, c) <= Z.distance(a, b) + Z.distance(b, c) + 1e-15);
    if (!(a == b)) CHECK(Z.distance(a, b) > 0.0);
    CHECK(Z.coordinate(a) >= 0.0);
    CHECK(Z.coordinate(a) <= 1.0);
  }
}

void check_dynamics(const Transversal& Z) {
  for (std::uint64_t k = 0; k < 40; ++k) {
    const ZPoint z = Z.sample(8, k);
    CHECK(Z.backward(Z.forward(z)) == z);
    CHECK(Z.forward(Z.backward(z)) == z);
    ZPoint w = z;
    for (int n = 0; n < 5; ++n) w = Z.forward(w);
    CHECK(Z.power(z, 5) == w);
    CHECK(Z.power(w, -5) == z);
    CHECK(Z.power(z, 0) == z);
    if (Z.kind() != "circle") CHECK(Z.parse(Z.repr(z)) == z);
  }
}

}  // namespace

TEST_SUITE("transversal") {

TEST_CASE("circle") {
  const Circle Z;
  check_metric(Z);
  check_dynamics(Z);
  CHECK(Z.rho() == doctest::Approx(0.6180339887498949));
  const ZPoint q = Circle::from_angle(0.25);
  CHECK(Z.coordinate(q) == 0.25);
  CHECK(Z.distance(Circle::from_angle(0.05), Circle::from_angle(0.95)) == doctest::Approx(0.1));
  CHECK(Z.distance(Circle::from_angle(0.0), Circle::from_angle(0.5)) == 0.5);
  CHECK(Z.parse("0.25") == q);
  CHECK(Z.parse("#12345").bits == 12345U);
  CHECK(Z.repr(q) == "0.25");
  CHECK_THROWS_AS(Z.parse("abc"), ValidationError);
  CHECK_THROWS_AS(Z.parse("#"), ValidationError);
  CHECK_THROWS_AS(Circle(1.5), ValidationError);
  // the rotation moves every point by rho
  CHECK(Z.distance(q, Z.forward(q)) == doctest::Approx(1.0 - Z.rho()));
}

TEST_CASE("cantor set") {
  const CantorSet Z(8);
  check_metric(Z);
  check_dynamics(Z);
  CHECK(Z.depth() == 8);
  const ZPoint top{0xFF};
  CHECK(Z.forward(top) == ZPoint{0});  // odometer carry wraps
  CHECK(Z.backward(ZPoint{0}) == top);
  CHECK(Z.distance(ZPoint{0}, ZPoint{1}) == 1.0);
  CHECK(Z.distance(ZPoint{0}, ZPoint{4}) == 0.25);
  CHECK_FALSE(Z.contains(ZPoint{0x100}));
  CHECK(Z.repr(ZPoint{3}) == "11000000");
  CHECK(Z.coordinate(ZPoint{1}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(Z.parse("101"), ValidationError);
  CHECK_THROWS_AS(Z.parse("1100000x"), ValidationError);
  CHECK_THROWS_AS(CantorSet(0), ValidationError);
  CHECK_THROWS_AS(CantorSet(65), ValidationError);
  // ultrametric
  for (std::uint64_t k = 0; k < 30; ++k) {
    const ZPoint a = Z.sample(1, 3 * k), b = Z.sample(1, 3 * k + 1), c = Z.sample(1, 3 * k + 2);
    CHECK(Z.distance(a, c) <= std::max(Z.distance(a, b), Z.distance(b, c)));
  }
}

TEST_CASE("finite set") {
  const FiniteSet cyc(5);
  check_metric(cyc);
  check_dynamics(cyc);
  CHECK(cyc.forward(ZPoint{4}) == ZPoint{0});
  CHECK(cyc.size() == 5);
  const FiniteSet perm(3, {2, 0, 1});
  check_dynamics(perm);
  CHECK(perm.forward(ZPoint{0}) == ZPoint{2});
  CHECK(perm.backward(ZPoint{2}) == ZPoint{0});
  CHECK_THROWS_AS(FiniteSet(3, {0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(FiniteSet(3, {0, 1}), ValidationError);
  CHECK_THROWS_AS(FiniteSet(0), ValidationError);
  CHECK_THROWS_AS(cyc.forward(ZPoint{7}), ValidationError);
  CHECK_THROWS_AS(cyc.parse("5"), ValidationError);
  CHECK(cyc.parse("3") == ZPoint{3});
}

TEST_CASE("factory") {
  CHECK(make_transversal("circle")->kind() == "circle");
  CHECK(make_transversal("cantor")->kind() == "cantor");
  CHECK(make_transversal("finite")->kind() == "finite");
  CHECK_THROWS_AS(make_transversal("torus"), ValidationError);
}

}
