#include "oracles.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/foliated.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace roughflow;

namespace {

std::shared_ptr<const Transversal> circle() { return make_transversal("circle"); }

// w_t = 1.7 sin(2 pi t) + 0.9 t sampled at 512 knots: several seam crossings both ways
PiecewisePath smooth_path() {
  PiecewisePath w;
  for (int k = 0; k <= 512; ++k) {
    const double t = k / 512.0;
    w.times.push_back(t);
    w.values.push_back(Vector::Constant(1, 1.7 * std::sin(2 * M_PI * t) + 0.9 * t));
  }
  return w;
}

LeafPoint point(double y, ZPoint z) { return LeafPoint{Vector::Constant(1, y), z, 0}; }

}  // namespace

TEST_SUITE("foliated") {

TEST_CASE("deck transformations and normalization") {
  const SuspensionSpace S(circle());
  const ZPoint z = Circle::from_angle(0.3);
  const LeafPoint m = point(2.25, z);
  const LeafPoint n = S.normalize(m);
  CHECK(n.y[0] == 0.25);
  CHECK(n.z == S.transversal().power(z, 2));
  CHECK(n.winding == 2);
  const LeafPoint back = S.deck(n, -2);
  CHECK(back.y[0] == 2.25);
  CHECK(back.z == z);
  CHECK(back.winding == 0);
  CHECK(S.normalize(point(-0.25, z)).y[0] == 0.75);
  CHECK(S.normalize(point(-0.25, z)).winding == -1);
  CHECK_THROWS_AS(S.validate(LeafPoint{Vector::Zero(2), z, 0}), ValidationError);
  CHECK_THROWS_AS(S.validate(point(std::nan(""), z)), ValidationError);
  const SuspensionSpace C(make_transversal("cantor"));
  CHECK_THROWS_AS(C.validate(point(0.5, ZPoint{~std::uint64_t{0}})), ValidationError);
}

TEST_CASE("suspension distances") {
  const SuspensionSpace S(circle());
  const ZPoint z = Circle::from_angle(0.3);
  const ZPoint fz = S.transversal().forward(z);
  // (0.95, z) and (0.05, F z) are the same leaf, 0.1 apart across the seam
  CHECK(S.leaf_distance(point(0.95, z), point(0.05, fz)) == doctest::Approx(0.1));
  CHECK(S.distance(point(0.95, z), point(0.05, fz)) == doctest::Approx(0.1));
  CHECK(std::isinf(S.leaf_distance(point(0.5, z), point(0.5, Circle::from_angle(0.31)))));
  CHECK(S.distance(point(0.5, z), point(0.5, Circle::from_angle(0.31))) == doctest::Approx(0.01));
  const LeafPoint a = S.sample(1, 0), b = S.sample(1, 1), c = S.sample(1, 2);
  CHECK(S.distance(a, a) == 0.0);
  CHECK(S.distance(a, b) == doctest::Approx(S.distance(b, a)));
  CHECK(S.distance(a, c) <= S.distance(a, b) + S.distance(b, c) + 1e-12);
}

TEST_CASE("freezing a field") {
  const auto Z = circle();
  SuspendedFieldFamily::Component zero{[](const Vector&, double) { return Vector(Vector::Zero(1)); },
                                       [](const Vector&, double) { return Matrix(Matrix::Zero(1, 1)); }, {}, {}};
  SuspendedFieldFamily::Component v1{
      [](const Vector&, double c) { return Vector::Constant(1, 1.0 + 0.5 * std::cos(2 * M_PI * c)).eval(); },
      [](const Vector&, double) { return Matrix(Matrix::Zero(1, 1)); }, {}, {}};
  // constant in y but jumps across seams, so no smoothness self-check
  const SuspendedFieldFamily V("cos", Z, 1, {zero, v1}, false);
  const FrozenField F = freeze(V, ZPoint{0});
  for (double y : {0.0, 0.3, 0.99}) CHECK(F.eval(1, Vector::Constant(1, y))[0] == 1.5);
  CHECK(F.state_dim() == 1);
  CHECK(F.z() == ZPoint{0});
}

TEST_CASE("freeze is continuous in z and independent of z for z-free fields") {
  const auto Z = circle();
  const auto bump = make_leafwise_field("bump", Z, 1);
  const auto unit = make_leafwise_field("unit", Z, 1);
  const ZPoint z = Circle::from_angle(0.4);
  double prev = 1e9;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const ZPoint z2 = Circle::from_angle(0.4 + eps);
    double sup = 0.0, sup_unit = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vector y = Vector::Constant(1, -1.0 + 3.0 * k / 50.0);
      sup = std::max(sup, (bump->eval(1, y, z2) - bump->eval(1, y, z)).norm());
      sup_unit = std::max(sup_unit, (unit->eval(1, y, z2) - unit->eval(1, y, z)).norm());
    }
    CHECK(sup < prev);
    CHECK(sup_unit == 0.0);
    prev = sup;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("named leafwise fields satisfy the periodicity contract") {
  for (const char* kind : {"circle", "cantor", "finite"}) {
    const auto Z = make_transversal(kind);
    for (const char* name : {"zero", "unit", "drift", "bump", "sine", "bump_drift"}) {
      CAPTURE(kind);
      CAPTURE(name);
      const auto V = make_leafwise_field(name, Z, 1);
      CHECK(periodicity_mismatch(*V, SuspensionSpace(Z, 1)) <= 1e-12);
    }
    const auto sh = make_leafwise_field("sheared", Z, 2);
    CHECK(sh->driver_dim() == 2);
    CHECK(periodicity_mismatch(*sh, SuspensionSpace(Z, 2)) <= 1e-12);
  }
  CHECK_THROWS_AS(make_leafwise_field("nope", circle(), 1), ValidationError);
  CHECK_THROWS_AS(make_leafwise_field("sheared", circle(), 1), ValidationError);
  CHECK(leafwise_suite_names().size() == 3);
}

TEST_CASE("broken periodicity is caught") {
  const auto Z = circle();
  SuspendedFieldFamily::Component zero{[](const Vector&, double) { return Vector(Vector::Zero(1)); },
                                       [](const Vector&, double) { return Matrix(Matrix::Zero(1, 1)); }, {}, {}};
  // depends on c but not smoothly through the seams: the self-check refuses it
  SuspendedFieldFamily::Component v1{
      [](const Vector& y, double c) { return Vector::Constant(1, 1.0 + y[0] * c).eval(); },
      [](const Vector&, double c) { return Matrix::Constant(1, 1, c).eval(); }, {}, {}};
  CHECK_THROWS_AS(SuspendedFieldFamily("seam", Z, 1, {zero, v1}), ValidationError);
}

TEST_CASE("translation flow oracle") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("unit", Z, 1);
  const PiecewisePath w = smooth_path();
  const auto W = lift_piecewise_linear(w);
  const double y0 = 0.3;
  const ZPoint z0 = Circle::from_angle(0.1);
  const FoliatedTrajectory tr = solve_rde_foliated(S, point(y0, z0), W, *V, SolveConfig{});
  CHECK(tr.transitions.size() >= 4);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double lifted = y0 + w.at(tr.times[k])[0];
    const double n = std::floor(lifted);
    if (std::abs(lifted - std::round(lifted)) < 1e-9) continue;
    ++checked;
    CHECK(std::abs(tr.points[k].y[0] - (lifted - n)) <= 1e-9);
    CHECK(tr.points[k].winding == static_cast<std::int64_t>(n));
    CHECK(tr.points[k].z == Z->power(z0, static_cast<std::int64_t>(n)));
  }
  CHECK(checked > tr.size() / 2);
  const LeafCheckReport rep = leaf_check(S, tr);
  CHECK(rep.ok);
  REQUIRE(rep.winding_history.size() == tr.transitions.size());
  for (const auto& ev : rep.winding_history) {
    const double lifted = y0 + w.at(ev.time)[0];
    CHECK(std::abs(lifted - std::round(lifted)) <= 1e-9);
  }
  CHECK(rep.winding_history.back().winding == tr.final_point().winding);
}

TEST_CASE("unit field jacobian is one") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("unit", Z, 1);
  const auto W = lift_piecewise_linear(smooth_path());
  const auto tr = solve_foliated_with_jacobians(S, point(0.3, ZPoint{0}), W, *V, SolveConfig{}, 1);
  REQUIRE(tr.j1.size() == tr.size());
  for (const auto& J : tr.j1) CHECK(J(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sine field jacobian matches finite differences") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("sine", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 8, 5), 8);
  SolveConfig cfg;
  cfg.refine = false;
  cfg.base_subdiv = 32;
  const ZPoint z = Circle::from_angle(0.7);
  const double y0 = 0.4;
  const auto tr = solve_foliated_with_jacobians(S, point(y0, z), W, *V, cfg, 2);
  const double h = 1e-6;
  const auto lift = [](const LeafPoint& m) { return m.y[0] + static_cast<double>(m.winding); };
  const double fd = (lift(solve_rde_foliated(S, point(y0 + h, z), W, *V, cfg).final_point()) -
                     lift(solve_rde_foliated(S, point(y0 - h, z), W, *V, cfg).final_point())) / (2 * h);
  const double J = tr.j1.back()(0, 0);
  CHECK(std::abs(J - fd) <= 1e-4 * std::abs(J));
  const auto ref = solve_foliated_with_jacobians(S, point(y0, z), W, *V, SolveConfig{}, 1);
  CHECK(std::abs(ref.j1.back()(0, 0) * ref.jinv.back()(0, 0) - 1.0) <= 1e-8);
}

TEST_CASE("zero field gives a constant trajectory with an empty history") {
  const auto Z = make_transversal("cantor");
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("zero", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 6, 2), 6);
  const ZPoint z = Z->sample(1, 1);
  const FoliatedTrajectory tr = solve_rde_foliated(S, point(0.6, z), W, *V, SolveConfig{});
  for (const auto& m : tr.points) {
    CHECK(m.y[0] == 0.6);
    CHECK(m.z == z);
  }
  const LeafCheckReport rep = leaf_check(S, tr);
  CHECK(rep.ok);
  CHECK(rep.winding_history.empty());
}

TEST_CASE("drift crosses the seam once at time (1 - y0) / c") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("drift", Z, 1);
  PiecewisePath zero;
  zero.times = {0.0, 0.5, 1.0};
  zero.values.assign(3, Vector::Zero(1));
  const auto W = lift_piecewise_linear(zero);
  const ZPoint z0 = Circle::from_angle(0.2);
  const FoliatedTrajectory tr = solve_rde_foliated(S, point(0.3, z0), W, *V, SolveConfig{});
  REQUIRE(tr.transitions.size() == 1);
  CHECK(tr.transitions[0].direction == 1);
  CHECK(tr.transitions[0].time == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(tr.final_point().z == Z->forward(z0));
  CHECK(tr.final_point().y[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(tr.final_point().winding == 1);
}

TEST_CASE("leaf check catches a corrupted sample") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("bump", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 8, 3), 8);
  FoliatedTrajectory tr = solve_rde_foliated(S, point(0.5, ZPoint{0}), W, *V, SolveConfig{});
  REQUIRE(leaf_check(S, tr).ok);
  const std::size_t bad = tr.size() / 3;
  tr.points[bad].z.bits += 1;
  const LeafCheckReport rep = leaf_check(S, tr);
  CHECK_FALSE(rep.ok);
  CHECK(rep.first_bad_index == bad);
  CHECK_FALSE(rep.message.empty());
  // a jump by F^2 is not a legal transition either
  FoliatedTrajectory tr2 = solve_rde_foliated(S, point(0.5, ZPoint{0}), W, *V, SolveConfig{});
  for (std::size_t k = bad; k < tr2.size(); ++k) tr2.points[k].z = Z->power(tr2.points[k].z, 2);
  CHECK_FALSE(leaf_check(S, tr2).ok);
}

TEST_CASE("quotient well-definedness") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("bump_drift", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 8, 13), 8);
  const ZPoint z0 = Circle::from_angle(0.35);
  const FoliatedTrajectory a = solve_rde_foliated(S, point(0.4, z0), W, *V, SolveConfig{});
  const FoliatedTrajectory b = solve_rde_foliated(S, point(1.4, Z->backward(z0)), W, *V, SolveConfig{});
  CHECK(a.final_point().z == b.final_point().z);
  CHECK(b.final_point().winding == a.final_point().winding + 1);
  CHECK(S.leaf_distance(a.final_point(), b.final_point()) <= 1e-12);
  // the same statement in one frozen chart, without normalizing the start
  const SolveConfig cfg;
  const Vector ya = solve_rde(Vector::Constant(1, 0.4), W, freeze(*V, z0), cfg).final_state();
  const Vector yb = solve_rde(Vector::Constant(1, 1.4), W, freeze(*V, Z->backward(z0)), cfg).final_state();
  CHECK(std::abs(yb[0] - 1.0 - ya[0]) <= 1e-6);
}

TEST_CASE("flow grid round trips") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 9, 42), 9);
  std::vector<LeafPoint> pts;
  for (std::uint64_t k = 0; k < 16; ++k) pts.push_back(S.sample(42, k));
  for (const auto& name : leafwise_suite_names()) {
    CAPTURE(name);
    const auto V = make_leafwise_field(name, Z, 1);
    const FlowGridReport rep = flow_grid(S, pts, W, *V, SolveConfig{}, {0.0, 0.5, 1.0});
    CHECK(rep.samples.size() == 48);
    CHECK(rep.max_round_trip <= 1e-6);
    CHECK(rep.injective);
    for (const auto& s : rep.samples) {
      CHECK(s.back.z == s.source.z);
      if (s.time == 0.0) CHECK(s.round_trip == 0.0);
    }
  }
}

TEST_CASE("translation flow moves the grid rigidly") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("unit", Z, 1);
  const auto W = lift_piecewise_linear(smooth_path());
  const ZPoint z = Circle::from_angle(0.9);
  std::vector<LeafPoint> pts;
  for (int k = 0; k < 8; ++k) pts.push_back(point(0.05 + 0.04 * k, z));
  const FlowGridReport rep = flow_grid(S, pts, W, *V, SolveConfig{}, {1.0});
  for (int k = 1; k < 8; ++k) {
    const auto& a = rep.samples[0].image;
    const auto& b = rep.samples[static_cast<std::size_t>(k)].image;
    CHECK(S.leaf_distance(a, b) == doctest::Approx(0.04 * k).epsilon(1e-9));
  }
}

TEST_CASE("inverse flow on the suspension") {
  const auto Z = make_transversal("finite");
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("sine", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 8, 21), 8);
  const LeafPoint m = point(0.45, ZPoint{2});
  const LeafPoint image = solve_rde_foliated(S, m, W, *V, SolveConfig{}).final_point();
  const LeafPoint back = inverse_flow_foliated(S, image, W, *V, SolveConfig{}, 1.0);
  CHECK(back.z == m.z);
  CHECK(S.leaf_distance(back, m) <= 1e-6);
}

TEST_CASE("flow jacobians on a grid") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("bump", Z, 1);
  const auto W = brownian_rough_path(sample_brownian(1, 1.0, 7, 1), 7);
  std::vector<LeafPoint> pts{S.sample(1, 0), S.sample(1, 1)};
  const auto js = flow_jacobian_grid(S, pts, W, *V, SolveConfig{}, 1);
  REQUIRE(js.size() == 2);
  for (const auto& j : js) {
    CHECK(j.det > 0.0);
    CHECK(std::abs(j.j1(0, 0) * j.jinv(0, 0) - 1.0) <= 1e-8);
  }
}

TEST_CASE("solver errors") {
  const auto Z = circle();
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("unit", Z, 1);
  const auto W = lift_piecewise_linear(smooth_path());
  CHECK_THROWS_AS(solve_rde_foliated(S, point(0.3, ZPoint{0}), W, *V, SolveConfig{}, std::nullopt, std::nullopt, 1),
                  NumericalError);
  // a jump of 2.5 within one atomic cell must cross two seams in a single step
  std::vector<Increment> cells{Increment::segment(Vector::Constant(1, 2.5), 1.0)};
  const GridRoughPath jump({0.0, 1.0}, cells, {CellKind::atomic}, 0.4, true);
  CHECK_THROWS_AS(solve_rde_foliated(S, point(0.3, ZPoint{0}), jump, *V, SolveConfig{}), NumericalError);
  CHECK_THROWS_AS(solve_rde_foliated(SuspensionSpace(Z, 2), LeafPoint{Vector::Zero(2), ZPoint{0}, 0}, W, *V,
                                     SolveConfig{}),
                  ValidationError);
}

TEST_CASE("foliated csv") {
  const auto Z = make_transversal("cantor");
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("drift", Z, 1);
  PiecewisePath zero;
  zero.times = {0.0, 1.0};
  zero.values.assign(2, Vector::Zero(1));
  const auto tr = solve_rde_foliated(S, point(0.5, ZPoint{0}), lift_piecewise_linear(zero), *V, SolveConfig{});
  std::ostringstream os;
  write_foliated_csv(os, S, tr);
  const std::string s = os.str();
  CHECK(s.rfind("t,y1,z_repr,winding\n", 0) == 0);
  CHECK(s.find(",100000000000000000000000,1\n") != std::string::npos);
}

}
