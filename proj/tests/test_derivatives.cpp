#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mdlab/derivatives.hpp"
#include "mdlab/error.hpp"
#include "mdlab/scenarios.hpp"
#include "mdlab/sobolev.hpp"

using namespace mdlab;

namespace {

MapOracle diag12() {
  MapOracle f;
  f.name = "diag(1,2)";
  f.domain = Box{{-1.0, -1.0}, {1.0, 1.0}};
  f.target = MetricSpace::euclidean(2);
  f.eval = [](std::span<const double> x) { return Point{x[0], 2.0 * x[1]}; };
  f.lipschitz_bound = 2.0;
  return f;
}

MapOracle abs_map() {
  MapOracle f;
  f.name = "abs";
  f.domain = Box{{-1.0}, {1.0}};
  f.target = MetricSpace::euclidean(1);
  f.eval = [](std::span<const double> x) { return Point{std::abs(x[0])}; };
  return f;
}

}  // namespace

TEST_CASE("box clearance") {
  Box b{{-1.0, 0.0}, {1.0, 1.0}};
  CHECK(b.clearance(std::vector<double>{0.0, 0.5}) == doctest::Approx(0.5));
  CHECK(b.clearance(std::vector<double>{0.9, 0.5}) == doctest::Approx(0.1));
  CHECK(b.clearance(std::vector<double>{1.5, 0.5}) <= 0.0);
}

TEST_CASE("geometric schedule halves") {
  const auto s = StepSchedule::geometric(0.5, 3);
  REQUIRE(s.steps.size() == 4);
  CHECK(s.steps[3] == 0.0625);
  CHECK(s.max_step() == 0.5);
}

TEST_CASE("metric derivative of |t| at 0 is 1 in both directions") {
  const auto f = abs_map();
  const std::vector<double> x{0.0};
  const auto s = default_schedule(f, x);
  for (double dir : {1.0, -1.0}) {
    const std::vector<double> nu{dir};
    const auto d = metric_directional_derivative(f, x, nu, s, 1e-6);
    CHECK(d.value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.converged);
  }
}

TEST_CASE("metric derivative of diag(1,2) along e2 is 2") {
  const auto f = diag12();
  const std::vector<double> x{0.3, -0.2}, nu{0.0, 1.0};
  const auto d = metric_directional_derivative(f, x, nu, default_schedule(f, x), 1e-6);
  CHECK(std::abs(d.value - 2.0) <= 1e-12);
  CHECK(d.converged);
}

TEST_CASE("L1 curve has unit speed across cell boundaries") {
  const auto& s = find_scenario("S3-l1-curve");
  for (double t : {0.25, 0.5, 0.5 + 0.5 / 1024.0}) {
    const std::vector<double> x{t}, nu{1.0};
    const auto sched = StepSchedule::geometric(0.05, 3);
    const auto d = metric_directional_derivative(s.map, x, nu, sched, 1e-3);
    CAPTURE(t);
    CHECK(std::abs(d.value - 1.0) <= 1e-12);
  }
}

TEST_CASE("clearance is enforced") {
  const auto f = abs_map();
  const std::vector<double> x{0.95}, nu{1.0};
  CHECK_THROWS_AS(metric_directional_derivative(f, x, nu, StepSchedule::geometric(0.1, 2), 1e-6),
                  ClearanceError);
  CHECK_THROWS_AS(require_clearance(f.domain, x, nu, 0.1), ClearanceError);
  CHECK_NOTHROW(require_clearance(f.domain, x, nu, 0.04));
}

TEST_CASE("norm gauge pairing of a linear map is (Ax . A nu) / |Ax|") {
  const auto f = diag12();
  std::vector<Point> anchors = {{0.0, 0.0}};
  const auto g = build_kuratowski_gauge(f.target, anchors);
  const std::vector<double> x{0.3, -0.2};
  const std::vector<double> nu{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  const auto w = truncated_weak_weak_star_derivative(f, g, x, nu, default_schedule(f, x), 1e-6);
  REQUIRE(w.size() == 1);
  // Ax = (0.3, -0.4), A nu = (1, 2)/sqrt2, |Ax| = 0.5. Central differences carry an O(h^2) error.
  const double err = std::abs(w.pairings[0] + 1.0 / std::sqrt(2.0));
  CAPTURE(err);
  CHECK(err <= 1e-6);
  CHECK(w.diagnostics_ok());
}

TEST_CASE("truncated norm is the largest pairing in absolute value") {
  TruncatedFunctional w;
  w.pairings = {0.3, -0.9, 0.5};
  w.converged = {1, 1, 1};
  CHECK(truncated_norm(w) == 0.9);
  CHECK(truncated_norm(w, 1) == 0.3);
}

TEST_CASE("combine is linear in the direction") {
  TruncatedFunctional a, b;
  a.pairings = {1.0, 0.0};
  b.pairings = {0.0, 2.0};
  a.converged = b.converged = {1, 1};
  std::vector<TruncatedFunctional> parts = {a, b};
  const std::vector<double> nu{3.0, -1.0};
  const auto c = combine(parts, nu);
  CHECK(c.pairings[0] == 3.0);
  CHECK(c.pairings[1] == -2.0);
}

TEST_CASE("linear quotient probe separates |t| at 0 from a smooth point") {
  const auto f = abs_map();
  const std::vector<double> nu{1.0};
  const std::vector<double> zero{0.0}, off{0.5};
  const auto sched = StepSchedule::geometric(0.05, 6);
  const auto kink = linear_difference_quotient(f, zero, nu, sched, 1e-6);
  CHECK_FALSE(kink.two_sided_converged);
  CHECK(kink.two_sided_gaps.back() == doctest::Approx(2.0));
  const auto smooth = linear_difference_quotient(f, off, nu, sched, 1e-6);
  CHECK(smooth.converged());
}

TEST_CASE("composition with pi_R for large R and with a scaling") {
  const auto f = diag12();
  const auto Y = f.target;
  const std::vector<double> x{0.3, -0.2}, nu{0.6, 0.8};
  const auto g = ring_gauge(f, x, 32);
  const auto sched = default_schedule(f, x);

  const auto big = composition_check(f, radial_truncation_map(Y, 100.0), g, x, nu, sched, 1e-6);
  CHECK(big.converged);
  CHECK(big.max_identity_defect <= 1e-9);
  CHECK(big.norm_inequality_defect <= 1e-6);

  const auto half = composition_check(f, scaling_map(Y, 0.5), g, x, nu, sched, 1e-6);
  const auto id = composition_check(f, identity_map(Y), g, x, nu, sched, 1e-6);
  CHECK(half.max_identity_defect <= 1e-9);
  CHECK(half.metric_derivative == doctest::Approx(id.metric_derivative));
  CHECK(half.composed_norm <= 0.5 * id.metric_derivative + 1e-6);
}

TEST_CASE("composition rejects a map that moves the base point") {
  const auto f = diag12();
  LipschitzMap shift{"shift", f.target, f.target,
                     [](const Point& v) { return Point{v.coords[0] + 1.0, v.coords[1]}; }, 1.0};
  const std::vector<double> x{0.3, -0.2}, nu{1.0, 0.0};
  const auto g = ring_gauge(f, x, 8);
  CHECK_THROWS_AS(composition_check(f, shift, g, x, nu, default_schedule(f, x), 1e-6), InputError);
}

TEST_CASE("locality: equal maps on E give equal norms, unequal maps raise") {
  const auto f1 = diag12();
  auto f2 = f1;
  f2.eval = [](std::span<const double> x) {
    const double a = std::clamp(x[0], -0.5, 0.5), b = std::clamp(x[1], -0.5, 0.5);
    return Point{a, 2.0 * b};
  };
  const Box E{{-0.5, -0.5}, {0.5, 0.5}};
  const std::vector<double> c{0.0, 0.0};
  const auto g = ring_gauge(f1, c, 16);
  std::vector<Point> pts = {{0.0, 0.0}, {0.1, -0.1}, {0.49, 0.0}};
  const auto sched = StepSchedule::geometric(0.05, 4);
  const auto r = locality_check(f1, f2, E, g, pts, sched, 1e-6);
  CHECK(r.evaluated.size() == 2);
  REQUIRE(r.excluded.size() == 1);
  CHECK(r.excluded[0] == 2);
  for (double m : r.max_norm_mismatch) CHECK(m == 0.0);

  auto f3 = f1;
  f3.eval = [](std::span<const double> x) { return Point{x[0] + 1e-3, 2.0 * x[1]}; };
  CHECK_THROWS_AS(locality_check(f1, f3, E, g, pts, sched, 1e-6), PremiseError);
}
