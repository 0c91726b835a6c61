#include <cmath>
#include <random>

#include "doctest.h"
#include "mdlab/error.hpp"
#include "mdlab/gauge.hpp"

using namespace mdlab;

TEST_CASE("gauge functional subtracts the anchor's distance to the base point") {
  auto R2 = MetricSpace::euclidean(2);
  GaugeFunctional phi(R2, Point{0.0, 0.0});
  CHECK(phi(Point{3.0, 4.0}) == doctest::Approx(5.0));
  GaugeFunctional psi(R2, Point{1.0, 0.0});
  CHECK(psi(Point{1.0, 0.0}) == doctest::Approx(-1.0));
  CHECK(psi(R2->base_point()) == 0.0);
}

TEST_CASE("gauge functional on discretized L1") {
  auto L = MetricSpace::discretized_lebesgue(4, Exponent::finite(1.0), 1.0);
  GaugeFunctional phi(L, Point{1.0, 1.0, 0.0, 0.0});
  CHECK(phi(Point{1.0, 1.0, 0.0, 0.0}) == doctest::Approx(-0.5));
  CHECK(phi(Point{0.0, 0.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("gauge distance vanishes between coincident points and respects K") {
  auto R2 = MetricSpace::euclidean(2);
  std::vector<Point> anchors = {{0.5, 0.5}, {-1.0, 0.0}, {0.0, 2.0}};
  const auto g = build_kuratowski_gauge(R2, anchors);
  CHECK(g.size() == 3);
  CHECK(gauge_distance(g, Point{0.5, 0.5}, Point{0.5, 0.5}, 1) == 0.0);
  CHECK_THROWS_AS(gauge_distance(g, Point{0.0, 0.0}, Point{1.0, 0.0}, 0), InputError);
  CHECK_THROWS_AS(gauge_distance(g, Point{0.0, 0.0}, Point{1.0, 0.0}, 4), InputError);
  // An anchor at x recovers d(x, y) exactly.
  CHECK(gauge_distance(g, Point{0.5, 0.5}, Point{3.5, 4.5}, 1) == doctest::Approx(5.0));
}

TEST_CASE("empty sample is rejected") {
  std::vector<Point> none;
  CHECK_THROWS_AS(build_kuratowski_gauge(MetricSpace::euclidean(2), none), InputError);
}

TEST_CASE("embedding and truncation agree") {
  auto R2 = MetricSpace::euclidean(2);
  std::vector<Point> anchors = {{0.5, 0.5}, {-1.0, 0.0}, {0.0, 2.0}};
  const auto g = build_kuratowski_gauge(R2, anchors);
  const auto e = g.embed(Point{1.0, 1.0}, 3);
  REQUIRE(e.size() == 3);
  const auto t = g.truncated(2);
  CHECK(t.size() == 2);
  CHECK(t.embed(Point{1.0, 1.0}, 2)[1] == e[1]);
}

TEST_CASE("audit underestimates shrink as K grows and are never negative") {
  auto R2 = MetricSpace::euclidean(2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> anchors;
  for (int i = 0; i < 64; ++i) anchors.push_back(Point{u(rng), u(rng)});
  const auto g = build_kuratowski_gauge(R2, anchors);
  std::vector<std::pair<Point, Point>> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back({Point{u(rng), u(rng)}, Point{u(rng), u(rng)}});
  pairs.push_back({Point{0.1, 0.1}, Point{0.1, 0.1}});
  const std::size_t Ks[] = {4, 16, 64};
  const auto audit = gauge_quality_audit(g, pairs, Ks);
  CHECK(audit.skipped_coincident_pairs == 1);
  REQUIRE(audit.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(audit.rows[i].max_relative_underestimate >= -1e-12);
    if (i > 0) CHECK(audit.rows[i].max_relative_underestimate <= audit.rows[i - 1].max_relative_underestimate);
  }
  // 1-Lipschitz: the gauge never overestimates.
  for (const auto& [x, y] : pairs) CHECK(gauge_distance(g, x, y, 64) <= R2->distance(x, y) + 1e-12);
}
