// Randomized properties over many seeds.
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mdlab/linear_target.hpp"
#include "mdlab/scenarios.hpp"
#include "mdlab/seminorm.hpp"
#include "mdlab/sobolev.hpp"

using namespace mdlab;

namespace {

constexpr int kTrials = 25;

Vec uniform_vec(std::mt19937_64& rng, std::size_t n, double a, double b) {
  std::uniform_real_distribution<double> u(a, b);
  Vec v(n);
  for (auto& c : v) c = u(rng);
  return v;
}

}  // namespace

TEST_CASE("w1p norm is homogeneous and subadditive") {
  std::mt19937_64 rng(101);
  const auto g = Grid::box({0.0, 0.0}, {1.0, 2.0}, {11, 7});
  for (int trial = 0; trial < kTrials; ++trial) {
    const GridFunction u(g, uniform_vec(rng, g->size(), -1.0, 1.0));
    const GridFunction v(g, uniform_vec(rng, g->size(), -1.0, 1.0));
    const double c = uniform_vec(rng, 1, -4.0, 4.0)[0];
    Vec cu = u.values, uv = u.values;
    for (std::size_t i = 0; i < cu.size(); ++i) {
      cu[i] *= c;
      uv[i] += v.values[i];
    }
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const double nu = w1p_norm(u, p).total, nv = w1p_norm(v, p).total;
      CHECK(std::abs(w1p_norm(GridFunction(g, cu), p).total - std::abs(c) * nu) <= 1e-10);
      CHECK(w1p_norm(GridFunction(g, uv), p).total <= nu + nv + 1e-10);
    }
  }
}

TEST_CASE("radial truncation is idempotent and lands in the ball in every normed space") {
  std::mt19937_64 rng(202);
  const std::vector<SpacePtr> spaces = {MetricSpace::euclidean(4), MetricSpace::lp(4, Exponent::finite(1.0)),
                                        MetricSpace::lp(4, Exponent::infinity()),
                                        MetricSpace::discretized_lebesgue(4, Exponent::finite(3.0), 0.5)};
  for (const auto& X : spaces) {
    for (int trial = 0; trial < kTrials; ++trial) {
      const double R = uniform_vec(rng, 1, 0.1, 2.0)[0];
      const Point v(uniform_vec(rng, 4, -5.0, 5.0)), w(uniform_vec(rng, 4, -5.0, 5.0));
      const auto pv = radial_truncation(*X, v, R), pw = radial_truncation(*X, w, R);
      CAPTURE(X->id());
      CHECK(X->norm(pv.coords) <= R);
      CHECK(radial_truncation(*X, pv, R) == pv);
      CHECK(X->distance(pv, pw) <= 2.0 * X->distance(v, w) + 1e-12);
    }
  }
}

TEST_CASE("Kuratowski gauges are 1-Lipschitz and fix the base point") {
  std::mt19937_64 rng(303);
  const std::vector<SpacePtr> spaces = {MetricSpace::euclidean(3),
                                        MetricSpace::snowflake(MetricSpace::lp(3, Exponent::finite(1.0)), 0.5),
                                        MetricSpace::product_max({MetricSpace::euclidean(2), MetricSpace::euclidean(1)})};
  for (const auto& X : spaces) {
    std::vector<Point> anchors;
    for (int i = 0; i < 16; ++i) anchors.push_back(Point(uniform_vec(rng, 3, -1.0, 1.0)));
    const auto g = build_kuratowski_gauge(X, anchors);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k](X->base_point()) == 0.0);
    for (int trial = 0; trial < kTrials; ++trial) {
      const Point x(uniform_vec(rng, 3, -2.0, 2.0)), y(uniform_vec(rng, 3, -2.0, 2.0));
      CHECK(gauge_distance(g, x, y, g.size()) <= X->distance(x, y) + 1e-12);
    }
  }
}

TEST_CASE("excluded sets are nested for random majorants") {
  const auto& s = find_scenario("S8-smooth-warp");
  std::mt19937_64 rng(404);
  const auto g = Grid::box({-0.8, -0.8}, {0.8, 0.8}, {9, 9});
  for (int trial = 0; trial < 5; ++trial) {
    const GridFunction h(g, uniform_vec(rng, g->size(), 0.0, 3.0));
    const Vec ts{0.5, 1.0, 2.0, 4.0};
    const auto rs = lipschitz_restriction_schedule(s.map, h, ts);
    for (std::size_t i = 1; i < rs.size(); ++i) {
      CHECK(std::includes(rs[i - 1].excluded_nodes.begin(), rs[i - 1].excluded_nodes.end(),
                          rs[i].excluded_nodes.begin(), rs[i].excluded_nodes.end()));
      CHECK(rs[i].empirical_lipschitz_constant >= rs[i - 1].empirical_lipschitz_constant);
    }
  }
}

TEST_CASE("metric derivative is even and positively homogeneous") {
  const auto& s = find_scenario("S9-surface-r3");
  std::mt19937_64 rng(505);
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto x = uniform_vec(rng, 2, -0.6, 0.6);
    auto nu = uniform_vec(rng, 2, -1.0, 1.0);
    const auto sched = default_schedule(s.map, x);
    const double a = metric_directional_derivative(s.map, x, nu, sched, 1e-6).value;
    Vec neg{-nu[0], -nu[1]}, half{0.5 * nu[0], 0.5 * nu[1]};
    CHECK(metric_directional_derivative(s.map, x, neg, sched, 1e-6).value == a);
    CHECK(std::abs(metric_directional_derivative(s.map, x, half, sched, 1e-6).value - 0.5 * a) <= 1e-6);
    CHECK(std::abs(a - (*s.analytic_md)(x, nu)) <= 1e-4);
  }
}

TEST_CASE("md from duals grows with the dual set and stays below the metric derivative") {
  const auto& s = find_scenario("S8-smooth-warp");
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = uniform_vec(rng, 2, -0.5, 0.5);
    const auto sched = default_schedule(s.map, x);
    auto D = random_duals(s.map.target, 3, 1000 + trial);
    double prev_sum = 0.0;
    for (int grow = 0; grow < 3; ++grow) {
      const auto G = dual_gradient(s.map, D, x, sched, 1e-6);
      double sum = 0.0;
      for (const auto& nu : direction_fan(2, 16)) {
        const double m = md_from_dual(G, D, nu);
        sum += m;
        CHECK(m <= metric_directional_derivative(s.map, x, nu, sched, 1e-6).value + 1e-6);
      }
      CHECK(sum >= prev_sum);
      prev_sum = sum;
      D = D.merged(random_duals(s.map.target, 4, 2000 + 10 * trial + grow));
    }
  }
}

TEST_CASE("fitted seminorms satisfy the seminorm axioms at random points") {
  const auto& s = find_scenario("S9-surface-r3");
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = uniform_vec(rng, 2, -0.5, 0.5);
    const auto g = ring_gauge(s.map, x, 16);
    const auto fit = fit_metric_differential(s.map, g, x, default_schedule(s.map, x), 1e-6);
    std::vector<Vec> dirs;
    for (int i = 0; i < 30; ++i) dirs.push_back(uniform_vec(rng, 2, -1.0, 1.0));
    const auto r = seminorm_axiom_check(fit.sigma, dirs, default_scalars());
    CHECK(r.max_homogeneity_defect <= 1e-12);
    CHECK(r.max_subadditivity_defect <= 1e-12);
    // The fit never exceeds the true metric differential by more than the fd tolerance.
    for (const auto& nu : direction_fan(2, 16)) CHECK(fit.sigma(nu) <= (*s.analytic_md)(x, nu) + 1e-6);
  }
}
