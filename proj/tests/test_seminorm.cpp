#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mdlab/error.hpp"
#include "mdlab/scenarios.hpp"
#include "mdlab/seminorm.hpp"

using namespace mdlab;

TEST_CASE("degenerate seminorm with a kernel") {
  Seminorm s(2, {{1.0, 0.0}});
  CHECK(s(std::vector<double>{0.0, 5.0}) == 0.0);
  CHECK(s(std::vector<double>{-2.0, 5.0}) == 2.0);
  Seminorm zero(3, {});
  CHECK(zero(std::vector<double>{1.0, 2.0, 3.0}) == 0.0);
}

TEST_CASE("seminorm rejects rows of the wrong length") {
  CHECK_THROWS_AS(Seminorm(2, {{1.0, 0.0, 0.0}}), InputError);
}

TEST_CASE("direction fans are unit vectors of the requested size") {
  CHECK(direction_fan(1).size() == 2);
  CHECK(direction_fan(2).size() == default_fan_size(2));
  CHECK(direction_fan(3, 40).size() == 40);
  for (const auto& v : direction_fan(3)) {
    CHECK(std::hypot(v[0], v[1], v[2]) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("fitted seminorm of the identity map matches the euclidean norm") {
  MapOracle f;
  f.name = "id";
  f.domain = Box{{-1.0, -1.0}, {1.0, 1.0}};
  f.target = MetricSpace::euclidean(2);
  f.eval = [](std::span<const double> x) { return Point{x[0], x[1]}; };
  const std::vector<double> x{0.1, 0.2};
  const auto g = ring_gauge(f, x, 32);
  const auto fit = fit_metric_differential(f, g, x, default_schedule(f, x), 1e-6);
  CHECK(fit.converged);
  for (const auto& nu : direction_fan(2)) {
    CHECK(fit.sigma(nu) <= 1.0 + 1e-9);
    CHECK(fit.sigma(nu) >= 1.0 - 0.05);
  }
}

TEST_CASE("max of random forms is a seminorm on random triples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> forms;
  for (int k = 0; k < 5; ++k) forms.push_back({u(rng), u(rng), u(rng)});
  Seminorm s(3, forms);
  std::vector<Vec> dirs;
  for (int i = 0; i < 200; ++i) dirs.push_back({u(rng), u(rng), u(rng)});
  const auto r = seminorm_axiom_check(s, dirs, default_scalars());
  CHECK(r.max_homogeneity_defect <= 1e-12);
  CHECK(r.max_subadditivity_defect <= 1e-12);
  CHECK(r.min_value >= 0.0);
}

TEST_CASE("axiom check flags a non-seminorm") {
  std::vector<Vec> dirs = {{1.0}, {-1.0}, {0.5}};
  const auto r = seminorm_axiom_check([](std::span<const double> v) { return v[0] * v[0]; }, dirs,
                                      default_scalars());
  CHECK(r.max_homogeneity_defect > 0.1);
}

TEST_CASE("first-order residual of a linear map vanishes at every radius") {
  const auto& s = find_scenario("S1-linear-euclidean");
  const std::vector<double> x{0.3, -0.2};
  const Vec radii{0.4, 0.2, 0.1};
  const auto fan = direction_fan(2);
  auto sigma = [&](std::span<const double> nu) { return (*s.analytic_md)(x, nu); };
  const auto r = first_order_residual(s.map, sigma, x, radii, fan, 1e-10);
  for (double m : r.max_residual) CHECK(m <= 1e-12);
}

TEST_CASE("directional consistency of an exact seminorm") {
  const auto& s = find_scenario("S4-rank-deficient");
  Seminorm sigma(2, {{1.0, 0.0}});
  const std::vector<double> x{0.2, 0.1};
  const auto fan = direction_fan(2);
  const auto r = directional_consistency(s.map, sigma, x, fan, default_schedule(s.map, x), 1e-6);
  CHECK(r.max_gap <= 1e-12);
  CHECK(r.converged);
}
