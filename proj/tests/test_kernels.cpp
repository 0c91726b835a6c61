// Parallel kernels against their serial references.
#include <omp.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "mdlab/kernels.hpp"

using namespace mdlab;
using namespace mdlab::kernels;

namespace {

Vec random_coords(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec c(count * dim);
  for (auto& v : c) v = u(rng);
  return c;
}

Vec lattice_1d(std::size_t n) {
  Vec c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  return c;
}

}  // namespace

TEST_CASE("metric defects agree for every thread count") {
  const auto space = MetricSpace::snowflake(MetricSpace::lp(3, Exponent::finite(1.5)), 0.6);
  const auto c = random_coords(40, 3, 1);
  std::vector<Point> sample;
  for (std::size_t i = 0; i < 40; ++i) sample.push_back(Point(Vec(c.begin() + 3 * i, c.begin() + 3 * i + 3)));
  const auto ref = metric_defects_serial(*space, sample);
  for (int t : {1, 2, 4, 7}) {
    omp_set_num_threads(t);
    const auto r = metric_defects(*space, sample);
    CHECK(r.triples == ref.triples);
    CHECK(r.max_identity_defect == ref.max_identity_defect);
    CHECK(r.max_symmetry_defect == ref.max_symmetry_defect);
    CHECK(r.max_triangle_defect == ref.max_triangle_defect);
  }
}

TEST_CASE("maximal function agrees on scattered and lattice clouds") {
  for (std::size_t dim : {1, 2}) {
    const auto c = random_coords(150, dim, 10 + dim);
    const auto vals = random_coords(150, 1, 20 + dim);
    const NodeCloud cloud{c, dim};
    const auto ref = maximal_function_serial(cloud, vals, 0.05, 2.0 * std::sqrt(double(dim)));
    for (int t : {1, 3, 8}) {
      omp_set_num_threads(t);
      const auto m = maximal_function(cloud, vals, 0.05, 2.0 * std::sqrt(double(dim)));
      REQUIRE(m.size() == ref.size());
      for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
  // Lattice nodes sit exactly on radius boundaries.
  const auto c = lattice_1d(65);
  const auto vals = random_coords(65, 1, 3);
  const NodeCloud cloud{c, 1};
  const double h = 2.0 / 64.0;
  const auto ref = maximal_function_serial(cloud, vals, h, 2.0);
  const auto m = maximal_function(cloud, vals, h, 2.0);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("pairwise quotient agrees and respects the kept mask") {
  const auto c = random_coords(120, 2, 4);
  const NodeCloud cloud{c, 2};
  const auto target = MetricSpace::lp(2, Exponent::infinity());
  std::vector<Point> images;
  for (std::size_t i = 0; i < 120; ++i) {
    const double x = c[2 * i], y = c[2 * i + 1];
    images.push_back(Point{std::sin(3.0 * x) + y * y, x * y});
  }
  std::vector<char> kept(120, 1);
  for (std::size_t i = 0; i < 120; i += 3) kept[i] = 0;
  const auto ref = max_pairwise_quotient_serial(cloud, images, *target, kept);
  for (int t : {1, 2, 5}) {
    omp_set_num_threads(t);
    CHECK(max_pairwise_quotient(cloud, images, *target, kept) == ref);
  }
  std::vector<char> one(120, 0);
  one[7] = 1;
  CHECK(max_pairwise_quotient(cloud, images, *target, one) == 0.0);
}
