// Serial reference vs OpenMP kernels. Usage: kernel_bench [repeats]
// Thread count follows OMP_NUM_THREADS.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "mdlab/kernels.hpp"

using namespace mdlab;
using namespace mdlab::kernels;

namespace {

double best_of(int repeats, const std::function<double()>& fn, double& sink) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    sink += fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-34s serial %9.4f s   parallel %9.4f s   speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads %d, best of %d\n", omp_get_max_threads(), repeats);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double sink = 0.0;

  {
    const auto space = MetricSpace::lp(8, Exponent::finite(1.5));
    std::vector<Point> sample;
    for (int i = 0; i < 120; ++i) {
      Vec v(8);
      for (auto& c : v) c = u(rng);
      sample.emplace_back(std::move(v));
    }
    const double s = best_of(repeats, [&] { return metric_defects_serial(*space, sample).max_triangle_defect; }, sink);
    const double p = best_of(repeats, [&] { return metric_defects(*space, sample).max_triangle_defect; }, sink);
    report("metric_defects lp(8,1.5) 120 pts", s, p);
  }
  {
    const std::size_t n = 1025;
    Vec coords(n), vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      coords[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
      vals[i] = 0.5 / std::sqrt(std::abs(coords[i]) + 1e-3);
    }
    const NodeCloud cloud{coords, 1};
    const double h = 2.0 / static_cast<double>(n - 1);
    const double s = best_of(repeats, [&] { return maximal_function_serial(cloud, vals, h, 2.0)[0]; }, sink);
    const double p = best_of(repeats, [&] { return maximal_function(cloud, vals, h, 2.0)[0]; }, sink);
    report("maximal_function 1D 1025 nodes", s, p);
  }
  {
    const std::size_t side = 33, n = side * side;
    Vec coords(2 * n), vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      coords[2 * i] = -1.0 + 2.0 * static_cast<double>(i % side) / (side - 1);
      coords[2 * i + 1] = -1.0 + 2.0 * static_cast<double>(i / side) / (side - 1);
      vals[i] = u(rng);
    }
    const NodeCloud cloud{coords, 2};
    const double h = 2.0 / (side - 1);
    const double s = best_of(repeats, [&] { return maximal_function_serial(cloud, vals, h, 3.0)[0]; }, sink);
    const double p = best_of(repeats, [&] { return maximal_function(cloud, vals, h, 3.0)[0]; }, sink);
    report("maximal_function 2D 33x33", s, p);
  }
  {
    const std::size_t n = 2000;
    Vec coords(2 * n);
    for (auto& c : coords) c = u(rng);
    std::vector<Point> images;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = coords[2 * i], y = coords[2 * i + 1];
      images.push_back(Point{x + 0.25 * std::sin(3.0 * y), y + 0.25 * std::sin(3.0 * x), x * y});
    }
    const auto target = MetricSpace::euclidean(3);
    std::vector<char> kept(n, 1);
    const NodeCloud cloud{coords, 2};
    const double s = best_of(repeats, [&] { return max_pairwise_quotient_serial(cloud, images, *target, kept); }, sink);
    const double p = best_of(repeats, [&] { return max_pairwise_quotient(cloud, images, *target, kept); }, sink);
    report("max_pairwise_quotient 2000 nodes", s, p);
  }
  std::printf("checksum %.6g\n", sink);
  return 0;
}
