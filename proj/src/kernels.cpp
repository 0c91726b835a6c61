#include "mdlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdlab/error.hpp"

namespace mdlab::kernels {

double node_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

void accumulate_defects(const MetricSpace& space, std::span<const Point> sample, std::size_t i,
                        AxiomReport& r) {
  const auto n = sample.size();
  const auto& x = sample[i];
  r.max_identity_defect = std::max(r.max_identity_defect, space.distance(x, x));
  for (std::size_t j = 0; j < n; ++j) {
    const double dxy = space.distance(x, sample[j]);
    r.max_symmetry_defect =
        std::max(r.max_symmetry_defect, std::abs(dxy - space.distance(sample[j], x)));
    for (std::size_t k = 0; k < n; ++k) {
      const double excess = space.distance(x, sample[k]) - dxy - space.distance(sample[j], sample[k]);
      r.max_triangle_defect = std::max(r.max_triangle_defect, excess);
    }
  }
}

std::size_t radius_count(double radius_step, double max_radius) {
  if (!(radius_step > 0.0)) throw InputError("maximal_function: radius step must be positive");
  return static_cast<std::size_t>(std::ceil(max_radius / radius_step)) + 1;
}

}  // namespace

AxiomReport metric_defects(const MetricSpace& space, std::span<const Point> sample) {
  const auto n = static_cast<long>(sample.size());
  double id = 0.0, sym = 0.0, tri = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : id, sym, tri)
  for (long i = 0; i < n; ++i) {
    AxiomReport local;
    accumulate_defects(space, sample, static_cast<std::size_t>(i), local);
    id = std::max(id, local.max_identity_defect);
    sym = std::max(sym, local.max_symmetry_defect);
    tri = std::max(tri, local.max_triangle_defect);
  }
  AxiomReport r{id, sym, tri, sample.size() * sample.size() * sample.size()};
  return r;
}

AxiomReport metric_defects_serial(const MetricSpace& space, std::span<const Point> sample) {
  AxiomReport r;
  for (std::size_t i = 0; i < sample.size(); ++i) accumulate_defects(space, sample, i, r);
  r.triples = sample.size() * sample.size() * sample.size();
  return r;
}

std::vector<double> maximal_function(const NodeCloud& nodes, std::span<const double> values,
                                     double radius_step, double max_radius) {
  const auto count = nodes.count();
  if (values.size() != count) throw InputError("maximal_function: value count mismatch");
  const auto radii = radius_count(radius_step, max_radius);
  std::vector<double> out(count, 0.0);

#pragma omp parallel
  {
    std::vector<std::size_t> order(count);
    std::vector<double> dist(count);
#pragma omp for schedule(static)
    for (long il = 0; il < static_cast<long>(count); ++il) {
      const auto i = static_cast<std::size_t>(il);
      for (std::size_t j = 0; j < count; ++j) dist[j] = node_distance(nodes.node(i), nodes.node(j));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
      double best = 0.0, sum = 0.0;
      std::size_t taken = 0;
      for (std::size_t k = 0; k < radii; ++k) {
        const double r = static_cast<double>(k) * radius_step;
        while (taken < count && dist[order[taken]] <= r) sum += std::abs(values[order[taken++]]);
        if (taken > 0) best = std::max(best, sum / static_cast<double>(taken));
      }
      out[i] = best;
    }
  }
  return out;
}

std::vector<double> maximal_function_serial(const NodeCloud& nodes,
                                            std::span<const double> values, double radius_step,
                                            double max_radius) {
  const auto count = nodes.count();
  if (values.size() != count) throw InputError("maximal_function: value count mismatch");
  const auto radii = radius_count(radius_step, max_radius);
  std::vector<double> out(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    double best = 0.0;
    for (std::size_t k = 0; k < radii; ++k) {
      const double r = static_cast<double>(k) * radius_step;
      double sum = 0.0;
      std::size_t members = 0;
      for (std::size_t j = 0; j < count; ++j) {
        if (node_distance(nodes.node(i), nodes.node(j)) <= r) {
          sum += std::abs(values[j]);
          ++members;
        }
      }
      if (members > 0) best = std::max(best, sum / static_cast<double>(members));
    }
    out[i] = best;
  }
  return out;
}

double max_pairwise_quotient(const NodeCloud& nodes, std::span<const Point> images,
                             const MetricSpace& target, std::span<const char> kept) {
  const auto count = static_cast<long>(nodes.count());
  double best = 0.0;
#pragma omp parallel for schedule(dynamic, 16) reduction(max : best)
  for (long i = 0; i < count; ++i) {
    if (!kept[i]) continue;
    for (long j = i + 1; j < count; ++j) {
      if (!kept[j]) continue;
      const double dx = node_distance(nodes.node(i), nodes.node(j));
      if (dx == 0.0) continue;
      best = std::max(best, target.distance(images[i], images[j]) / dx);
    }
  }
  return best;
}

double max_pairwise_quotient_serial(const NodeCloud& nodes, std::span<const Point> images,
                                    const MetricSpace& target, std::span<const char> kept) {
  const auto count = nodes.count();
  double best = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!kept[i]) continue;
    for (std::size_t j = i + 1; j < count; ++j) {
      if (!kept[j]) continue;
      const double dx = node_distance(nodes.node(i), nodes.node(j));
      if (dx == 0.0) continue;
      best = std::max(best, target.distance(images[i], images[j]) / dx);
    }
  }
  return best;
}

}  // namespace mdlab::kernels
