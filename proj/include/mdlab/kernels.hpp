#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version, used by the
// library, and a plain serial reference kept for tests and benchmarks.

#include <cstddef>
#include <span>
#include <vector>

#include "mdlab/spaces.hpp"

namespace mdlab::kernels {

/// Nodes of a lattice or scattered cloud in R^n, row-major (count x dim).
struct NodeCloud {
  std::span<const double> coords;
  std::size_t dim = 1;

  std::size_t count() const { return dim ? coords.size() / dim : 0; }
  std::span<const double> node(std::size_t i) const { return coords.subspan(i * dim, dim); }
};

double node_distance(std::span<const double> a, std::span<const double> b);

AxiomReport metric_defects(const MetricSpace& space, std::span<const Point> sample);
AxiomReport metric_defects_serial(const MetricSpace& space, std::span<const Point> sample);

/// Discrete Hardy-Littlewood maximal function with radii {0, h, 2h, ..., ceil(rmax/h) h}
/// and equal node weights; ball membership is |y - x| <= r.
/// The parallel version sorts distances once per node and scans prefix sums;
/// the serial reference enumerates every ball directly.
std::vector<double> maximal_function(const NodeCloud& nodes, std::span<const double> values,
                                     double radius_step, double max_radius);
std::vector<double> maximal_function_serial(const NodeCloud& nodes,
                                            std::span<const double> values, double radius_step,
                                            double max_radius);

/// max over kept pairs i < j of d(images[i], images[j]) / |x_i - x_j|; 0 if fewer than two kept.
double max_pairwise_quotient(const NodeCloud& nodes, std::span<const Point> images,
                             const MetricSpace& target, std::span<const char> kept);
double max_pairwise_quotient_serial(const NodeCloud& nodes, std::span<const Point> images,
                                    const MetricSpace& target, std::span<const char> kept);

}  // namespace mdlab::kernels
