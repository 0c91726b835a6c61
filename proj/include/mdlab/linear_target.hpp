#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdlab/derivatives.hpp"

namespace mdlab {

/// Which duality a scenario exercises; numerics coincide in finite dimension.
enum class DualityFlag { bidual_gradient, dual_gradient };

/// Finite family of bounded linear functionals on a normed catalog space.
/// Coefficients pair through the space's own integral: sum_i w c_i v_i, with
/// w = L / cells for discretized_lebesgue and w = 1 otherwise.
struct DualTestSet {
  SpacePtr space;
  std::vector<Vec> functionals;
  Vec norms;  ///< dual norms, all positive
  std::string label;

  DualTestSet(SpacePtr space, std::vector<Vec> functionals, std::string label = "explicit");

  std::size_t size() const { return functionals.size(); }
  double pair(std::size_t k, std::span<const double> v) const;
  /// Union preserving order, this set first.
  DualTestSet merged(const DualTestSet& other) const;
};

/// Dual norm of coefficients c on a normed catalog space.
double dual_norm(const MetricSpace& space, std::span<const double> c);

DualTestSet coordinate_duals(SpacePtr space);
/// Unit-sphere fan of the coordinate space (euclidean(2)/(3) style directions, any lp).
DualTestSet direction_duals(SpacePtr space, std::size_t count);
/// `count` random functionals with entries uniform in [-1, 1] (mt19937_64 with `seed`).
DualTestSet random_duals(SpacePtr space, std::size_t count, std::uint64_t seed);
/// Indicators of `blocks` equal sub-intervals of a discretized_lebesgue space, and their negatives.
DualTestSet step_duals(SpacePtr space, std::size_t blocks);

struct DualGradient {
  std::size_t rows = 0, cols = 0;
  Vec entries;                   ///< row-major <v*_k, d_j f(x)>
  std::vector<char> converged;   ///< per entry
  DualityFlag flag = DualityFlag::bidual_gradient;

  double at(std::size_t k, std::size_t j) const { return entries[k * cols + j]; }
  bool diagnostics_ok() const;
};

DualGradient dual_gradient(const MapOracle& f, const DualTestSet& D, std::span<const double> x,
                           const StepSchedule& schedule, double tol,
                           DualityFlag flag = DualityFlag::bidual_gradient);

/// max_k |row_k . nu| / ||v*_k||.
double md_from_dual(const DualGradient& G, const DualTestSet& D, std::span<const double> nu);

struct WeakStarResidualReport {
  Vec radii;
  Vec max_residual;                        ///< per radius
  std::vector<Vec> per_functional;         ///< [k][radius]
};

WeakStarResidualReport weak_star_residual(const MapOracle& f, const DualGradient& G,
                                          const DualTestSet& D, std::span<const double> x,
                                          std::span<const double> radii,
                                          std::span<const Vec> fan);

}  // namespace mdlab
