#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mdlab/derivatives.hpp"

namespace mdlab {

/// nu -> max_k |g_k . nu| on R^n. Zero rows and kernels are allowed.
class Seminorm {
 public:
  Seminorm(std::size_t dim, std::vector<Vec> forms, Vec origin = {});

  double operator()(std::span<const double> nu) const;
  std::size_t dim() const { return dim_; }
  const std::vector<Vec>& forms() const { return forms_; }
  const Vec& origin() const { return origin_; }

 private:
  std::size_t dim_;
  std::vector<Vec> forms_;
  Vec origin_;
};

/// Deterministic unit-direction fans: n=1 -> {+1, -1}; n=2 -> `count`
/// equispaced angles pi (2i + 1) / count; n=3 -> `count` Fibonacci-sphere points.
std::vector<Vec> direction_fan(std::size_t dim, std::size_t count = 0);
/// The default fan sizes: 2, 64, 128 for n = 1, 2, 3.
std::size_t default_fan_size(std::size_t dim);

struct FittedSeminorm {
  Seminorm sigma;
  std::vector<TruncatedFunctional> partials;  ///< d/dx_j f(x) per axis j
  bool converged = false;
};

/// Row k is the central-difference gradient of phi_k o f at x.
FittedSeminorm fit_metric_differential(const MapOracle& f, const GaugeSequence& g,
                                       std::span<const double> x, const StepSchedule& schedule,
                                       double tol);

struct ResidualReport {
  Vec radii;
  Vec max_residual;  ///< per radius: max over fan |d(f(x+r nu), f(x)) - sigma(r nu)| / r
  bool nonincreasing = false;
  bool vanishing = false;  ///< last residual <= tol and nonincreasing
};

ResidualReport first_order_residual(const MapOracle& f,
                                    const std::function<double(std::span<const double>)>& sigma,
                                    std::span<const double> x, std::span<const double> radii,
                                    std::span<const Vec> fan, double tol);

struct SeminormAxiomReport {
  double max_homogeneity_defect = 0.0;    ///< |s(t nu) - |t| s(nu)|
  double max_subadditivity_defect = 0.0;  ///< (s(nu + mu) - s(nu) - s(mu))_+
  double min_value = 0.0;
};

SeminormAxiomReport seminorm_axiom_check(const std::function<double(std::span<const double>)>& s,
                                         std::span<const Vec> directions,
                                         std::span<const double> scalars);
SeminormAxiomReport seminorm_axiom_check(const Seminorm& s, std::span<const Vec> directions,
                                         std::span<const double> scalars);

/// Default scalar sample for homogeneity checks.
std::vector<double> default_scalars();

struct ConsistencyReport {
  Vec sigma_values;
  Vec metric_derivatives;
  double max_gap = 0.0;
  bool converged = false;
};

ConsistencyReport directional_consistency(const MapOracle& f, const Seminorm& sigma,
                                          std::span<const double> x, std::span<const Vec> fan,
                                          const StepSchedule& schedule, double tol);

}  // namespace mdlab
