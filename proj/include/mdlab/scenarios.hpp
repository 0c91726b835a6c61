#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdlab/derivatives.hpp"
#include "mdlab/gauge.hpp"

namespace mdlab {

using AnalyticMd = std::function<double(std::span<const double> x, std::span<const double> nu)>;
using Jacobian = std::function<std::vector<Vec>(std::span<const double> x)>;

/// A parameterized catalog map together with everything the suites need to know about it.
struct Scenario {
  std::string name;
  std::string description;
  MapOracle map;
  std::optional<AnalyticMd> analytic_md;
  std::string analytic_md_formula;      ///< human-readable closed form, empty if none
  std::optional<Jacobian> jacobian;     ///< rows indexed by target coordinate
  double fd_tol = 1e-6;                 ///< 1e-6 smooth, 1e-3 piecewise
  double md_tol = 1e-3;                 ///< fan gap tolerance against analytic_md
  std::vector<Vec> points;              ///< >= 5 interior sample points
  std::vector<LipschitzMap> compositions;
  std::optional<MapOracle> composition_base;  ///< f in the psi o f pairs; the map itself if empty
  /// Pointwise majorant of |grad f| used by the maximal/restriction suite.
  std::optional<std::function<double(std::span<const double>, double grid_h)>> gradient_majorant;
  bool linear = false;                  ///< f is linear, so every pairing quotient is exact
  /// Radius around x inside which d(f(x + h nu), f(x)) / h == analytic_md(x, nu); empty if never.
  std::function<double(std::span<const double>)> exact_radius;
  bool w1p_plateau = false;             ///< the smooth scenario whose W^{1,p} tail is compared to its gauge gap
};

/// Deterministic, stable-order catalog.
const std::vector<Scenario>& catalog();
/// Throws ConfigError listing the catalog when `name` is unknown.
const Scenario& find_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// Images f(x + r d_k) on a ring of radius `radius` around x, directions in
/// bit-reversed order so every prefix of length 2^j is an equispaced sub-ring.
/// n = 2 uses the upper half of a `2 max(K, 32)`-direction fan, n = 1 alternates
/// +/- with radii shrinking linearly towards radius/2, n = 3 the upper Fibonacci cap.
std::vector<Point> ring_sample(const MapOracle& f, std::span<const double> x, std::size_t K,
                               double radius);
/// Ring gauge of length K around x with radius clearance(x) * fraction.
GaugeSequence ring_gauge(const MapOracle& f, std::span<const double> x, std::size_t K,
                         double fraction = 0.5);
/// Images of a per_axis^n vertex lattice over the closed domain, in lattice order.
std::vector<Point> grid_image_sample(const MapOracle& f, std::size_t per_axis);

}  // namespace mdlab
