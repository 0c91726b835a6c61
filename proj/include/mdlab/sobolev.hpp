#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mdlab/derivatives.hpp"
#include "mdlab/kernels.hpp"

namespace mdlab {

/// Rectangular lattice with an optional membership mask and quadrature weights.
///
/// `box` grids are vertex-centered (endpoints included) with trapezoid weights,
/// so the weights sum to the box volume. `unit_ball` grids are cell-centered
/// over [-1,1]^n, keep nodes with |v| < 1 and carry midpoint weights h^n.
class Grid {
 public:
  static std::shared_ptr<const Grid> box(Vec lo, Vec hi, std::vector<std::size_t> counts);
  static std::shared_ptr<const Grid> unit_ball(std::size_t dim, std::size_t per_axis);

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return weights_.size(); }
  bool is_ball() const { return ball_; }
  const Vec& spacing() const { return spacing_; }
  double min_spacing() const;
  const std::vector<std::size_t>& counts() const { return counts_; }

  std::span<const double> node(std::size_t i) const { return {&coords_[i * dim()], dim()}; }
  kernels::NodeCloud cloud() const { return {coords_, dim()}; }
  double weight(std::size_t i) const { return weights_[i]; }
  const Vec& weights() const { return weights_; }
  /// Active neighbour one lattice step along `axis` in direction `step` (+1/-1).
  std::optional<std::size_t> neighbor(std::size_t i, std::size_t axis, int step) const;
  /// Euclidean diameter of the lattice's bounding box.
  double diameter() const;
  /// Bounding box of the lattice (corner nodes).
  Box bounds() const;

 private:
  Grid() = default;
  void finalize(const std::function<bool(std::span<const double>)>& keep,
                const std::function<double(const std::vector<std::size_t>&)>& weight);

  Vec lo_, spacing_;
  std::vector<std::size_t> counts_;
  bool ball_ = false;
  Vec coords_;                          // active nodes, row-major
  Vec weights_;                         // active nodes
  std::vector<std::size_t> lattice_;    // active -> lattice index
  std::vector<long> active_;            // lattice -> active index or -1
};

using GridPtr = std::shared_ptr<const Grid>;

struct GridFunction {
  GridPtr grid;
  Vec values;

  GridFunction() = default;
  GridFunction(GridPtr g, Vec v);
  static GridFunction tabulate(GridPtr g, const std::function<double(std::span<const double>)>& u);

  /// Header "x1,...,xn,value", one node per line, LF endings.
  void write_csv(std::ostream& out) const;
  /// Reads nodes in grid order; coordinates must match the grid within 1e-12.
  static GridFunction read_csv(std::istream& in, GridPtr grid);
};

/// Discrete partial derivative along `axis`: central where both neighbours
/// exist, one-sided where one does, 0 for nodes isolated along the axis.
Vec grid_partial(const GridFunction& u, std::size_t axis);

struct SobolevNormReport {
  double p = 1.0;
  double lp_part = 0.0;
  Vec gradient_parts;
  double total = 0.0;
};

/// ||u||_p + sum_j ||d_j u||_p with the grid's quadrature weights.
SobolevNormReport w1p_norm(const GridFunction& u, double p);

/// Mu(x) = max over radii {0, h, 2h, ..., diam} of the mean of |u| over grid nodes in B(x, r).
GridFunction maximal_function(const GridFunction& u);

struct RestrictionResult {
  double t = 0.0;
  std::vector<std::size_t> kept_nodes;
  std::vector<std::size_t> excluded_nodes;  ///< E_t = {Mh >= t}
  double empirical_lipschitz_constant = 0.0;
  double measure_excluded = 0.0;
  double p = 1.0;
  double lip_measure_product = 0.0;  ///< constant^p * measure_excluded
  bool degenerate = false;           ///< every node excluded
};

/// Restriction of f to {Mh < t} on the majorant's grid.
RestrictionResult lipschitz_restriction(const MapOracle& f, const GridFunction& majorant,
                                        double t, double p = 1.0);
/// Same for a whole threshold schedule, sharing one tabulation and one maximal function.
std::vector<RestrictionResult> lipschitz_restriction_schedule(const MapOracle& f,
                                                              const GridFunction& majorant,
                                                              std::span<const double> thresholds,
                                                              double p = 1.0);

/// pi_R(v) = v if ||v|| <= R, else R v / ||v||; the result always has norm <= R.
Point radial_truncation(const MetricSpace& space, const Point& v, double R);
/// pi_R as a LipschitzMap with declared constant 2.
LipschitzMap radial_truncation_map(SpacePtr space, double R);

struct ReshetnyakReport {
  std::size_t nodes_checked = 0;
  std::size_t nodes_skipped = 0;       ///< no clearance or non-converged pairings
  std::size_t violating_nodes = 0;     ///< some |grad(phi_k o f)| > g + tol
  double max_violation = 0.0;
  std::size_t below_canonical = 0;     ///< nodes with g < g* - tol
  double max_canonical = 0.0;          ///< max g* over checked nodes
  double integration_by_parts_defect = 0.0;
  GridFunction canonical;              ///< g*(x) = (sum_j truncated_norm(d_j f)^2)^(1/2)
};

/// Upper-gradient test of a candidate g on its grid for all gauge functionals.
ReshetnyakReport reshetnyak_gradient_check(const MapOracle& f, const GridFunction& g,
                                           const GaugeSequence& gauge, double tol);

struct W1pDifferentiabilityReport {
  double p = 1.0;
  Vec h_schedule;
  std::vector<SobolevNormReport> norms;
  std::vector<std::size_t> excluded_nodes;  ///< per h: shifted nodes outside the domain
  bool nonincreasing_tail = false;
  bool below_tol = false;
  Vec totals() const;
};

/// eta_h(nu) = d(f(x + h nu), f(x)) / h - sigma(nu) on the unit-ball grid, measured in W^{1,p}(B).
W1pDifferentiabilityReport w1p_differentiability_check(
    const MapOracle& f, const std::function<double(std::span<const double>)>& sigma,
    std::span<const double> x, double p, std::span<const double> h_schedule, GridPtr ball,
    double tol);

}  // namespace mdlab
