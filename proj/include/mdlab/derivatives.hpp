#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdlab/gauge.hpp"
#include "mdlab/spaces.hpp"

namespace mdlab {

/// Axis-aligned open box in R^n.
struct Box {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }
  /// Distance from x to the complement of the box (<= 0 outside).
  double clearance(std::span<const double> x) const;
  Vec center() const;
};

/// f: Omega -> X given by a closed-form evaluator.
struct MapOracle {
  std::string name;
  Box domain;
  SpacePtr target;
  std::function<Point(std::span<const double>)> eval;
  std::optional<double> lipschitz_bound;

  std::size_t dim() const { return domain.dim(); }
  Point operator()(std::span<const double> x) const { return eval(x); }
};

/// Lipschitz map psi: X -> Y with psi(z0) = y0 and declared Lip(psi).
struct LipschitzMap {
  std::string name;
  SpacePtr source;
  SpacePtr target;
  std::function<Point(const Point&)> apply;
  double lipschitz = 1.0;

  Point operator()(const Point& v) const { return apply(v); }
};

LipschitzMap identity_map(SpacePtr space);
/// v -> c v on a normed space; Lip = |c|.
LipschitzMap scaling_map(SpacePtr space, double c);

/// psi o f. Throws InputError when psi's source is not f's target.
MapOracle compose(const LipschitzMap& psi, const MapOracle& f);

/// Strictly decreasing positive steps.
struct StepSchedule {
  Vec steps;

  /// h0, h0/2, ..., h0/2^halvings.
  static StepSchedule geometric(double h0, std::size_t halvings);
  double max_step() const { return steps.front(); }
};

/// h0 = clearance(x)/16 with 8 halvings.
StepSchedule default_schedule(const MapOracle& f, std::span<const double> x);

/// Throws ClearanceError unless clearance(x) >= max_step * |nu|.
void require_clearance(const Box& domain, std::span<const double> x,
                       std::span<const double> nu, double max_step);

struct DerivativeEstimate {
  double value = 0.0;
  Vec h_schedule;
  Vec estimates;          ///< (forward + backward) / 2 per step
  Vec forward;            ///< d(f(x+h nu), f(x)) / h
  Vec backward;           ///< d(f(x-h nu), f(x)) / h
  Vec successive_diffs;   ///< |estimates[i+1] - estimates[i]|
  bool converged = false;
};

/// Two-sided agreement holds when |forward - backward| at the last step is
/// <= tol, or is still shrinking (<= 3/4 of the previous gap).
DerivativeEstimate metric_directional_derivative(const MapOracle& f, std::span<const double> x,
                                                 std::span<const double> nu,
                                                 const StepSchedule& schedule, double tol);

/// Element of (Lip_z0(X))* seen through K gauge pairings.
struct TruncatedFunctional {
  Vec pairings;
  std::vector<char> converged;
  std::string gauge_id;

  bool diagnostics_ok() const;
  std::size_t size() const { return pairings.size(); }
};

using ScalarFunctional = std::function<double(const Point&)>;

/// Central-difference limits of t -> functionals[k](f(x + t nu)) at t = 0.
/// An entry converges when successive central quotients agree within tol
/// and its one-sided quotients agree (within tol, or with a shrinking gap).
TruncatedFunctional directional_pairings(const MapOracle& f,
                                         std::span<const ScalarFunctional> functionals,
                                         std::span<const double> x, std::span<const double> nu,
                                         const StepSchedule& schedule, double tol);

/// Truncated weak weak* derivative: pairings of d/dnu f(x) with the gauge.
TruncatedFunctional truncated_weak_weak_star_derivative(const MapOracle& f,
                                                        const GaugeSequence& g,
                                                        std::span<const double> x,
                                                        std::span<const double> nu,
                                                        const StepSchedule& schedule, double tol);

/// max_k |pairings[k]| over the first K entries (all when K is omitted).
double truncated_norm(const TruncatedFunctional& w, std::optional<std::size_t> K = {});

/// sum_j partials[j] * nu_j, entrywise.
TruncatedFunctional combine(std::span<const TruncatedFunctional> partials,
                            std::span<const double> nu);

/// Linear (norm) difference quotients (f(x +- h nu) - f(x)) / (+-h) in a normed target.
struct LinearQuotientProbe {
  Vec h_schedule;
  Vec two_sided_gaps;  ///< ||D+(h) - D-(h)||
  Vec cauchy_diffs;    ///< ||D+(h_{i+1}) - D+(h_i)||
  bool two_sided_converged = false;
  bool cauchy_converged = false;
  bool converged() const { return two_sided_converged && cauchy_converged; }
};

LinearQuotientProbe linear_difference_quotient(const MapOracle& f, std::span<const double> x,
                                               std::span<const double> nu,
                                               const StepSchedule& schedule, double tol);

struct CompositionReport {
  Vec composed_pairings;  ///< <phi_k, d/dnu (psi o f)>
  Vec pulled_pairings;    ///< <phi_k o psi, d/dnu f>
  double max_identity_defect = 0.0;
  double composed_norm = 0.0;            ///< truncated_norm of d/dnu (psi o f)
  double metric_derivative = 0.0;        ///< m d_nu f(x), the untruncated norm of d/dnu f
  double norm_inequality_defect = 0.0;   ///< (composed_norm - Lip(psi) * metric_derivative)_+
  bool converged = false;
};

/// Throws InputError when psi(z0) != y0 or spaces do not match.
CompositionReport composition_check(const MapOracle& f, const LipschitzMap& psi,
                                    const GaugeSequence& gauge_y, std::span<const double> x,
                                    std::span<const double> nu, const StepSchedule& schedule,
                                    double tol);

struct LocalityReport {
  Vec max_norm_mismatch;               ///< per axis j
  std::vector<std::size_t> evaluated;  ///< indices of test points used
  std::vector<std::size_t> excluded;   ///< indices lacking clearance from the boundary of E
};

/// Compares truncated_norm of d/dx_j f1 and f2 at test points deep inside E.
/// Throws PremiseError if f1 != f2 at a sampled node of E.
LocalityReport locality_check(const MapOracle& f1, const MapOracle& f2, const Box& E,
                              const GaugeSequence& gauge, std::span<const Point> test_points,
                              const StepSchedule& schedule, double tol);

}  // namespace mdlab
