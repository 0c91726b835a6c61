#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mdlab {

using Vec = std::vector<double>;

/// Element of a catalog metric space: a finite real coordinate vector.
struct Point {
  Vec coords;

  Point() = default;
  explicit Point(Vec c) : coords(std::move(c)) {}
  Point(std::initializer_list<double> c) : coords(c) {}

  std::size_t size() const { return coords.size(); }
  std::span<const double> view() const { return coords; }
  bool operator==(const Point&) const = default;
};

/// Integrability exponent with an explicit infinity (never a large finite p).
class Exponent {
 public:
  static Exponent finite(double p);
  static Exponent infinity() { return Exponent(); }

  bool is_infinite() const { return infinite_; }
  double value() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : p_;
  }
  /// Hölder conjugate: 1/p + 1/q = 1.
  Exponent conjugate() const;
  std::string str() const;

  bool operator==(const Exponent&) const = default;

 private:
  Exponent() = default;
  double p_ = 0.0;
  bool infinite_ = true;
};

class MetricSpace;
using SpacePtr = std::shared_ptr<const MetricSpace>;

struct EuclideanKind {
  std::size_t dim;
};
struct LpKind {
  std::size_t dim;
  Exponent p;
};
/// L^p(0, length) identified with cell averages over `cells` equal cells.
struct DiscretizedLebesgueKind {
  std::size_t cells;
  Exponent p;
  double length;
};
/// (X, d^alpha) for alpha in (0, 1].
struct SnowflakeKind {
  SpacePtr base;
  double alpha;
};
/// Concatenated coordinates with d = max over factors.
struct ProductMaxKind {
  std::vector<SpacePtr> factors;
};

using SpaceKind =
    std::variant<EuclideanKind, LpKind, DiscretizedLebesgueKind, SnowflakeKind, ProductMaxKind>;

/// Pointed metric space given as a distance oracle over coordinate vectors.
/// Immutable after construction; all member functions are thread-safe.
class MetricSpace {
 public:
  static SpacePtr euclidean(std::size_t dim);
  static SpacePtr lp(std::size_t dim, Exponent p);
  static SpacePtr discretized_lebesgue(std::size_t cells, Exponent p, double length);
  static SpacePtr snowflake(SpacePtr base, double alpha);
  static SpacePtr product_max(std::vector<SpacePtr> factors);

  const SpaceKind& kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const Point& base_point() const { return base_point_; }
  /// Human-readable descriptor, e.g. "lp(2,inf)"; doubles as the space id.
  const std::string& id() const { return id_; }

  /// True for the linear catalog spaces (euclidean, lp, discretized_lebesgue).
  bool is_normed() const;
  /// Norm of a coordinate vector; throws InputError on non-normed spaces.
  double norm(std::span<const double> v) const;

  /// d(x, y). Throws InputError on dimension mismatch or non-finite entries.
  double distance(const Point& x, const Point& y) const;
  double distance(std::span<const double> x, std::span<const double> y) const;

  /// Throws InputError unless `x` has this space's dimension and finite entries.
  void check_point(std::span<const double> x) const;

 private:
  MetricSpace(SpaceKind kind, std::size_t dim, std::string id);
  double unchecked_distance(std::span<const double> x, std::span<const double> y) const;

  SpaceKind kind_;
  std::size_t dim_;
  std::string id_;
  Point base_point_;
};

/// Pairwise norms for the linear catalog spaces, shared by spaces and linear_target.
double weighted_lp_norm(std::span<const double> v, const Exponent& p, double weight);

struct AxiomReport {
  double max_identity_defect = 0.0;  ///< max d(x, x)
  double max_symmetry_defect = 0.0;  ///< max |d(x,y) - d(y,x)|
  double max_triangle_defect = 0.0;  ///< max (d(x,z) - d(x,y) - d(y,z))_+
  std::size_t triples = 0;
};

/// Brute force over all pairs and ordered triples of `sample`.
AxiomReport validate_metric_axioms(const MetricSpace& space, std::span<const Point> sample);

}  // namespace mdlab
