#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mdlab/spaces.hpp"

namespace mdlab {

/// phi(x) = d(anchor, x) - d(anchor, z0). 1-Lipschitz and phi(z0) == 0 exactly.
class GaugeFunctional {
 public:
  GaugeFunctional(SpacePtr space, Point anchor);

  double operator()(const Point& x) const;
  const Point& anchor() const { return anchor_; }
  const MetricSpace& space() const { return *space_; }

 private:
  SpacePtr space_;
  Point anchor_;
  double offset_;
};

/// Ordered Kuratowski functionals; the first K of them form the K-truncation.
class GaugeSequence {
 public:
  GaugeSequence(SpacePtr space, std::vector<GaugeFunctional> functionals);

  std::size_t size() const { return functionals_.size(); }
  const GaugeFunctional& operator[](std::size_t k) const { return functionals_[k]; }
  const MetricSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const std::string& id() const { return id_; }

  /// (phi_1(x), ..., phi_K(x)): the truncated embedding into lp(K, inf).
  Vec embed(const Point& x, std::size_t K) const;

  /// Prefix of length K sharing the same functionals.
  GaugeSequence truncated(std::size_t K) const;

 private:
  SpacePtr space_;
  std::vector<GaugeFunctional> functionals_;
  std::string id_;
};

/// Anchors in sample order; throws InputError on an empty sample.
GaugeSequence build_kuratowski_gauge(SpacePtr space, std::span<const Point> sample);

/// max_{k <= K} |phi_k(x) - phi_k(y)|. Throws InputError for K == 0 or K > size.
double gauge_distance(const GaugeSequence& g, const Point& x, const Point& y, std::size_t K);

struct GaugeAuditRow {
  std::size_t K = 0;
  double max_relative_underestimate = 0.0;
};

struct GaugeAudit {
  std::vector<GaugeAuditRow> rows;
  std::size_t skipped_coincident_pairs = 0;
};

/// For each K: max over pairs of (d(x,y) - gauge_distance) / d(x,y).
/// Pairs with d(x,y) == 0 are skipped and counted.
GaugeAudit gauge_quality_audit(const GaugeSequence& g,
                               std::span<const std::pair<Point, Point>> test_pairs,
                               std::span<const std::size_t> K_schedule);

}  // namespace mdlab
