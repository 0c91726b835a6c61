#include "mdlab/gauge.hpp"

#include <algorithm>
#include <cmath>

#include "mdlab/error.hpp"

namespace mdlab {

GaugeFunctional::GaugeFunctional(SpacePtr space, Point anchor)
    : space_(std::move(space)), anchor_(std::move(anchor)) {
  if (!space_) throw InputError("gauge functional needs a space");
  offset_ = space_->distance(anchor_, space_->base_point());
}

double GaugeFunctional::operator()(const Point& x) const {
  return space_->distance(anchor_, x) - offset_;
}

GaugeSequence::GaugeSequence(SpacePtr space, std::vector<GaugeFunctional> functionals)
    : space_(std::move(space)), functionals_(std::move(functionals)) {
  if (!space_) throw InputError("gauge sequence needs a space");
  if (functionals_.empty()) throw InputError("gauge sequence needs K >= 1");
  for (const auto& f : functionals_) {
    if (f.space().id() != space_->id()) throw InputError("gauge functional from a foreign space");
  }
  id_ = "kuratowski[" + space_->id() + ",K=" + std::to_string(functionals_.size()) + "]";
}

Vec GaugeSequence::embed(const Point& x, std::size_t K) const {
  if (K == 0 || K > size()) throw InputError("gauge truncation K out of range");
  Vec out(K);
  for (std::size_t k = 0; k < K; ++k) out[k] = functionals_[k](x);
  return out;
}

GaugeSequence GaugeSequence::truncated(std::size_t K) const {
  if (K == 0 || K > size()) throw InputError("gauge truncation K out of range");
  return GaugeSequence(space_, {functionals_.begin(), functionals_.begin() + static_cast<long>(K)});
}

GaugeSequence build_kuratowski_gauge(SpacePtr space, std::span<const Point> sample) {
  if (sample.empty()) throw InputError("build_kuratowski_gauge: empty sample");
  std::vector<GaugeFunctional> fs;
  fs.reserve(sample.size());
  for (const auto& p : sample) fs.emplace_back(space, p);
  return GaugeSequence(std::move(space), std::move(fs));
}

double gauge_distance(const GaugeSequence& g, const Point& x, const Point& y, std::size_t K) {
  if (K == 0) throw InputError("gauge_distance: K must be >= 1");
  if (K > g.size()) throw InputError("gauge_distance: K exceeds gauge length");
  double d = 0.0;
  for (std::size_t k = 0; k < K; ++k) d = std::max(d, std::abs(g[k](x) - g[k](y)));
  return d;
}

GaugeAudit gauge_quality_audit(const GaugeSequence& g,
                               std::span<const std::pair<Point, Point>> test_pairs,
                               std::span<const std::size_t> K_schedule) {
  GaugeAudit audit;
  std::vector<std::pair<const Point*, const Point*>> usable;
  std::vector<double> dist;
  for (const auto& [x, y] : test_pairs) {
    const double d = g.space().distance(x, y);
    if (d == 0.0) {
      ++audit.skipped_coincident_pairs;
      continue;
    }
    usable.emplace_back(&x, &y);
    dist.push_back(d);
  }
  for (auto K : K_schedule) {
    GaugeAuditRow row{K, 0.0};
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const double gd = gauge_distance(g, *usable[i].first, *usable[i].second, K);
      row.max_relative_underestimate =
          std::max(row.max_relative_underestimate, (dist[i] - gd) / dist[i]);
    }
    audit.rows.push_back(row);
  }
  return audit;
}

}  // namespace mdlab
