#include "mdlab/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mdlab/error.hpp"
#include "mdlab/kernels.hpp"

namespace mdlab {

namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Exponent Exponent::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw InputError("exponent must be a finite value >= 1, got " + fmt_real(p));
  }
  Exponent e;
  e.p_ = p;
  e.infinite_ = false;
  return e;
}

Exponent Exponent::conjugate() const {
  if (infinite_) return finite(1.0);
  if (p_ == 1.0) return infinity();
  return finite(p_ / (p_ - 1.0));
}

std::string Exponent::str() const { return infinite_ ? "inf" : fmt_real(p_); }

double weighted_lp_norm(std::span<const double> v, const Exponent& p, double weight) {
  if (p.is_infinite()) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  const double q = p.value();
  double s = 0.0;
  if (q == 1.0) {
    for (double x : v) s += std::abs(x);
    return weight * s;
  }
  if (q == 2.0) {
    for (double x : v) s += x * x;
    return std::sqrt(weight * s);
  }
  for (double x : v) s += std::pow(std::abs(x), q);
  return std::pow(weight * s, 1.0 / q);
}

MetricSpace::MetricSpace(SpaceKind kind, std::size_t dim, std::string id)
    : kind_(std::move(kind)), dim_(dim), id_(std::move(id)), base_point_(Vec(dim, 0.0)) {}

SpacePtr MetricSpace::euclidean(std::size_t dim) {
  if (dim == 0) throw InputError("euclidean space needs dim >= 1");
  return SpacePtr(new MetricSpace(EuclideanKind{dim}, dim, "euclidean(" + std::to_string(dim) + ")"));
}

SpacePtr MetricSpace::lp(std::size_t dim, Exponent p) {
  if (dim == 0) throw InputError("lp space needs dim >= 1");
  auto id = "lp(" + std::to_string(dim) + "," + p.str() + ")";
  return SpacePtr(new MetricSpace(LpKind{dim, p}, dim, std::move(id)));
}

SpacePtr MetricSpace::discretized_lebesgue(std::size_t cells, Exponent p, double length) {
  if (cells == 0) throw InputError("discretized_lebesgue needs at least one cell");
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw InputError("discretized_lebesgue interval length must be positive");
  }
  auto id = "discretized_lebesgue(" + std::to_string(cells) + "," + p.str() + "," +
            fmt_real(length) + ")";
  return SpacePtr(
      new MetricSpace(DiscretizedLebesgueKind{cells, p, length}, cells, std::move(id)));
}

SpacePtr MetricSpace::snowflake(SpacePtr base, double alpha) {
  if (!base) throw InputError("snowflake needs a base space");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("snowflake exponent must lie in (0,1]");
  const auto dim = base->dim();
  auto id = "snowflake(" + base->id() + "," + fmt_real(alpha) + ")";
  auto* s = new MetricSpace(SnowflakeKind{base, alpha}, dim, std::move(id));
  s->base_point_ = base->base_point();
  return SpacePtr(s);
}

SpacePtr MetricSpace::product_max(std::vector<SpacePtr> factors) {
  if (factors.empty()) throw InputError("product_max needs at least one factor");
  std::size_t dim = 0;
  std::string id = "product_max(";
  Vec base;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!factors[i]) throw InputError("product_max factor is null");
    dim += factors[i]->dim();
    id += (i ? "," : "") + factors[i]->id();
    const auto& b = factors[i]->base_point().coords;
    base.insert(base.end(), b.begin(), b.end());
  }
  id += ")";
  auto* s = new MetricSpace(ProductMaxKind{std::move(factors)}, dim, std::move(id));
  s->base_point_ = Point(std::move(base));
  return SpacePtr(s);
}

bool MetricSpace::is_normed() const {
  return std::holds_alternative<EuclideanKind>(kind_) || std::holds_alternative<LpKind>(kind_) ||
         std::holds_alternative<DiscretizedLebesgueKind>(kind_);
}

double MetricSpace::norm(std::span<const double> v) const {
  if (v.size() != dim_) throw InputError("norm: dimension mismatch in " + id_);
  return std::visit(
      Overloaded{
          [&](const EuclideanKind&) { return weighted_lp_norm(v, Exponent::finite(2.0), 1.0); },
          [&](const LpKind& k) { return weighted_lp_norm(v, k.p, 1.0); },
          [&](const DiscretizedLebesgueKind& k) {
            return weighted_lp_norm(v, k.p, k.length / static_cast<double>(k.cells));
          },
          [&](const auto&) -> double { throw InputError(id_ + " is not a normed space"); },
      },
      kind_);
}

void MetricSpace::check_point(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw InputError("point of dimension " + std::to_string(x.size()) + " does not belong to " +
                     id_);
  }
  for (double c : x) {
    if (!std::isfinite(c)) throw InputError("non-finite coordinate in point of " + id_);
  }
}

double MetricSpace::distance(const Point& x, const Point& y) const {
  return distance(x.view(), y.view());
}

double MetricSpace::distance(std::span<const double> x, std::span<const double> y) const {
  check_point(x);
  check_point(y);
  return unchecked_distance(x, y);
}

double MetricSpace::unchecked_distance(std::span<const double> x,
                                       std::span<const double> y) const {
  return std::visit(
      Overloaded{
          [&](const SnowflakeKind& k) {
            const double d = k.base->unchecked_distance(x, y);
            return k.alpha == 1.0 ? d : std::pow(d, k.alpha);
          },
          [&](const ProductMaxKind& k) {
            double d = 0.0;
            std::size_t off = 0;
            for (const auto& f : k.factors) {
              const auto n = f->dim();
              d = std::max(d, f->unchecked_distance(x.subspan(off, n), y.subspan(off, n)));
              off += n;
            }
            return d;
          },
          [&](const auto&) {
            // Differences are formed in a fixed coordinate order and the norms
            // are even, so d(x,y) == d(y,x) bit for bit.
            thread_local Vec diff;
            diff.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) diff[i] = std::abs(x[i] - y[i]);
            return norm(diff);
          },
      },
      kind_);
}

AxiomReport validate_metric_axioms(const MetricSpace& space, std::span<const Point> sample) {
  if (sample.empty()) throw InputError("validate_metric_axioms: empty sample");
  for (const auto& p : sample) space.check_point(p.view());
  return kernels::metric_defects(space, sample);
}

}  // namespace mdlab
