#include "mdlab/seminorm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mdlab/error.hpp"

namespace mdlab {

Seminorm::Seminorm(std::size_t dim, std::vector<Vec> forms, Vec origin)
    : dim_(dim), forms_(std::move(forms)), origin_(std::move(origin)) {
  for (const auto& g : forms_) {
    if (g.size() != dim_) throw InputError("seminorm row has the wrong length");
  }
}

double Seminorm::operator()(std::span<const double> nu) const {
  if (nu.size() != dim_) throw InputError("seminorm evaluated at a vector of wrong length");
  double m = 0.0;
  for (const auto& g : forms_) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += g[j] * nu[j];
    m = std::max(m, std::abs(s));
  }
  return m;
}

std::size_t default_fan_size(std::size_t dim) {
  switch (dim) {
    case 1: return 2;
    case 2: return 64;
    case 3: return 128;
    default: throw InputError("direction fans are defined for n <= 3");
  }
}

std::vector<Vec> direction_fan(std::size_t dim, std::size_t count) {
  if (count == 0) count = default_fan_size(dim);
  std::vector<Vec> fan;
  if (dim == 1) {
    fan = {{1.0}, {-1.0}};
  } else if (dim == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      const double a = std::numbers::pi * static_cast<double>(2 * i + 1) / static_cast<double>(count);
      fan.push_back({std::cos(a), std::sin(a)});
    }
  } else if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
      const double r = std::sqrt(1.0 - z * z);
      const double a = golden * static_cast<double>(i);
      fan.push_back({r * std::cos(a), r * std::sin(a), z});
    }
  } else {
    throw InputError("direction fans are defined for n <= 3");
  }
  return fan;
}

FittedSeminorm fit_metric_differential(const MapOracle& f, const GaugeSequence& g,
                                       std::span<const double> x, const StepSchedule& schedule,
                                       double tol) {
  const auto n = f.dim();
  std::vector<TruncatedFunctional> partials;
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    partials.push_back(truncated_weak_weak_star_derivative(f, g, x, e, schedule, tol));
  }
  std::vector<Vec> rows(g.size(), Vec(n));
  bool ok = true;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < g.size(); ++k) rows[k][j] = partials[j].pairings[k];
    ok = ok && partials[j].diagnostics_ok();
  }
  return {Seminorm(n, std::move(rows), Vec(x.begin(), x.end())), std::move(partials), ok};
}

ResidualReport first_order_residual(const MapOracle& f,
                                    const std::function<double(std::span<const double>)>& sigma,
                                    std::span<const double> x, std::span<const double> radii,
                                    std::span<const Vec> fan, double tol) {
  if (radii.empty()) throw InputError("first_order_residual: empty radius schedule");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] < radii[i - 1])) throw InputError("first_order_residual: radii must decrease");
  }
  for (const auto& nu : fan) require_clearance(f.domain, x, nu, radii.front());
  const Point fx = f(x);
  ResidualReport r;
  r.radii.assign(radii.begin(), radii.end());
  for (double rad : radii) {
    double worst = 0.0;
    for (const auto& nu : fan) {
      Vec y(x.begin(), x.end()), scaled(nu.size());
      for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] += rad * nu[j];
        scaled[j] = rad * nu[j];
      }
      worst = std::max(worst, std::abs(f.target->distance(f(y), fx) - sigma(scaled)) / rad);
    }
    r.max_residual.push_back(worst);
  }
  r.nonincreasing = true;
  for (std::size_t i = 1; i < r.max_residual.size(); ++i) {
    r.nonincreasing = r.nonincreasing && r.max_residual[i] <= r.max_residual[i - 1];
  }
  r.vanishing = r.nonincreasing && r.max_residual.back() <= tol;
  return r;
}

std::vector<double> default_scalars() { return {-3.0, -2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 3.0}; }

SeminormAxiomReport seminorm_axiom_check(const std::function<double(std::span<const double>)>& s,
                                         std::span<const Vec> directions,
                                         std::span<const double> scalars) {
  SeminormAxiomReport r;
  r.min_value = std::numeric_limits<double>::infinity();
  std::vector<double> values;
  for (const auto& nu : directions) {
    const double v = s(nu);
    values.push_back(v);
    r.min_value = std::min(r.min_value, v);
    for (double t : scalars) {
      Vec tv(nu);
      for (auto& c : tv) c *= t;
      r.max_homogeneity_defect =
          std::max(r.max_homogeneity_defect, std::abs(s(tv) - std::abs(t) * v));
    }
  }
  for (std::size_t a = 0; a < directions.size(); ++a) {
    for (std::size_t b = 0; b < directions.size(); ++b) {
      Vec sum(directions[a]);
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += directions[b][j];
      r.max_subadditivity_defect =
          std::max(r.max_subadditivity_defect, s(sum) - values[a] - values[b]);
    }
  }
  if (directions.empty()) r.min_value = 0.0;
  return r;
}

SeminormAxiomReport seminorm_axiom_check(const Seminorm& s, std::span<const Vec> directions,
                                         std::span<const double> scalars) {
  return seminorm_axiom_check([&s](std::span<const double> nu) { return s(nu); }, directions,
                              scalars);
}

ConsistencyReport directional_consistency(const MapOracle& f, const Seminorm& sigma,
                                          std::span<const double> x, std::span<const Vec> fan,
                                          const StepSchedule& schedule, double tol) {
  ConsistencyReport r;
  r.converged = true;
  for (const auto& nu : fan) {
    const auto md = metric_directional_derivative(f, x, nu, schedule, tol);
    const double s = sigma(nu);
    r.sigma_values.push_back(s);
    r.metric_derivatives.push_back(md.value);
    r.max_gap = std::max(r.max_gap, std::abs(s - md.value));
    r.converged = r.converged && md.converged;
  }
  return r;
}

}  // namespace mdlab
