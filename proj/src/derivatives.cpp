#include "mdlab/derivatives.hpp"

#include <algorithm>
#include <cmath>

#include "mdlab/error.hpp"

namespace mdlab {

namespace {

double euclid_norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

Vec shifted(std::span<const double> x, std::span<const double> nu, double t) {
  Vec y(x.begin(), x.end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * nu[i];
  return y;
}

void check_direction(const MapOracle& f, std::span<const double> x, std::span<const double> nu) {
  if (x.size() != f.dim() || nu.size() != f.dim()) {
    throw InputError("point/direction dimension does not match the domain of " + f.name);
  }
  if (euclid_norm(nu) == 0.0) throw InputError("direction must be nonzero");
}

// One-sided quotients agree, or their gap is still shrinking under refinement.
bool sides_agree(const Vec& gaps, double tol) {
  const double last = gaps.back();
  if (last <= tol) return true;
  return gaps.size() >= 2 && last <= 0.75 * gaps[gaps.size() - 2];
}

}  // namespace

double Box::clearance(std::span<const double> x) const {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lo.size(); ++i) c = std::min({c, x[i] - lo[i], hi[i] - x[i]});
  return c;
}

Vec Box::center() const {
  Vec c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

LipschitzMap identity_map(SpacePtr space) {
  return {"identity", space, space, [](const Point& v) { return v; }, 1.0};
}

LipschitzMap scaling_map(SpacePtr space, double c) {
  if (!space->is_normed()) throw InputError("scaling needs a normed space");
  char buf[48];
  std::snprintf(buf, sizeof buf, "scale(%g)", c);
  return {buf, space, space,
          [c](const Point& v) {
            Point out = v;
            for (auto& x : out.coords) x *= c;
            return out;
          },
          std::abs(c)};
}

MapOracle compose(const LipschitzMap& psi, const MapOracle& f) {
  if (psi.source->id() != f.target->id()) {
    throw InputError("cannot compose " + psi.name + " with " + f.name + ": space mismatch");
  }
  MapOracle g;
  g.name = psi.name + "∘" + f.name;
  g.domain = f.domain;
  g.target = psi.target;
  g.eval = [psi, f](std::span<const double> x) { return psi(f(x)); };
  if (f.lipschitz_bound) g.lipschitz_bound = psi.lipschitz * *f.lipschitz_bound;
  return g;
}

StepSchedule StepSchedule::geometric(double h0, std::size_t halvings) {
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw InputError("initial step must be positive");
  StepSchedule s;
  double h = h0;
  for (std::size_t i = 0; i <= halvings; ++i, h *= 0.5) s.steps.push_back(h);
  return s;
}

StepSchedule default_schedule(const MapOracle& f, std::span<const double> x) {
  const double c = f.domain.clearance(x);
  if (!(c > 0.0)) throw ClearanceError("point is not interior to the domain of " + f.name);
  return StepSchedule::geometric(c / 16.0, 8);
}

void require_clearance(const Box& domain, std::span<const double> x,
                       std::span<const double> nu, double max_step) {
  const double need = max_step * euclid_norm(nu);
  const double have = domain.clearance(x);
  if (!(have >= need)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "clearance %.6g from the boundary is below the required %.6g",
                  have, need);
    throw ClearanceError(buf);
  }
}

DerivativeEstimate metric_directional_derivative(const MapOracle& f, std::span<const double> x,
                                                 std::span<const double> nu,
                                                 const StepSchedule& schedule, double tol) {
  check_direction(f, x, nu);
  require_clearance(f.domain, x, nu, schedule.max_step());
  const Point fx = f(x);
  DerivativeEstimate est;
  est.h_schedule = schedule.steps;
  Vec gaps;
  for (double h : schedule.steps) {
    const double fwd = f.target->distance(f(shifted(x, nu, h)), fx) / h;
    const double bwd = f.target->distance(f(shifted(x, nu, -h)), fx) / h;
    est.forward.push_back(fwd);
    est.backward.push_back(bwd);
    est.estimates.push_back(0.5 * (fwd + bwd));
    gaps.push_back(std::abs(fwd - bwd));
  }
  for (std::size_t i = 1; i < est.estimates.size(); ++i) {
    est.successive_diffs.push_back(std::abs(est.estimates[i] - est.estimates[i - 1]));
  }
  est.value = est.estimates.back();
  const bool settled = est.successive_diffs.empty() || est.successive_diffs.back() <= tol;
  est.converged = settled && sides_agree(gaps, tol);
  return est;
}

bool TruncatedFunctional::diagnostics_ok() const {
  return std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
}

TruncatedFunctional directional_pairings(const MapOracle& f,
                                         std::span<const ScalarFunctional> functionals,
                                         std::span<const double> x, std::span<const double> nu,
                                         const StepSchedule& schedule, double tol) {
  check_direction(f, x, nu);
  require_clearance(f.domain, x, nu, schedule.max_step());
  const auto K = functionals.size();
  const auto S = schedule.steps.size();
  const Point fx = f(x);

  // central[k*S + i], gap[k*S + i]
  Vec central(K * S), gap(K * S);
  for (std::size_t i = 0; i < S; ++i) {
    const double h = schedule.steps[i];
    const Point fp = f(shifted(x, nu, h));
    const Point fm = f(shifted(x, nu, -h));
#pragma omp parallel for schedule(static)
    for (long kl = 0; kl < static_cast<long>(K); ++kl) {
      const auto k = static_cast<std::size_t>(kl);
      const auto& phi = functionals[k];
      const double vp = phi(fp), v0 = phi(fx), vm = phi(fm);
      central[k * S + i] = (vp - vm) / (2.0 * h);
      gap[k * S + i] = std::abs((vp - v0) / h - (v0 - vm) / h);
    }
  }

  TruncatedFunctional w;
  w.pairings.resize(K);
  w.converged.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double* c = &central[k * S];
    w.pairings[k] = c[S - 1];
    const bool settled = S < 2 || std::abs(c[S - 1] - c[S - 2]) <= tol;
    const Vec gaps(&gap[k * S], &gap[k * S] + S);
    w.converged[k] = settled && sides_agree(gaps, tol);
  }
  return w;
}

TruncatedFunctional truncated_weak_weak_star_derivative(const MapOracle& f,
                                                        const GaugeSequence& g,
                                                        std::span<const double> x,
                                                        std::span<const double> nu,
                                                        const StepSchedule& schedule, double tol) {
  if (g.space().id() != f.target->id()) {
    throw InputError("gauge lives on " + g.space().id() + " but " + f.name + " maps into " +
                     f.target->id());
  }
  std::vector<ScalarFunctional> fs;
  fs.reserve(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) fs.emplace_back([&g, k](const Point& p) { return g[k](p); });
  auto w = directional_pairings(f, fs, x, nu, schedule, tol);
  w.gauge_id = g.id();
  return w;
}

double truncated_norm(const TruncatedFunctional& w, std::optional<std::size_t> K) {
  const auto n = std::min(K.value_or(w.pairings.size()), w.pairings.size());
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::abs(w.pairings[k]));
  return m;
}

TruncatedFunctional combine(std::span<const TruncatedFunctional> partials,
                            std::span<const double> nu) {
  if (partials.size() != nu.size() || partials.empty()) {
    throw InputError("combine: one partial functional per direction component required");
  }
  const auto K = partials.front().size();
  TruncatedFunctional w;
  w.gauge_id = partials.front().gauge_id;
  w.pairings.assign(K, 0.0);
  w.converged.assign(K, 1);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (partials[j].size() != K) throw InputError("combine: partials differ in length");
      s += partials[j].pairings[k] * nu[j];
      w.converged[k] = w.converged[k] && partials[j].converged[k];
    }
    w.pairings[k] = s;
  }
  return w;
}

LinearQuotientProbe linear_difference_quotient(const MapOracle& f, std::span<const double> x,
                                               std::span<const double> nu,
                                               const StepSchedule& schedule, double tol) {
  check_direction(f, x, nu);
  require_clearance(f.domain, x, nu, schedule.max_step());
  const auto& X = *f.target;
  if (!X.is_normed()) throw InputError("linear quotients need a normed target");
  const Point fx = f(x);
  LinearQuotientProbe probe;
  probe.h_schedule = schedule.steps;
  Vec prev_forward;
  Vec diff(X.dim());
  for (double h : schedule.steps) {
    const Point fp = f(shifted(x, nu, h));
    const Point fm = f(shifted(x, nu, -h));
    Vec fwd(X.dim()), bwd(X.dim());
    for (std::size_t i = 0; i < X.dim(); ++i) {
      fwd[i] = (fp.coords[i] - fx.coords[i]) / h;
      bwd[i] = (fx.coords[i] - fm.coords[i]) / h;
      diff[i] = fwd[i] - bwd[i];
    }
    probe.two_sided_gaps.push_back(X.norm(diff));
    if (!prev_forward.empty()) {
      for (std::size_t i = 0; i < X.dim(); ++i) diff[i] = fwd[i] - prev_forward[i];
      probe.cauchy_diffs.push_back(X.norm(diff));
    }
    prev_forward = std::move(fwd);
  }
  probe.two_sided_converged = sides_agree(probe.two_sided_gaps, tol);
  probe.cauchy_converged = probe.cauchy_diffs.empty() || probe.cauchy_diffs.back() <= tol;
  return probe;
}

CompositionReport composition_check(const MapOracle& f, const LipschitzMap& psi,
                                    const GaugeSequence& gauge_y, std::span<const double> x,
                                    std::span<const double> nu, const StepSchedule& schedule,
                                    double tol) {
  if (psi.source->id() != f.target->id() || psi.target->id() != gauge_y.space().id()) {
    throw InputError("composition_check: spaces of f, psi and gauge do not line up");
  }
  if (psi.target->distance(psi(psi.source->base_point()), psi.target->base_point()) != 0.0) {
    throw InputError("composition_check: " + psi.name + " does not fix the base point");
  }
  const MapOracle composed = compose(psi, f);
  const auto lhs = truncated_weak_weak_star_derivative(composed, gauge_y, x, nu, schedule, tol);

  std::vector<ScalarFunctional> pulled;
  for (std::size_t k = 0; k < gauge_y.size(); ++k) {
    pulled.emplace_back([&gauge_y, &psi, k](const Point& v) { return gauge_y[k](psi(v)); });
  }
  const auto rhs = directional_pairings(f, pulled, x, nu, schedule, tol);
  const auto md = metric_directional_derivative(f, x, nu, schedule, tol);

  CompositionReport r;
  r.composed_pairings = lhs.pairings;
  r.pulled_pairings = rhs.pairings;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    r.max_identity_defect =
        std::max(r.max_identity_defect, std::abs(lhs.pairings[k] - rhs.pairings[k]));
  }
  r.composed_norm = truncated_norm(lhs);
  r.metric_derivative = md.value;
  r.norm_inequality_defect = std::max(0.0, r.composed_norm - psi.lipschitz * md.value);
  r.converged = lhs.diagnostics_ok() && rhs.diagnostics_ok() && md.converged;
  return r;
}

LocalityReport locality_check(const MapOracle& f1, const MapOracle& f2, const Box& E,
                              const GaugeSequence& gauge, std::span<const Point> test_points,
                              const StepSchedule& schedule, double tol) {
  if (f1.dim() != f2.dim() || f1.target->id() != f2.target->id()) {
    throw InputError("locality_check: maps must share domain dimension and target");
  }
  const auto n = f1.dim();
  if (E.dim() != n) throw InputError("locality_check: E has the wrong dimension");

  // Premise: f1 == f2 on a 9^n lattice over E and at the test points inside E.
  constexpr std::size_t per_axis = 9;
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= per_axis;
  auto premise_at = [&](std::span<const double> y) {
    if (f1.target->distance(f1(y), f2(y)) != 0.0) {
      throw PremiseError("locality_check: f1 and f2 differ inside E");
    }
  };
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec y(n);
    std::size_t rest = idx;
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = rest % per_axis;
      rest /= per_axis;
      y[j] = E.lo[j] + (E.hi[j] - E.lo[j]) * static_cast<double>(i) / (per_axis - 1);
    }
    premise_at(y);
  }

  LocalityReport r;
  r.max_norm_mismatch.assign(n, 0.0);
  for (std::size_t t = 0; t < test_points.size(); ++t) {
    const auto& x = test_points[t].coords;
    if (x.size() != n) throw InputError("locality_check: test point of wrong dimension");
    if (!(E.clearance(x) >= schedule.max_step())) {
      r.excluded.push_back(t);
      continue;
    }
    premise_at(x);
    r.evaluated.push_back(t);
    for (std::size_t j = 0; j < n; ++j) {
      Vec e(n, 0.0);
      e[j] = 1.0;
      const double a = truncated_norm(truncated_weak_weak_star_derivative(f1, gauge, x, e, schedule, tol));
      const double b = truncated_norm(truncated_weak_weak_star_derivative(f2, gauge, x, e, schedule, tol));
      r.max_norm_mismatch[j] = std::max(r.max_norm_mismatch[j], std::abs(a - b));
    }
  }
  return r;
}

}  // namespace mdlab
