#include "mdlab/lab.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "mdlab/error.hpp"
#include "mdlab/linear_target.hpp"
#include "mdlab/seminorm.hpp"
#include "mdlab/sobolev.hpp"

namespace mdlab {

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// config parsing

using json = nlohmann::json;

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError("config: section '" + where + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) {
      std::string msg = "config: unknown key '" + k + "' in '" + where + "'; allowed:";
      for (const auto& a : allowed) msg += " " + a;
      throw ConfigError(msg);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: '") + where + "." + key + "' has the wrong type");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, std::optional<T>& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, where, v);
  out = v;
}

// ---------------------------------------------------------------------------
// small utilities

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Runs fn(i) for i < n on the worker pool and joins; the first exception is rethrown.
template <class F>
auto parallel_map(std::size_t n, F&& fn) {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const int workers = worker_count();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      slots[i].emplace(fn(static_cast<std::size_t>(i)));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<std::string> axis_columns(const char* prefix, std::size_t n) {
  std::vector<std::string> c;
  for (std::size_t j = 0; j < n; ++j) c.push_back(prefix + std::to_string(j + 1));
  return c;
}

void append(Vec& row, std::span<const double> v) { row.insert(row.end(), v.begin(), v.end()); }

Vec offset(std::span<const double> x, std::span<const double> nu, double h) {
  Vec y(x.begin(), x.end());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] += h * nu[j];
  return y;
}

/// per_axis^n vertex lattice over a box, first axis fastest.
std::vector<Vec> lattice(const Box& b, std::size_t per_axis) {
  const auto n = b.dim();
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= per_axis;
  std::vector<Vec> out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec y(n);
    std::size_t rest = idx;
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = rest % per_axis;
      rest /= per_axis;
      y[j] = b.lo[j] + (b.hi[j] - b.lo[j]) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
    }
    out.push_back(std::move(y));
  }
  return out;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// suite context

struct Context {
  const Scenario& s;
  const LabConfig& c;
  std::vector<Vec> points;
  double tol;
  std::vector<Vec> fan;
  ExperimentReport& r;

  const MapOracle& f() const { return s.map; }
  std::size_t n() const { return s.map.dim(); }

  StepSchedule schedule(std::span<const double> x) const {
    const double cl = f().domain.clearance(x);
    if (!(cl > 0.0)) throw ClearanceError("point is not interior to the domain of " + f().name);
    return StepSchedule::geometric(cl * c.h0_fraction, c.halvings);
  }
  GaugeSequence gauge(std::span<const double> x, std::size_t K) const {
    return ring_gauge(f(), x, K, c.ring_fraction);
  }
  std::size_t max_K() const {
    std::size_t k = c.K;
    for (auto a : c.audit_K) k = std::max(k, a);
    return k;
  }
  Vec radii(std::span<const double> x, std::size_t count) const {
    Vec out;
    double r0 = f().domain.clearance(x) * c.h0_fraction;
    for (std::size_t i = 0; i < count; ++i, r0 *= 0.5) out.push_back(r0);
    return out;
  }

  void check(const std::string& name, double measured, double tolerance, const char* relation) const {
    Assertion a{name, measured, tolerance, relation, false};
    a.pass = a.relation == "<=" ? measured <= tolerance : measured >= tolerance;
    r.assertions.push_back(std::move(a));
  }
  Table& table(std::string name, std::vector<std::string> columns) const {
    r.tables.push_back(Table{std::move(name), std::move(columns), {}});
    return r.tables.back();
  }
  std::vector<std::string> point_columns() const {
    std::vector<std::string> c{"point"};
    for (auto& a : axis_columns("x", n())) c.push_back(a);
    return c;
  }
  Vec point_row(std::size_t i) const {
    Vec row{static_cast<double>(i)};
    append(row, points[i]);
    return row;
  }
};

// ---------------------------------------------------------------------------
// suites

void suite_axioms(const Context& ctx) {
  const auto scalars = default_scalars();
  struct Row {
    SeminormAxiomReport fitted;
    std::optional<SeminormAxiomReport> analytic;
    bool converged;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto fit = fit_metric_differential(ctx.f(), ctx.gauge(x, ctx.c.K), x, ctx.schedule(x), ctx.tol);
    Row row{seminorm_axiom_check(fit.sigma, ctx.fan, scalars), {}, fit.converged};
    if (ctx.s.analytic_md) {
      const auto& md = *ctx.s.analytic_md;
      row.analytic = seminorm_axiom_check([&](std::span<const double> nu) { return md(x, nu); },
                                          ctx.fan, scalars);
    }
    return row;
  });

  auto cols = ctx.point_columns();
  for (const char* c : {"converged", "homogeneity", "subadditivity", "min_value"}) cols.push_back(c);
  if (ctx.s.analytic_md) {
    cols.push_back("analytic_homogeneity");
    cols.push_back("analytic_subadditivity");
  }
  auto& t = ctx.table("seminorm_axioms", cols);
  double hom = 0, sub = 0, minv = kInf, ahom = 0, asub = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i];
    Vec row = ctx.point_row(i);
    append(row, Vec{a.converged ? 1.0 : 0.0, a.fitted.max_homogeneity_defect,
                    a.fitted.max_subadditivity_defect, a.fitted.min_value});
    hom = std::max(hom, a.fitted.max_homogeneity_defect);
    sub = std::max(sub, a.fitted.max_subadditivity_defect);
    minv = std::min(minv, a.fitted.min_value);
    if (a.analytic) {
      append(row, Vec{a.analytic->max_homogeneity_defect, a.analytic->max_subadditivity_defect});
      ahom = std::max(ahom, a.analytic->max_homogeneity_defect);
      asub = std::max(asub, a.analytic->max_subadditivity_defect);
    }
    t.rows.push_back(std::move(row));
  }
  ctx.check("seminorm_homogeneity", hom, 1e-12, "<=");
  ctx.check("seminorm_subadditivity", sub, 1e-12, "<=");
  ctx.check("seminorm_min_value", minv, 0.0, ">=");
  if (ctx.s.analytic_md) {
    ctx.check("analytic_md_homogeneity", ahom, 1e-12, "<=");
    ctx.check("analytic_md_subadditivity", asub, 1e-12, "<=");
  }

  // Target metric axioms and the declared Lipschitz bound on a lattice of the domain.
  const auto nodes = lattice(ctx.f().domain, ctx.n() == 1 ? 9 : 5);
  std::vector<Point> images;
  for (const auto& y : nodes) images.push_back(ctx.f()(y));
  images.push_back(ctx.f().target->base_point());
  const auto ax = validate_metric_axioms(*ctx.f().target, images);
  auto& mt = ctx.table("target_axioms", {"triples", "identity", "symmetry", "triangle"});
  mt.rows.push_back({static_cast<double>(ax.triples), ax.max_identity_defect, ax.max_symmetry_defect,
                     ax.max_triangle_defect});
  ctx.check("target_identity", ax.max_identity_defect, 1e-12, "<=");
  ctx.check("target_symmetry", ax.max_symmetry_defect, 1e-12, "<=");
  ctx.check("target_triangle", ax.max_triangle_defect, 1e-12, "<=");

  if (ctx.f().lipschitz_bound) {
    double q = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        q = std::max(q, ctx.f().target->distance(images[i], images[j]) /
                            kernels::node_distance(nodes[i], nodes[j]));
      }
    }
    auto& lt = ctx.table("lipschitz_bound", {"declared", "sampled_max_quotient"});
    lt.rows.push_back({*ctx.f().lipschitz_bound, q});
    ctx.check("lipschitz_bound_excess", q - *ctx.f().lipschitz_bound, 1e-8, "<=");
  }
}

void suite_md_consistency(const Context& ctx) {
  const bool has_md = static_cast<bool>(ctx.s.analytic_md);
  struct Row {
    FittedSeminorm fit;
    ConsistencyReport cons;
    Vec analytic;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto sch = ctx.schedule(x);
    auto fit = fit_metric_differential(ctx.f(), ctx.gauge(x, ctx.c.K), x, sch, ctx.tol);
    auto cons = directional_consistency(ctx.f(), fit.sigma, x, ctx.fan, sch, ctx.tol);
    Vec analytic;
    if (has_md) {
      for (const auto& nu : ctx.fan) analytic.push_back((*ctx.s.analytic_md)(x, nu));
    }
    return Row{std::move(fit), std::move(cons), std::move(analytic)};
  });

  std::vector<std::string> fcols{"point"};
  for (auto& a : axis_columns("nu", ctx.n())) fcols.push_back(a);
  fcols.push_back("sigma_fit");
  fcols.push_back("md_fd");
  if (has_md) fcols.push_back("md_analytic");
  auto& ft = ctx.table("md_fan", fcols);

  auto pcols = ctx.point_columns();
  for (const char* c : {"fit_converged", "md_converged", "gap_md_fd"}) pcols.push_back(c);
  if (has_md) pcols.push_back("gap_analytic");
  auto& pt = ctx.table("md_points", pcols);

  double worst = 0.0;
  std::vector<std::size_t> excluded;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    double gap = 0.0;
    for (std::size_t d = 0; d < ctx.fan.size(); ++d) {
      Vec r{static_cast<double>(i)};
      append(r, ctx.fan[d]);
      r.push_back(row.cons.sigma_values[d]);
      r.push_back(row.cons.metric_derivatives[d]);
      if (has_md) {
        r.push_back(row.analytic[d]);
        gap = std::max(gap, std::abs(row.cons.sigma_values[d] - row.analytic[d]));
      }
      ft.rows.push_back(std::move(r));
    }
    Vec r = ctx.point_row(i);
    append(r, Vec{row.fit.converged ? 1.0 : 0.0, row.cons.converged ? 1.0 : 0.0, row.cons.max_gap});
    if (has_md) r.push_back(gap);
    pt.rows.push_back(std::move(r));
    if (row.fit.converged) {
      worst = std::max(worst, gap);
    } else {
      excluded.push_back(i);
    }
  }
  ctx.r.notes["nonconverged_fit_points"] = excluded;
  if (has_md && ctx.s.md_tol > 0.0) {
    ctx.check("analytic_fan_gap", worst, ctx.s.md_tol, "<=");
    ctx.check("points_compared", static_cast<double>(rows.size() - excluded.size()), 1.0, ">=");
  }
}

void suite_norm_identity(const Context& ctx) {
  auto Ks = ctx.c.audit_K;
  std::sort(Ks.begin(), Ks.end());
  const auto Kmax = ctx.max_K();
  const std::vector<double> ts = {-2.0, -1.0, 0.5, 3.0};
  struct Row {
    bool included = false;
    std::vector<Vec> tn;  // [direction][K]
    Vec md, md_neg;
    double excess = -kInf, monotone = 0.0, evenness = 0.0, homogeneity = 0.0;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto sch = ctx.schedule(x);
    const auto g = ctx.gauge(x, Kmax);
    const auto fit = fit_metric_differential(ctx.f(), g, x, sch, ctx.tol);
    Row row;
    bool ok = fit.converged;
    for (const auto& nu : ctx.fan) {
      const auto w = combine(fit.partials, nu);
      const auto md = metric_directional_derivative(ctx.f(), x, nu, sch, ctx.tol);
      Vec neg(nu);
      for (auto& v : neg) v = -v;
      const auto mdn = metric_directional_derivative(ctx.f(), x, neg, sch, ctx.tol);
      ok = ok && md.converged && mdn.converged;
      Vec tn;
      double prev_deficit = kInf;
      for (auto K : Ks) {
        const double v = truncated_norm(w, std::min(K, w.size()));
        tn.push_back(v);
        const double deficit = md.value - v;
        row.excess = std::max(row.excess, -deficit);
        if (prev_deficit < kInf) row.monotone = std::max(row.monotone, deficit - prev_deficit);
        prev_deficit = deficit;
      }
      row.excess = std::max(row.excess, truncated_norm(w) - md.value);
      row.evenness = std::max(row.evenness, std::abs(md.value - mdn.value));
      row.tn.push_back(std::move(tn));
      row.md.push_back(md.value);
      row.md_neg.push_back(mdn.value);

      const auto base = truncated_weak_weak_star_derivative(ctx.f(), g, x, nu, sch, ctx.tol);
      for (double t : ts) {
        Vec tnu(nu);
        for (auto& v : tnu) v *= t;
        const auto scaled = truncated_weak_weak_star_derivative(ctx.f(), g, x, tnu, sch, ctx.tol);
        for (std::size_t k = 0; k < scaled.size(); ++k) {
          row.homogeneity = std::max(row.homogeneity, std::abs(scaled.pairings[k] - t * base.pairings[k]));
        }
      }
    }
    row.included = ok;
    return row;
  });

  auto& t = ctx.table("norm_identity", {"point", "direction", "K", "truncated_norm", "md", "deficit"});
  auto pcols = ctx.point_columns();
  for (const char* c : {"included", "max_excess", "max_monotonicity_violation", "evenness_defect",
                        "pairing_homogeneity_defect"}) {
    pcols.push_back(c);
  }
  auto& pt = ctx.table("norm_points", pcols);
  double excess = -kInf, monotone = 0.0, evenness = 0.0;
  std::vector<std::size_t> excluded;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    for (std::size_t d = 0; d < ctx.fan.size(); ++d) {
      for (std::size_t k = 0; k < Ks.size(); ++k) {
        t.rows.push_back({static_cast<double>(i), static_cast<double>(d), static_cast<double>(Ks[k]),
                          row.tn[d][k], row.md[d], row.md[d] - row.tn[d][k]});
      }
    }
    Vec r = ctx.point_row(i);
    append(r, Vec{row.included ? 1.0 : 0.0, row.excess, row.monotone, row.evenness, row.homogeneity});
    pt.rows.push_back(std::move(r));
    if (!row.included) {
      excluded.push_back(i);
      continue;
    }
    excess = std::max(excess, row.excess);
    monotone = std::max(monotone, row.monotone);
    evenness = std::max(evenness, row.evenness);
  }
  ctx.r.notes["nonconverged_points"] = excluded;
  if (excluded.size() == rows.size()) excess = 0.0;
  ctx.check("truncation_excess", excess, ctx.tol, "<=");
  ctx.check("deficit_monotonicity", monotone, 1e-9, "<=");
  ctx.check("md_evenness", evenness, ctx.tol, "<=");
}

void suite_first_order(const Context& ctx) {
  const bool has_md = static_cast<bool>(ctx.s.analytic_md);
  struct Row {
    ResidualReport fitted;
    std::optional<ResidualReport> analytic;
    double gauge_gap = 0.0;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto radii = ctx.radii(x, ctx.c.radii);
    const auto g = ctx.gauge(x, ctx.c.K);
    const auto fit = fit_metric_differential(ctx.f(), g, x, ctx.schedule(x), ctx.tol);
    Row row{first_order_residual(ctx.f(), [&](std::span<const double> nu) { return fit.sigma(nu); },
                                 x, radii, ctx.fan, ctx.tol),
            {}, 0.0};
    if (has_md) {
      row.analytic = first_order_residual(
          ctx.f(), [&](std::span<const double> nu) { return (*ctx.s.analytic_md)(x, nu); }, x, radii,
          ctx.fan, ctx.tol);
    }
    // Gauge underestimation of the distances the residual sees at the smallest radius.
    std::vector<std::pair<Point, Point>> pairs;
    const Point fx = ctx.f()(x);
    for (const auto& nu : ctx.fan) pairs.emplace_back(fx, ctx.f()(offset(x, nu, radii.back())));
    const std::size_t Ks[] = {ctx.c.K};
    const auto audit = gauge_quality_audit(g, pairs, Ks);
    row.gauge_gap = audit.rows.front().max_relative_underestimate;
    return row;
  });

  std::vector<std::string> cols{"point", "radius", "fitted_residual"};
  if (has_md) cols.push_back("analytic_residual");
  auto& t = ctx.table("residuals", cols);
  auto pcols = ctx.point_columns();
  for (const char* c : {"fitted_plateau", "fitted_nonincreasing", "gauge_gap"}) pcols.push_back(c);
  if (has_md) {
    pcols.push_back("analytic_last");
    pcols.push_back("analytic_vanishing");
  }
  auto& pt = ctx.table("first_order_points", pcols);

  double exact = 0.0;
  std::size_t exact_points = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    for (std::size_t k = 0; k < row.fitted.radii.size(); ++k) {
      Vec r{static_cast<double>(i), row.fitted.radii[k], row.fitted.max_residual[k]};
      if (has_md) r.push_back(row.analytic->max_residual[k]);
      t.rows.push_back(std::move(r));
    }
    Vec r = ctx.point_row(i);
    append(r, Vec{row.fitted.max_residual.back(), row.fitted.nonincreasing ? 1.0 : 0.0, row.gauge_gap});
    if (has_md) append(r, Vec{row.analytic->max_residual.back(), row.analytic->vanishing ? 1.0 : 0.0});
    pt.rows.push_back(std::move(r));
    if (has_md && ctx.s.exact_radius && row.fitted.radii.front() <= ctx.s.exact_radius(ctx.points[i])) {
      ++exact_points;
      for (double v : row.analytic->max_residual) exact = std::max(exact, v);
    }
  }
  if (has_md && ctx.s.exact_radius) {
    ctx.check("exact_md_residual", exact, 1e-10, "<=");
    ctx.check("exact_points", static_cast<double>(exact_points), 1.0, ">=");
  }
}

/// Steps for the norm-quotient probe. In discretized L^p every step spans at least two cells,
/// so the probe sees the curve and not its piecewise-linear interpolation inside a cell.
StepSchedule probe_schedule(const Context& ctx, std::span<const double> x) {
  const auto* k = std::get_if<DiscretizedLebesgueKind>(&ctx.f().target->kind());
  if (!k) return ctx.schedule(x);
  const double cell = k->length / static_cast<double>(k->cells);
  StepSchedule s;
  double h = ctx.f().domain.clearance(x) / 4.0;
  for (std::size_t i = 0; i <= ctx.c.halvings && h >= 2.0 * cell; ++i, h *= 0.5) s.steps.push_back(h);
  if (s.steps.size() < 2) throw ClearanceError("probe: not enough room for two steps of two cells");
  return s;
}

void suite_derivative_probes(const Context& ctx) {
  const bool normed = ctx.f().target->is_normed();
  struct Axis {
    DerivativeEstimate md;
    std::optional<LinearQuotientProbe> probe;
    double probe_h0 = 0.0;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    std::vector<Axis> axes;
    for (std::size_t j = 0; j < ctx.n(); ++j) {
      Vec e(ctx.n(), 0.0);
      e[j] = 1.0;
      Axis a{metric_directional_derivative(ctx.f(), x, e, ctx.schedule(x), ctx.tol), {}, 0.0};
      if (normed) {
        const auto ps = probe_schedule(ctx, x);
        a.probe = linear_difference_quotient(ctx.f(), x, e, ps, ctx.tol);
        a.probe_h0 = ps.max_step();
      }
      axes.push_back(std::move(a));
    }
    return axes;
  });

  auto cols = ctx.point_columns();
  for (const char* c : {"axis", "md", "md_converged", "md_two_sided_gap"}) cols.push_back(c);
  if (normed) {
    for (const char* c : {"probe_h0", "probe_steps", "two_sided_gap", "two_sided_converged",
                          "cauchy_first", "cauchy_last", "cauchy_converged"}) {
      cols.push_back(c);
    }
  }
  auto& t = ctx.table("probes", cols);
  double exact = 0.0;
  std::size_t nonconverged = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const auto& a = rows[i][j];
      Vec r = ctx.point_row(i);
      append(r, Vec{static_cast<double>(j), a.md.value, a.md.converged ? 1.0 : 0.0,
                    std::abs(a.md.forward.back() - a.md.backward.back())});
      if (a.probe) {
        const auto& p = *a.probe;
        append(r, Vec{a.probe_h0, static_cast<double>(p.h_schedule.size()), p.two_sided_gaps.back(),
                      p.two_sided_converged ? 1.0 : 0.0, p.cauchy_diffs.empty() ? 0.0 : p.cauchy_diffs.front(),
                      p.cauchy_diffs.empty() ? 0.0 : p.cauchy_diffs.back(), p.cauchy_converged ? 1.0 : 0.0});
      }
      t.rows.push_back(std::move(r));
      if (!a.md.converged) ++nonconverged;
      if (ctx.s.analytic_md && ctx.s.exact_radius &&
          a.md.h_schedule.front() <= ctx.s.exact_radius(ctx.points[i])) {
        Vec e(ctx.n(), 0.0);
        e[j] = 1.0;
        exact = std::max(exact, std::abs(a.md.value - (*ctx.s.analytic_md)(ctx.points[i], e)));
      }
    }
  }
  ctx.r.notes["nonconverged_metric_derivatives"] = nonconverged;
  if (ctx.s.analytic_md && ctx.s.exact_radius) ctx.check("exact_md_value", exact, 1e-10, "<=");
}

std::vector<LipschitzMap> compositions_for(const Scenario& s) {
  if (!s.compositions.empty()) return s.compositions;
  const auto Y = s.map.target;
  if (Y->is_normed()) return {identity_map(Y), scaling_map(Y, 0.5)};
  return {identity_map(Y)};
}

void suite_composition(const Context& ctx) {
  const auto psis = compositions_for(ctx.s);
  const MapOracle base = ctx.s.composition_base ? *ctx.s.composition_base : ctx.s.map;
  std::vector<MapOracle> composed;
  for (const auto& psi : psis) composed.push_back(compose(psi, base));
  using Rows = std::vector<std::vector<CompositionReport>>;  // [psi][direction]
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto sch = ctx.schedule(x);
    Rows out;
    for (std::size_t q = 0; q < psis.size(); ++q) {
      const auto gy = ring_gauge(composed[q], x, ctx.c.K, ctx.c.ring_fraction);
      std::vector<CompositionReport> per;
      for (const auto& nu : ctx.fan) per.push_back(composition_check(base, psis[q], gy, x, nu, sch, ctx.tol));
      out.push_back(std::move(per));
    }
    return out;
  });

  auto& t = ctx.table("composition", {"point", "psi", "direction", "identity_defect", "composed_norm", "lip",
                                      "metric_derivative", "inequality_defect", "converged"});
  ordered_json names = ordered_json::array();
  for (const auto& p : psis) names.push_back(p.name);
  ctx.r.notes["psi"] = names;
  for (std::size_t q = 0; q < psis.size(); ++q) {
    double ident = 0.0, ineq = 0.0;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t d = 0; d < ctx.fan.size(); ++d) {
        const auto& c = rows[i][q][d];
        t.rows.push_back({static_cast<double>(i), static_cast<double>(q), static_cast<double>(d),
                          c.max_identity_defect, c.composed_norm, psis[q].lipschitz, c.metric_derivative,
                          c.norm_inequality_defect, c.converged ? 1.0 : 0.0});
        if (!c.converged) {
          ++skipped;
          continue;
        }
        ident = std::max(ident, c.max_identity_defect);
        ineq = std::max(ineq, c.norm_inequality_defect);
      }
    }
    ctx.r.notes["nonconverged[" + psis[q].name + "]"] = skipped;
    ctx.check("identity_defect[" + psis[q].name + "]", ident, 1e-9, "<=");
    ctx.check("norm_inequality_defect[" + psis[q].name + "]", ineq, 1e-6, "<=");
  }
}

void suite_locality(const Context& ctx) {
  const auto& dom = ctx.f().domain;
  Box E{dom.lo, dom.hi};
  for (std::size_t j = 0; j < ctx.n(); ++j) {
    const double w = dom.hi[j] - dom.lo[j];
    E.lo[j] = dom.lo[j] + 0.25 * w;
    E.hi[j] = dom.hi[j] - 0.25 * w;
  }
  // f2 agrees with f on E and is frozen at the nearest point of E outside it.
  MapOracle f2 = ctx.f();
  f2.name = ctx.f().name + "|E";
  const auto f1 = ctx.f();
  f2.eval = [f1, E](std::span<const double> x) {
    Vec y(x.begin(), x.end());
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = std::clamp(y[j], E.lo[j], E.hi[j]);
    return f1(y);
  };
  const auto c = E.center();
  std::vector<Point> tests;
  for (const auto& x : ctx.points) tests.emplace_back(x);
  tests.emplace_back(c);
  Vec near(E.lo);
  for (std::size_t j = 0; j < near.size(); ++j) near[j] += 1e-3 * (E.hi[j] - E.lo[j]);
  tests.emplace_back(near);
  const auto gauge = ctx.gauge(c, ctx.c.K);
  const auto sch = StepSchedule::geometric(E.clearance(c) * ctx.c.h0_fraction, ctx.c.halvings);
  const auto rep = locality_check(ctx.f(), f2, E, gauge, tests, sch, ctx.tol);

  auto cols = ctx.point_columns();
  cols.push_back("evaluated");
  auto& t = ctx.table("locality_points", cols);
  for (std::size_t i = 0; i < tests.size(); ++i) {
    Vec r{static_cast<double>(i)};
    append(r, tests[i].coords);
    r.push_back(std::count(rep.evaluated.begin(), rep.evaluated.end(), i) ? 1.0 : 0.0);
    t.rows.push_back(std::move(r));
  }
  auto& mt = ctx.table("locality_mismatch", {"axis", "max_norm_mismatch"});
  double worst = 0.0;
  for (std::size_t j = 0; j < rep.max_norm_mismatch.size(); ++j) {
    mt.rows.push_back({static_cast<double>(j), rep.max_norm_mismatch[j]});
    worst = std::max(worst, rep.max_norm_mismatch[j]);
  }
  ctx.r.notes["subbox"] = {{"lo", E.lo}, {"hi", E.hi}};
  ctx.r.notes["excluded_test_points"] = rep.excluded;
  ctx.check("max_norm_mismatch", worst, ctx.tol, "<=");
  ctx.check("evaluated_points", static_cast<double>(rep.evaluated.size()), 1.0, ">=");
}

void suite_w1p(const Context& ctx) {
  const auto ball = Grid::unit_ball(ctx.n(), ctx.c.ball_grid);
  const bool has_md = static_cast<bool>(ctx.s.analytic_md);
  struct Job {
    std::size_t point;
    double p;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < ctx.points.size(); ++i) {
    for (double p : ctx.c.p_values) jobs.push_back({i, p});
  }
  struct Row {
    W1pDifferentiabilityReport fitted;
    std::optional<W1pDifferentiabilityReport> analytic;
    double plateau = 0.0;
  };
  const auto rows = parallel_map(jobs.size(), [&](std::size_t q) {
    const auto& x = ctx.points[jobs[q].point];
    const double p = jobs[q].p;
    Vec hs;
    double h = std::min(ctx.c.w1p_h0, ctx.f().domain.clearance(x));
    for (std::size_t i = 0; i <= ctx.c.w1p_halvings; ++i, h *= 0.5) hs.push_back(h);
    const auto fit = fit_metric_differential(ctx.f(), ctx.gauge(x, ctx.c.K), x, ctx.schedule(x), ctx.tol);
    const auto sigma = [&](std::span<const double> nu) { return fit.sigma(nu); };
    Row row{w1p_differentiability_check(ctx.f(), sigma, x, p, hs, ball, ctx.tol), {}, 0.0};
    if (has_md) {
      const auto md = [&](std::span<const double> nu) { return (*ctx.s.analytic_md)(x, nu); };
      row.analytic = w1p_differentiability_check(ctx.f(), md, x, p, hs, ball, ctx.tol);
      const auto gap = GridFunction::tabulate(ball, [&](std::span<const double> nu) { return md(nu) - sigma(nu); });
      row.plateau = w1p_norm(gap, p).total;
    }
    return row;
  });

  std::vector<std::string> cols{"point", "p", "sigma", "h", "lp_part"};
  for (auto& a : axis_columns("grad", ctx.n())) cols.push_back(a);
  cols.push_back("total");
  cols.push_back("excluded_nodes");
  auto& t = ctx.table("w1p", cols);
  std::vector<std::string> pcols{"point", "p", "fitted_final", "fitted_max_increase"};
  if (has_md) {
    pcols.push_back("gauge_gap_plateau");
    pcols.push_back("analytic_final");
  }
  auto& pt = ctx.table("w1p_points", pcols);
  const auto emit = [&](std::size_t i, double p, double kind, const W1pDifferentiabilityReport& w) {
    for (std::size_t k = 0; k < w.h_schedule.size(); ++k) {
      const auto& nr = w.norms[k];
      Vec r{static_cast<double>(i), p, kind, w.h_schedule[k], nr.lp_part};
      append(r, nr.gradient_parts);
      r.push_back(nr.total);
      r.push_back(static_cast<double>(w.excluded_nodes[k]));
      t.rows.push_back(std::move(r));
    }
  };
  double exact = 0.0;
  std::size_t exact_values = 0;
  struct PlateauCheck {
    double increase = 0.0;
    double final = 0.0, plateau = 0.0;  // at the point where final - plateau is largest
    bool seen = false;
  };
  std::map<double, PlateauCheck> plateau_checks;
  for (std::size_t q = 0; q < jobs.size(); ++q) {
    const auto& row = rows[q];
    const auto i = jobs[q].point;
    const double p = jobs[q].p;
    emit(i, p, 0.0, row.fitted);
    if (row.analytic) emit(i, p, 1.0, *row.analytic);
    const auto tot = row.fitted.totals();
    double increase = 0.0;
    for (std::size_t k = 1; k < tot.size(); ++k) increase = std::max(increase, tot[k] - tot[k - 1]);
    Vec r{static_cast<double>(i), p, tot.back(), increase};
    if (has_md) append(r, Vec{row.plateau, row.analytic->totals().back()});
    pt.rows.push_back(std::move(r));

    if (row.analytic && ctx.s.exact_radius) {
      const double er = ctx.s.exact_radius(ctx.points[i]);
      const auto at = row.analytic->totals();
      for (std::size_t k = 0; k < at.size(); ++k) {
        if (row.analytic->h_schedule[k] < er) {
          exact = std::max(exact, at[k]);
          ++exact_values;
        }
      }
    }
    if (ctx.s.w1p_plateau && has_md) {
      auto& pc = plateau_checks[p];
      pc.increase = std::max(pc.increase, increase);
      if (!pc.seen || tot.back() - row.plateau > pc.final - pc.plateau) {
        pc.final = tot.back();
        pc.plateau = row.plateau;
        pc.seen = true;
      }
    }
  }
  if (has_md && ctx.s.exact_radius) {
    ctx.check("exact_eta_norm", exact, 1e-10, "<=");
    ctx.check("exact_values", static_cast<double>(exact_values), 1.0, ">=");
  }
  for (const auto& [p, pc] : plateau_checks) {
    const std::string tag = "[p=" + fmt_g(p) + "]";
    ctx.check("fitted_tail_increase" + tag, pc.increase, 0.0, "<=");
    ctx.check("fitted_final_vs_plateau" + tag, pc.final, pc.plateau, "<=");
  }
}

/// Majorant of |grad f| on a grid: the scenario's own, else its Lipschitz bound.
std::optional<GridFunction> majorant(const Context& ctx, const GridPtr& grid) {
  if (ctx.s.gradient_majorant) {
    const double hg = grid->min_spacing();
    const auto& m = *ctx.s.gradient_majorant;
    return GridFunction::tabulate(grid, [&](std::span<const double> x) { return m(x, hg); });
  }
  if (ctx.f().lipschitz_bound) {
    const double L = *ctx.f().lipschitz_bound;
    return GridFunction::tabulate(grid, [L](std::span<const double>) { return L; });
  }
  return std::nullopt;
}

GridPtr domain_grid(const Context& ctx, std::size_t per_axis) {
  const auto& d = ctx.f().domain;
  return Grid::box(d.lo, d.hi, std::vector<std::size_t>(ctx.n(), per_axis));
}

void radial_truncation_pairs(const Context& ctx, const SpacePtr& space, const std::string& label) {
  std::mt19937_64 rng(ctx.c.seed);
  const double Rs[] = {0.5, 1.0, 2.0};
  double lip = -kInf, norm_excess = -kInf;
  std::size_t not_idempotent = 0;
  for (std::size_t k = 0; k < ctx.c.truncation_pairs; ++k) {
    const double R = Rs[k % 3];
    Vec u(space->dim()), v(space->dim());
    for (auto& c : u) c = uniform(rng, -2.0, 2.0);
    for (auto& c : v) c = uniform(rng, -2.0, 2.0);
    const Point pu(u), pv(v);
    const auto tu = radial_truncation(*space, pu, R);
    const auto tv = radial_truncation(*space, pv, R);
    lip = std::max(lip, space->distance(tu, tv) - 2.0 * space->distance(pu, pv));
    norm_excess = std::max({norm_excess, space->norm(tu.coords) - R, space->norm(tv.coords) - R});
    if (!(radial_truncation(*space, tu, R) == tu)) ++not_idempotent;
  }
  auto& t = ctx.table("radial_truncation_" + label, {"pairs", "max_lipschitz_excess", "max_norm_excess",
                                                     "not_idempotent"});
  t.rows.push_back({static_cast<double>(ctx.c.truncation_pairs), lip, norm_excess,
                    static_cast<double>(not_idempotent)});
  ctx.check("radial_truncation_lipschitz[" + label + "]", lip, 1e-12, "<=");
  ctx.check("radial_truncation_norm[" + label + "]", norm_excess, 0.0, "<=");
  ctx.check("radial_truncation_idempotent[" + label + "]", static_cast<double>(not_idempotent), 0.0, "<=");
}

void suite_maximal_restriction(const Context& ctx) {
  const std::size_t per_axis = ctx.c.restriction_nodes ? ctx.c.restriction_nodes : (ctx.n() == 1 ? 1025 : 33);
  const auto grid = domain_grid(ctx, per_axis);
  const auto h = majorant(ctx, grid);
  if (h) {
    const auto M = maximal_function(*h);
    double dominance = -kInf, minM = kInf;
    auto mcols = axis_columns("x", ctx.n());
    mcols.push_back("h");
    mcols.push_back("Mh");
    auto& mt = ctx.table("maximal", mcols);
    for (std::size_t i = 0; i < grid->size(); ++i) {
      dominance = std::max(dominance, std::abs(h->values[i]) - M.values[i]);
      minM = std::min(minM, M.values[i]);
      Vec r(grid->node(i).begin(), grid->node(i).end());
      r.push_back(h->values[i]);
      r.push_back(M.values[i]);
      mt.rows.push_back(std::move(r));
    }
    ctx.check("maximal_dominates", dominance, 0.0, "<=");

    const double t0 = ctx.c.t0 ? *ctx.c.t0 : (minM > 0.0 ? 2.0 * minM : 1.0);
    Vec ts;
    for (std::size_t i = 0; i <= ctx.c.t_doublings; ++i) ts.push_back(t0 * std::ldexp(1.0, static_cast<int>(i)));
    const auto res = lipschitz_restriction_schedule(ctx.f(), *h, ts, 1.0);

    std::vector<std::string> cols{"t", "kept", "excluded", "lipschitz_constant", "measure_excluded"};
    for (double p : ctx.c.p_values) cols.push_back("product_p" + fmt_g(p));
    cols.push_back("degenerate");
    auto& t = ctx.table("restriction", cols);
    std::size_t nesting = 0;
    double increase = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto& rr = res[i];
      Vec row{rr.t, static_cast<double>(rr.kept_nodes.size()), static_cast<double>(rr.excluded_nodes.size()),
              rr.empirical_lipschitz_constant, rr.measure_excluded};
      for (double p : ctx.c.p_values) row.push_back(std::pow(rr.empirical_lipschitz_constant, p) * rr.measure_excluded);
      row.push_back(rr.degenerate ? 1.0 : 0.0);
      t.rows.push_back(std::move(row));
      if (i > 0) {
        const auto& prev = res[i - 1].excluded_nodes;
        for (auto node : rr.excluded_nodes) {
          if (!std::binary_search(prev.begin(), prev.end(), node)) ++nesting;
        }
        if (!rr.degenerate && !res[i - 1].degenerate) {
          increase = std::max(increase, rr.lip_measure_product - res[i - 1].lip_measure_product);
        }
      }
    }
    ctx.r.notes["t0"] = t0;
    ctx.check("nesting_violations", static_cast<double>(nesting), 0.0, "<=");
    ctx.check("lip_measure_increase[p=1]", increase, 0.0, "<=");
    if (!ctx.s.gradient_majorant) {
      // Constant majorant L: Mh == L < t, nothing is excluded and the kept constant is the global one.
      ctx.check("kept_constant_excess", res.back().empirical_lipschitz_constant - *ctx.f().lipschitz_bound,
                1e-8, "<=");
    }
  } else {
    ctx.r.notes["restriction"] = "skipped: no gradient majorant or Lipschitz bound";
  }

  radial_truncation_pairs(ctx, MetricSpace::euclidean(3), "euclidean(3)");
  if (ctx.f().target->is_normed()) radial_truncation_pairs(ctx, ctx.f().target, "target");
}

void suite_reshetnyak(const Context& ctx) {
  const std::size_t per_axis = ctx.n() == 1 ? 129 : 33;
  const auto grid = domain_grid(ctx, per_axis);
  const auto h = majorant(ctx, grid);
  const auto sample = grid_image_sample(ctx.f(), ctx.n() == 1 ? 9 : 5);
  const auto gauge = build_kuratowski_gauge(ctx.f().target, sample);
  if (!h) {
    ctx.r.notes["reshetnyak"] = "skipped: no gradient majorant or Lipschitz bound";
    return;
  }
  const auto rep = reshetnyak_gradient_check(ctx.f(), *h, gauge, ctx.tol);
  auto cols = axis_columns("x", ctx.n());
  cols.push_back("g");
  cols.push_back("g_canonical");
  auto& t = ctx.table("upper_gradient", cols);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    Vec r(grid->node(i).begin(), grid->node(i).end());
    r.push_back(h->values[i]);
    r.push_back(rep.canonical.values[i]);
    t.rows.push_back(std::move(r));
  }
  auto& st = ctx.table("reshetnyak_summary", {"nodes_checked", "nodes_skipped", "violating_nodes", "max_violation",
                                              "below_canonical", "max_canonical", "integration_by_parts_defect"});
  st.rows.push_back({static_cast<double>(rep.nodes_checked), static_cast<double>(rep.nodes_skipped),
                     static_cast<double>(rep.violating_nodes), rep.max_violation,
                     static_cast<double>(rep.below_canonical), rep.max_canonical, rep.integration_by_parts_defect});
  ctx.r.notes["gauge_anchors"] = gauge.size();
  ctx.check("violating_nodes", static_cast<double>(rep.violating_nodes), 0.0, "<=");
  ctx.check("nodes_checked", static_cast<double>(rep.nodes_checked), 1.0, ">=");
}

void suite_dual_recovery(const Context& ctx) {
  const auto Y = ctx.f().target;
  if (!Y->is_normed()) {
    ctx.r.notes["dual_recovery"] = "skipped: target is not normed";
    return;
  }
  const auto* leb = std::get_if<DiscretizedLebesgueKind>(&Y->kind());
  const bool euclid = std::holds_alternative<EuclideanKind>(Y->kind());
  const auto* lp = std::get_if<LpKind>(&Y->kind());
  const bool coordinate_exact = (euclid && Y->dim() == 1) || (lp && lp->p.is_infinite());

  // The set used for md recovery: coordinate functionals, plus a dense fan or finest steps.
  std::optional<DualTestSet> rich;
  std::optional<DualTestSet> coord;
  if (!leb) {
    coord = coordinate_duals(Y);
    rich = *coord;
    if (euclid && (Y->dim() == 2 || Y->dim() == 3) && ctx.c.dual_directions > 0) {
      rich = coord->merged(direction_duals(Y, ctx.c.dual_directions));
    }
  } else {
    rich = step_duals(Y, *std::max_element(ctx.c.dual_blocks.begin(), ctx.c.dual_blocks.end()));
  }
  const bool recovery_exact = coordinate_exact || leb || (euclid && Y->dim() == 2);
  const auto random = leb ? step_duals(Y, ctx.c.dual_blocks.front()) : random_duals(Y, 16, ctx.c.seed);

  struct Row {
    double entry_error = -1.0;
    double dual_fit_gap = 0.0, dual_excess = -kInf, enlargement = 0.0;
    Vec step_sup;
    WeakStarResidualReport ws;
    bool converged = true;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto sch = ctx.schedule(x);
    Row row;
    if (coord) {
      const auto G = dual_gradient(ctx.f(), *coord, x, sch, ctx.tol);
      row.converged = row.converged && G.diagnostics_ok();
      if (ctx.s.jacobian) {
        const auto J = (*ctx.s.jacobian)(x);
        row.entry_error = 0.0;
        for (std::size_t k = 0; k < G.rows; ++k) {
          for (std::size_t j = 0; j < G.cols; ++j) row.entry_error = std::max(row.entry_error, std::abs(G.at(k, j) - J[k][j]));
        }
      }
      if (rich->size() > coord->size()) {
        const auto GR = dual_gradient(ctx.f(), *rich, x, sch, ctx.tol);
        for (const auto& nu : ctx.fan) {
          row.enlargement = std::max(row.enlargement, md_from_dual(G, *coord, nu) - md_from_dual(GR, *rich, nu));
        }
      }
    }
    const auto GR = dual_gradient(ctx.f(), *rich, x, sch, ctx.tol);
    row.converged = row.converged && GR.diagnostics_ok();
    const auto fit = fit_metric_differential(ctx.f(), ctx.gauge(x, ctx.c.K), x, sch, ctx.tol);
    for (const auto& nu : ctx.fan) {
      const double m = md_from_dual(GR, *rich, nu);
      row.dual_fit_gap = std::max(row.dual_fit_gap, std::abs(m - fit.sigma(nu)));
      const auto md = metric_directional_derivative(ctx.f(), x, nu, sch, ctx.tol);
      row.dual_excess = std::max(row.dual_excess, m - md.value);
    }
    if (leb) {
      for (auto m : ctx.c.dual_blocks) {
        const auto D = step_duals(Y, m);
        const auto G = dual_gradient(ctx.f(), D, x, sch, ctx.tol);
        const Vec plus{1.0};
        row.step_sup.push_back(md_from_dual(G, D, plus));
      }
    }
    const auto Gr = dual_gradient(ctx.f(), random, x, sch, ctx.tol);
    const auto radii = ctx.radii(x, 4);
    row.ws = weak_star_residual(ctx.f(), Gr, random, x, radii, ctx.fan);
    return row;
  });

  auto cols = ctx.point_columns();
  for (const char* c : {"converged", "entry_error", "dual_fit_gap", "dual_excess", "enlargement_violation"}) {
    cols.push_back(c);
  }
  auto& t = ctx.table("dual_points", cols);
  auto& wt = ctx.table("weak_star_residual", {"point", "radius", "max_residual"});
  double entry = 0.0, gap = 0.0, excess = -kInf, enlarge = 0.0, ws_max = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    Vec r = ctx.point_row(i);
    append(r, Vec{row.converged ? 1.0 : 0.0, row.entry_error, row.dual_fit_gap, row.dual_excess, row.enlargement});
    t.rows.push_back(std::move(r));
    for (std::size_t k = 0; k < row.ws.radii.size(); ++k) {
      wt.rows.push_back({static_cast<double>(i), row.ws.radii[k], row.ws.max_residual[k]});
      ws_max = std::max(ws_max, row.ws.max_residual[k]);
    }
    entry = std::max(entry, row.entry_error);
    enlarge = std::max(enlarge, row.enlargement);
    if (row.converged) {
      gap = std::max(gap, row.dual_fit_gap);
      excess = std::max(excess, row.dual_excess);
    }
  }
  ctx.r.notes["recovery_set"] = rich->label;
  ctx.r.notes["residual_set"] = random.label;
  if (coord && ctx.s.jacobian) {
    if (ctx.s.linear) {
      ctx.check("coordinate_entry_error", entry, 1e-9, "<=");
    } else {
      ctx.r.notes["coordinate_entry_error"] = entry;
    }
  }
  ctx.check("dual_excess", excess == -kInf ? 0.0 : excess, ctx.tol, "<=");
  ctx.check("dual_enlargement_violation", enlarge, 0.0, "<=");
  if (ctx.s.analytic_md && ctx.s.md_tol > 0.0 && recovery_exact) {
    ctx.check("dual_vs_fit_gap", gap, 1e-3, "<=");
  } else {
    ctx.r.notes["dual_vs_fit_gap"] = gap;
  }
  if (ctx.s.linear) ctx.check("weak_star_residual_linear", ws_max, 1e-9, "<=");

  if (leb) {
    std::vector<std::string> scols{"point"};
    for (auto m : ctx.c.dual_blocks) scols.push_back("sup_m" + std::to_string(m));
    auto& st = ctx.table("step_duals", scols);
    Vec mins(ctx.c.dual_blocks.size(), kInf);
    double worsening = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Vec r{static_cast<double>(i)};
      append(r, rows[i].step_sup);
      st.rows.push_back(std::move(r));
      for (std::size_t k = 0; k < mins.size(); ++k) {
        mins[k] = std::min(mins[k], rows[i].step_sup[k]);
        if (k > 0) worsening = std::max(worsening, rows[i].step_sup[k - 1] - rows[i].step_sup[k]);
      }
    }
    for (std::size_t k = 0; k < mins.size(); ++k) {
      const auto m = ctx.c.dual_blocks[k];
      ctx.check("step_dual_sup[m=" + std::to_string(m) + "]", mins[k], 1.0 - 1.0 / static_cast<double>(m), ">=");
    }
    ctx.check("step_dual_worsening", worsening, 1e-12, "<=");
  }
}

void suite_gauge_audit(const Context& ctx) {
  auto Ks = ctx.c.audit_K;
  Ks.push_back(ctx.c.K);
  std::sort(Ks.begin(), Ks.end());
  Ks.erase(std::unique(Ks.begin(), Ks.end()), Ks.end());
  const auto Kmax = Ks.back();
  const auto far = grid_image_sample(ctx.f(), ctx.n() == 1 ? 9 : 5);
  struct Row {
    GaugeAudit near, global;
    double anchor = 0.0;
  };
  const auto rows = parallel_map(ctx.points.size(), [&](std::size_t i) {
    const auto& x = ctx.points[i];
    const auto g = ctx.gauge(x, Kmax);
    const Point fx = ctx.f()(x);
    std::vector<std::pair<Point, Point>> near, global;
    for (double r : ctx.radii(x, 3)) {
      for (const auto& nu : ctx.fan) near.emplace_back(fx, ctx.f()(offset(x, nu, r)));
    }
    for (std::size_t k = 0; k + 1 < far.size(); ++k) global.emplace_back(far[k], far[k + 1]);
    for (const auto& y : far) global.emplace_back(fx, y);
    Row row{gauge_quality_audit(g, near, Ks), gauge_quality_audit(g, global, Ks), 0.0};
    std::vector<std::pair<Point, Point>> anchors;
    for (std::size_t k = 0; k < g.size(); ++k) anchors.emplace_back(g[k].anchor(), fx);
    const std::size_t full[] = {Kmax};
    row.anchor = gauge_quality_audit(g, anchors, full).rows.front().max_relative_underestimate;
    return row;
  });
  auto& t = ctx.table("audit", {"point", "K", "near_underestimate", "global_underestimate"});
  double monotone = 0.0, anchor = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    for (std::size_t k = 0; k < Ks.size(); ++k) {
      const double a = row.near.rows[k].max_relative_underestimate;
      const double b = row.global.rows[k].max_relative_underestimate;
      t.rows.push_back({static_cast<double>(i), static_cast<double>(Ks[k]), a, b});
      if (k > 0) {
        monotone = std::max({monotone, a - row.near.rows[k - 1].max_relative_underestimate,
                             b - row.global.rows[k - 1].max_relative_underestimate});
      }
    }
    anchor = std::max(anchor, row.anchor);
  }
  ctx.check("audit_monotonicity", monotone, 0.0, "<=");
  ctx.check("anchor_pair_underestimate", anchor, 1e-12, "<=");
}

using SuiteFn = void (*)(const Context&);

const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> s = {
      {"axioms", suite_axioms},
      {"md-consistency", suite_md_consistency},
      {"norm-identity", suite_norm_identity},
      {"first-order", suite_first_order},
      {"derivative-probes", suite_derivative_probes},
      {"composition", suite_composition},
      {"locality", suite_locality},
      {"w1p", suite_w1p},
      {"maximal-restriction", suite_maximal_restriction},
      {"reshetnyak", suite_reshetnyak},
      {"dual-recovery", suite_dual_recovery},
      {"gauge-audit", suite_gauge_audit},
  };
  return s;
}

void validate(const LabConfig& c) {
  if (c.scenario.empty()) throw ConfigError("config: scenario.name is required");
  if (!(c.h0_fraction > 0.0 && c.h0_fraction <= 1.0)) throw ConfigError("config: schedules.h0_fraction must lie in (0, 1]");
  if (c.halvings < 1) throw ConfigError("config: schedules.halvings must be >= 1");
  if (c.K < 1) throw ConfigError("config: gauge.K must be >= 1");
  if (c.audit_K.empty() || std::count(c.audit_K.begin(), c.audit_K.end(), 0u)) {
    throw ConfigError("config: gauge.audit_K must be nonempty and positive");
  }
  if (!(c.ring_fraction > 0.0 && c.ring_fraction <= 1.0)) throw ConfigError("config: gauge.ring_fraction must lie in (0, 1]");
  if (c.tol && !(*c.tol > 0.0)) throw ConfigError("config: tolerance must be positive");
  if (c.radii < 2) throw ConfigError("config: schedules.radii must be >= 2");
  if (!(c.w1p_h0 > 0.0)) throw ConfigError("config: schedules.w1p_h0 must be positive");
  if (c.t0 && !(*c.t0 > 0.0)) throw ConfigError("config: schedules.t0 must be positive");
  if (c.p_values.empty()) throw ConfigError("config: suites.p must be nonempty");
  for (double p : c.p_values) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("config: every p must lie in [1, inf)");
  }
  if (c.ball_grid < 3) throw ConfigError("config: suites.ball_grid must be >= 3");
  if (c.dual_blocks.empty() || std::count(c.dual_blocks.begin(), c.dual_blocks.end(), 0u)) {
    throw ConfigError("config: suites.dual_blocks must be nonempty and positive");
  }
  if (c.truncation_pairs < 1) throw ConfigError("config: suites.truncation_pairs must be >= 1");
  for (const auto& s : c.suites) {
    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
      std::string msg = "unknown suite '" + s + "'; available:";
      for (const auto& n : suite_names()) msg += " " + n;
      throw ConfigError(msg);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

LabConfig LabConfig::from_json(const json& j) {
  require_keys(j, "<top>", {"scenario", "gauge", "schedules", "suites", "seed"});
  LabConfig c;
  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    if (s.is_string()) {
      c.scenario = s.get<std::string>();
    } else {
      require_keys(s, "scenario", {"name", "points"});
      read(s, "name", "scenario", c.scenario);
      read(s, "points", "scenario", c.points);
    }
  }
  if (j.contains("gauge")) {
    const auto& g = j.at("gauge");
    require_keys(g, "gauge", {"K", "ring_fraction", "audit_K"});
    read(g, "K", "gauge", c.K);
    read(g, "ring_fraction", "gauge", c.ring_fraction);
    read(g, "audit_K", "gauge", c.audit_K);
  }
  if (j.contains("schedules")) {
    const auto& s = j.at("schedules");
    require_keys(s, "schedules", {"h0_fraction", "halvings", "tol", "radii", "w1p_h0", "w1p_halvings", "t0",
                                  "t_doublings"});
    read(s, "h0_fraction", "schedules", c.h0_fraction);
    read(s, "halvings", "schedules", c.halvings);
    read(s, "tol", "schedules", c.tol);
    read(s, "radii", "schedules", c.radii);
    read(s, "w1p_h0", "schedules", c.w1p_h0);
    read(s, "w1p_halvings", "schedules", c.w1p_halvings);
    read(s, "t0", "schedules", c.t0);
    read(s, "t_doublings", "schedules", c.t_doublings);
  }
  if (j.contains("suites")) {
    const auto& s = j.at("suites");
    if (s.is_array()) {
      read(j, "suites", "<top>", c.suites);
    } else {
      require_keys(s, "suites", {"run", "p", "ball_grid", "restriction_nodes", "fan", "dual_blocks",
                                 "dual_directions", "truncation_pairs"});
      read(s, "run", "suites", c.suites);
      read(s, "p", "suites", c.p_values);
      read(s, "ball_grid", "suites", c.ball_grid);
      read(s, "restriction_nodes", "suites", c.restriction_nodes);
      read(s, "fan", "suites", c.fan);
      read(s, "dual_blocks", "suites", c.dual_blocks);
      read(s, "dual_directions", "suites", c.dual_directions);
      read(s, "truncation_pairs", "suites", c.truncation_pairs);
    }
  }
  read(j, "seed", "<top>", c.seed);
  return c;
}

LabConfig LabConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

ordered_json LabConfig::to_json() const {
  ordered_json j;
  j["scenario"] = {{"name", scenario}, {"points", points}};
  j["gauge"] = {{"K", K}, {"ring_fraction", ring_fraction}, {"audit_K", audit_K}};
  ordered_json s = {{"h0_fraction", h0_fraction}, {"halvings", halvings}};
  s["tol"] = tol ? ordered_json(*tol) : ordered_json(nullptr);
  s["radii"] = radii;
  s["w1p_h0"] = w1p_h0;
  s["w1p_halvings"] = w1p_halvings;
  s["t0"] = t0 ? ordered_json(*t0) : ordered_json(nullptr);
  s["t_doublings"] = t_doublings;
  j["schedules"] = s;
  j["suites"] = {{"run", suites},           {"p", p_values},
                 {"ball_grid", ball_grid},  {"restriction_nodes", restriction_nodes},
                 {"fan", fan},              {"dual_blocks", dual_blocks},
                 {"dual_directions", dual_directions}, {"truncation_pairs", truncation_pairs}};
  j["seed"] = seed;
  return j;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : suites()) n.push_back(name);
    return n;
  }();
  return names;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += fmt_g(row[i]);
    }
    out += '\n';
  }
  return out;
}

bool ExperimentReport::passed() const { return failures() == 0; }

std::size_t ExperimentReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(assertions.begin(), assertions.end(), [](const Assertion& a) { return !a.pass; }));
}

const Assertion* ExperimentReport::find(const std::string& name) const {
  for (const auto& a : assertions) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const Table* ExperimentReport::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

ordered_json ExperimentReport::to_json() const {
  ordered_json j;
  j["scenario"] = scenario;
  j["suite"] = suite;
  j["status"] = passed() ? "pass" : "fail";
  j["parameters"] = parameters;
  ordered_json as = ordered_json::array();
  for (const auto& a : assertions) {
    as.push_back({{"name", a.name}, {"measured", a.measured}, {"tolerance", a.tolerance},
                  {"relation", a.relation}, {"pass", a.pass}});
  }
  j["assertions"] = as;
  ordered_json ts = ordered_json::array();
  for (const auto& t : tables) {
    ts.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"columns", t.columns}, {"rows", t.rows.size()}});
  }
  j["tables"] = ts;
  j["notes"] = notes;
  j["summary"] = {{"assertions", assertions.size()}, {"failed", failures()}};
  j["versions"] = {{"mdlab", kVersion},
                   {"compiler", __VERSION__},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"openmp", _OPENMP}};
  j["timestamps"] = {{"started", started}, {"finished", finished}, {"seconds", seconds}};
  return j;
}

int worker_count() {
  if (const char* w = std::getenv("MDLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(w, &end, 10);
    if (end != w && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

ExperimentReport run_suite(const LabConfig& config, const std::string& suite) {
  validate(config);
  const auto& s = find_scenario(config.scenario);
  SuiteFn fn = nullptr;
  for (const auto& [name, f] : suites()) {
    if (name == suite) fn = f;
  }
  if (!fn) {
    std::string msg = "unknown suite '" + suite + "'; available:";
    for (const auto& n : suite_names()) msg += " " + n;
    throw ConfigError(msg);
  }
  auto points = config.points.empty() ? s.points : config.points;
  for (const auto& x : points) {
    if (x.size() != s.map.dim()) {
      throw ConfigError("config: point dimension " + std::to_string(x.size()) + " does not match " + s.name);
    }
    if (!(s.map.domain.clearance(x) > 0.0)) throw ConfigError("config: point outside the open domain of " + s.name);
  }

  ExperimentReport r;
  r.scenario = s.name;
  r.suite = suite;
  r.started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = config.tol ? *config.tol : s.fd_tol;
  const std::size_t fan_size = config.fan ? config.fan : default_fan_size(s.map.dim());

  ordered_json params;
  params["description"] = s.description;
  params["target"] = s.map.target->id();
  params["domain"] = {{"lo", s.map.domain.lo}, {"hi", s.map.domain.hi}};
  params["analytic_md"] = s.analytic_md_formula;
  params["tol"] = tol;
  params["md_tol"] = s.md_tol;
  params["fan"] = fan_size;
  params["points"] = points;
  params["config"] = config.to_json();
  r.parameters = params;

  Context ctx{s, config, std::move(points), tol, direction_fan(s.map.dim(), fan_size), r};
  fn(ctx);
  r.finished = utc_now();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<ExperimentReport> run(const LabConfig& config) {
  validate(config);
  const auto& names = config.suites.empty() ? suite_names() : config.suites;
  std::vector<ExperimentReport> out;
  for (const auto& n : names) out.push_back(run_suite(config, n));
  return out;
}

std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& out) {
  const auto dir = out / report.scenario / report.suite;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "report.json", std::ios::binary);
    f << report.to_json().dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  }
  for (const auto& t : report.tables) {
    std::ofstream f(dir / (t.name + ".csv"), std::ios::binary);
    f << t.to_csv();
    if (!f) throw std::runtime_error("cannot write " + (dir / (t.name + ".csv")).string());
  }
  return dir;
}

}  // namespace mdlab
