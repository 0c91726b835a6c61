#include "mdlab/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "mdlab/error.hpp"

namespace mdlab {

// ---------------------------------------------------------------------------
// Grid

void Grid::finalize(const std::function<bool(std::span<const double>)>& keep,
                    const std::function<double(const std::vector<std::size_t>&)>& weight) {
  const auto n = dim();
  std::size_t total = 1;
  for (auto c : counts_) total *= c;
  active_.assign(total, -1);
  std::vector<std::size_t> idx(n, 0);
  Vec x(n);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rest = lin;
    for (std::size_t j = 0; j < n; ++j) {
      idx[j] = rest % counts_[j];
      rest /= counts_[j];
      x[j] = lo_[j] + static_cast<double>(idx[j]) * spacing_[j];
    }
    if (!keep(x)) continue;
    active_[lin] = static_cast<long>(lattice_.size());
    lattice_.push_back(lin);
    coords_.insert(coords_.end(), x.begin(), x.end());
    weights_.push_back(weight(idx));
  }
  if (weights_.empty()) throw InputError("grid has no active nodes");
}

GridPtr Grid::box(Vec lo, Vec hi, std::vector<std::size_t> counts) {
  if (lo.size() != hi.size() || lo.size() != counts.size() || lo.empty()) {
    throw InputError("Grid::box: lo, hi and counts must have equal nonzero length");
  }
  std::shared_ptr<Grid> g(new Grid());
  g->lo_ = lo;
  g->counts_ = counts;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (counts[j] < 2 || !(hi[j] > lo[j])) throw InputError("Grid::box: degenerate axis");
    g->spacing_.push_back((hi[j] - lo[j]) / static_cast<double>(counts[j] - 1));
  }
  const auto* self = g.get();
  g->finalize([](std::span<const double>) { return true; },
              [self](const std::vector<std::size_t>& idx) {
                double w = 1.0;
                for (std::size_t j = 0; j < idx.size(); ++j) {
                  const bool end = idx[j] == 0 || idx[j] + 1 == self->counts_[j];
                  w *= end ? 0.5 * self->spacing_[j] : self->spacing_[j];
                }
                return w;
              });
  return g;
}

GridPtr Grid::unit_ball(std::size_t dim, std::size_t per_axis) {
  if (dim == 0 || per_axis < 3) throw InputError("Grid::unit_ball: need dim >= 1 and >= 3 nodes per axis");
  std::shared_ptr<Grid> g(new Grid());
  const double h = 2.0 / static_cast<double>(per_axis);
  g->ball_ = true;
  g->lo_.assign(dim, -1.0 + 0.5 * h);
  g->spacing_.assign(dim, h);
  g->counts_.assign(dim, per_axis);
  const double w = std::pow(h, static_cast<double>(dim));
  g->finalize(
      [](std::span<const double> x) {
        double s = 0.0;
        for (double c : x) s += c * c;
        return s < 1.0;
      },
      [w](const std::vector<std::size_t>&) { return w; });
  return g;
}

double Grid::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

std::optional<std::size_t> Grid::neighbor(std::size_t i, std::size_t axis, int step) const {
  std::size_t stride = 1;
  for (std::size_t j = 0; j < axis; ++j) stride *= counts_[j];
  const auto lin = lattice_[i];
  const auto pos = (lin / stride) % counts_[axis];
  if (step < 0 && pos == 0) return std::nullopt;
  if (step > 0 && pos + 1 == counts_[axis]) return std::nullopt;
  const auto other = step > 0 ? lin + stride : lin - stride;
  const long a = active_[other];
  if (a < 0) return std::nullopt;
  return static_cast<std::size_t>(a);
}

double Grid::diameter() const {
  double s = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) {
    const double ext = spacing_[j] * static_cast<double>(counts_[j] - 1);
    s += ext * ext;
  }
  return std::sqrt(s);
}

Box Grid::bounds() const {
  Box b{lo_, lo_};
  for (std::size_t j = 0; j < dim(); ++j) b.hi[j] += spacing_[j] * static_cast<double>(counts_[j] - 1);
  return b;
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(GridPtr g, Vec v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw InputError("grid function without a grid");
  if (values.size() != grid->size()) throw InputError("grid function value count mismatch");
  for (double c : values) {
    if (!std::isfinite(c)) throw InputError("grid function values must be finite");
  }
}

GridFunction GridFunction::tabulate(GridPtr g,
                                    const std::function<double(std::span<const double>)>& u) {
  Vec v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(g->node(i));
  return GridFunction(std::move(g), std::move(v));
}

void GridFunction::write_csv(std::ostream& out) const {
  const auto n = grid->dim();
  for (std::size_t j = 0; j < n; ++j) out << 'x' << (j + 1) << ',';
  out << "value\n";
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto x = grid->node(i);
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", x[j]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", values[i]);
    out << buf;
  }
}

GridFunction GridFunction::read_csv(std::istream& in, GridPtr grid) {
  const auto n = grid->dim();
  std::string line;
  if (!std::getline(in, line)) throw InputError("grid CSV: missing header");
  std::string expect;
  for (std::size_t j = 0; j < n; ++j) expect += "x" + std::to_string(j + 1) + ",";
  expect += "value";
  if (line != expect) throw InputError("grid CSV: header '" + line + "' expected '" + expect + "'");
  Vec values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= grid->size()) throw InputError("grid CSV: more rows than grid nodes");
    std::stringstream ss(line);
    std::string cell;
    Vec fields;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') throw InputError("grid CSV: bad number '" + cell + "'");
      fields.push_back(v);
    }
    if (fields.size() != n + 1) throw InputError("grid CSV: wrong column count");
    const auto x = grid->node(row);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(fields[j] - x[j]) > 1e-12) throw InputError("grid CSV: node coordinates do not match grid");
    }
    values.push_back(fields[n]);
    ++row;
  }
  if (row != grid->size()) throw InputError("grid CSV: fewer rows than grid nodes");
  return GridFunction(std::move(grid), std::move(values));
}

// ---------------------------------------------------------------------------
// Norms

Vec grid_partial(const GridFunction& u, std::size_t axis) {
  const auto& g = *u.grid;
  const double h = g.spacing()[axis];
  Vec d(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto plus = g.neighbor(i, axis, +1);
    const auto minus = g.neighbor(i, axis, -1);
    if (plus && minus) {
      d[i] = (u.values[*plus] - u.values[*minus]) / (2.0 * h);
    } else if (plus) {
      d[i] = (u.values[*plus] - u.values[i]) / h;
    } else if (minus) {
      d[i] = (u.values[i] - u.values[*minus]) / h;
    }
  }
  return d;
}

namespace {

double weighted_norm(const Grid& g, std::span<const double> v, double p) {
  double s = 0.0;
  if (p == 1.0) {
    for (std::size_t i = 0; i < v.size(); ++i) s += g.weight(i) * std::abs(v[i]);
    return s;
  }
  if (p == 2.0) {
    for (std::size_t i = 0; i < v.size(); ++i) s += g.weight(i) * v[i] * v[i];
    return std::sqrt(s);
  }
  for (std::size_t i = 0; i < v.size(); ++i) s += g.weight(i) * std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

SobolevNormReport w1p_norm(const GridFunction& u, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("w1p_norm: p must lie in [1, inf)");
  const auto& g = *u.grid;
  for (auto c : g.counts()) {
    if (c < 3) throw InputError("w1p_norm: grid needs at least 3 nodes per axis");
  }
  SobolevNormReport r;
  r.p = p;
  r.lp_part = weighted_norm(g, u.values, p);
  r.total = r.lp_part;
  for (std::size_t j = 0; j < g.dim(); ++j) {
    const double part = weighted_norm(g, grid_partial(u, j), p);
    r.gradient_parts.push_back(part);
    r.total += part;
  }
  return r;
}

GridFunction maximal_function(const GridFunction& u) {
  const auto& g = *u.grid;
  return GridFunction(u.grid, kernels::maximal_function(g.cloud(), u.values, g.min_spacing(),
                                                        g.diameter()));
}

// ---------------------------------------------------------------------------
// Lipschitz restriction

std::vector<RestrictionResult> lipschitz_restriction_schedule(const MapOracle& f,
                                                              const GridFunction& majorant,
                                                              std::span<const double> thresholds,
                                                              double p) {
  const auto& g = *majorant.grid;
  if (g.dim() != f.dim()) throw InputError("lipschitz_restriction: grid and domain dimensions differ");
  for (double v : majorant.values) {
    if (v < 0.0) throw InputError("lipschitz_restriction: majorant must be nonnegative");
  }
  std::vector<Point> images;
  images.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    images.push_back(f(g.node(i)));
    f.target->check_point(images.back().view());
  }
  const auto Mh = maximal_function(majorant);

  std::vector<RestrictionResult> out;
  for (double t : thresholds) {
    if (!(t > 0.0)) throw InputError("lipschitz_restriction: threshold must be positive");
    RestrictionResult r;
    r.t = t;
    r.p = p;
    std::vector<char> kept(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (Mh.values[i] >= t) {
        r.excluded_nodes.push_back(i);
        r.measure_excluded += g.weight(i);
      } else {
        r.kept_nodes.push_back(i);
        kept[i] = 1;
      }
    }
    r.degenerate = r.kept_nodes.empty();
    r.empirical_lipschitz_constant =
        kernels::max_pairwise_quotient(g.cloud(), images, *f.target, kept);
    r.lip_measure_product = std::pow(r.empirical_lipschitz_constant, p) * r.measure_excluded;
    out.push_back(std::move(r));
  }
  return out;
}

RestrictionResult lipschitz_restriction(const MapOracle& f, const GridFunction& majorant,
                                        double t, double p) {
  const double ts[] = {t};
  return lipschitz_restriction_schedule(f, majorant, ts, p).front();
}

// ---------------------------------------------------------------------------
// Radial truncation

Point radial_truncation(const MetricSpace& space, const Point& v, double R) {
  if (!(R > 0.0)) throw InputError("radial_truncation: R must be positive");
  if (!space.is_normed()) throw InputError("radial_truncation: " + space.id() + " is not normed");
  const double nv = space.norm(v.coords);
  if (nv <= R) return v;
  Point out = v;
  double scale = R / nv;
  for (;;) {
    for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] = v.coords[i] * scale;
    if (space.norm(out.coords) <= R) return out;
    scale = std::nextafter(scale, 0.0);
  }
}

LipschitzMap radial_truncation_map(SpacePtr space, double R) {
  if (!space->is_normed()) throw InputError("radial_truncation: " + space->id() + " is not normed");
  char buf[48];
  std::snprintf(buf, sizeof buf, "pi_R(%g)", R);
  return {buf, space, space, [space, R](const Point& v) { return radial_truncation(*space, v, R); },
          2.0};
}

// ---------------------------------------------------------------------------
// Reshetnyak upper gradients

ReshetnyakReport reshetnyak_gradient_check(const MapOracle& f, const GridFunction& g,
                                           const GaugeSequence& gauge, double tol) {
  const auto& grid = *g.grid;
  const auto n = f.dim();
  if (grid.dim() != n) throw InputError("reshetnyak_gradient_check: grid dimension mismatch");
  const auto K = gauge.size();

  ReshetnyakReport r;
  Vec canonical(grid.size(), 0.0);
  // gradient rows per node: grads[i][k*n + j]
  std::vector<Vec> grads(grid.size());
  std::vector<char> used(grid.size(), 0);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.node(i);
    if (!(f.domain.clearance(x) > 0.0)) {
      ++r.nodes_skipped;
      continue;
    }
    const auto schedule = default_schedule(f, x);
    std::vector<TruncatedFunctional> partials;
    bool ok = true;
    for (std::size_t j = 0; j < n; ++j) {
      Vec e(n, 0.0);
      e[j] = 1.0;
      partials.push_back(truncated_weak_weak_star_derivative(f, gauge, x, e, schedule, tol));
      ok = ok && partials.back().diagnostics_ok();
    }
    if (!ok) {
      ++r.nodes_skipped;
      continue;
    }
    ++r.nodes_checked;
    used[i] = 1;
    grads[i].resize(K * n);
    double worst = 0.0, star = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double tn = truncated_norm(partials[j]);
      star += tn * tn;
    }
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = partials[j].pairings[k];
        grads[i][k * n + j] = d;
        s += d * d;
      }
      worst = std::max(worst, std::sqrt(s) - g.values[i]);
    }
    if (worst > tol) ++r.violating_nodes;
    r.max_violation = std::max(r.max_violation, std::max(worst, 0.0));
    canonical[i] = std::sqrt(star);
    r.max_canonical = std::max(r.max_canonical, canonical[i]);
    if (g.values[i] < canonical[i] - tol) ++r.below_canonical;
  }
  r.canonical = GridFunction(g.grid, canonical);

  // Summation-by-parts consistency against a bump vanishing on the grid box.
  if (!grid.is_ball()) {
    const Box b = grid.bounds();
    auto bump = [&](std::span<const double> x, std::optional<std::size_t> deriv_axis) {
      double v = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double L = b.hi[j] - b.lo[j];
        const double a = std::numbers::pi * (x[j] - b.lo[j]) / L;
        v *= (deriv_axis == j) ? (std::numbers::pi / L) * std::sin(2.0 * a) : std::sin(a) * std::sin(a);
      }
      return v;
    };
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto x = grid.node(i);
          const double u = gauge[k](f(x));
          lhs += grid.weight(i) * u * bump(x, j);
          if (used[i]) rhs -= grid.weight(i) * grads[i][k * n + j] * bump(x, std::nullopt);
        }
        r.integration_by_parts_defect = std::max(r.integration_by_parts_defect, std::abs(lhs - rhs));
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Differentiability in the W^{1,p} topology

Vec W1pDifferentiabilityReport::totals() const {
  Vec t;
  for (const auto& n : norms) t.push_back(n.total);
  return t;
}

W1pDifferentiabilityReport w1p_differentiability_check(
    const MapOracle& f, const std::function<double(std::span<const double>)>& sigma,
    std::span<const double> x, double p, std::span<const double> h_schedule, GridPtr ball,
    double tol) {
  if (h_schedule.empty()) throw InputError("w1p_differentiability_check: empty h schedule");
  if (!ball || !ball->is_ball() || ball->dim() != f.dim()) {
    throw InputError("w1p_differentiability_check: needs a unit-ball grid of the domain dimension");
  }
  const double hmax = *std::max_element(h_schedule.begin(), h_schedule.end());
  if (!(f.domain.clearance(x) >= hmax)) {
    throw ClearanceError("w1p_differentiability_check: clearance below the largest h");
  }
  const Point fx = f(x);
  const auto n = f.dim();
  W1pDifferentiabilityReport r;
  r.p = p;
  r.h_schedule.assign(h_schedule.begin(), h_schedule.end());
  for (double h : h_schedule) {
    Vec eta(ball->size(), 0.0);
    std::size_t excluded = 0;
    Vec y(n);
    for (std::size_t i = 0; i < ball->size(); ++i) {
      const auto nu = ball->node(i);
      for (std::size_t j = 0; j < n; ++j) y[j] = x[j] + h * nu[j];
      if (!(f.domain.clearance(y) >= 0.0)) {
        ++excluded;
        continue;
      }
      eta[i] = f.target->distance(f(y), fx) / h - sigma(nu);
    }
    r.norms.push_back(w1p_norm(GridFunction(ball, std::move(eta)), p));
    r.excluded_nodes.push_back(excluded);
  }
  const auto t = r.totals();
  r.nonincreasing_tail = true;
  for (std::size_t i = 1; i < t.size(); ++i) r.nonincreasing_tail = r.nonincreasing_tail && t[i] <= t[i - 1];
  r.below_tol = t.back() <= tol;
  return r;
}

}  // namespace mdlab
