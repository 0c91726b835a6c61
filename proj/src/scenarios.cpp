#include "mdlab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mdlab/error.hpp"
#include "mdlab/seminorm.hpp"
#include "mdlab/sobolev.hpp"

namespace mdlab {

namespace {

using std::numbers::pi;

double euclid(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

/// |J nu| for a Jacobian given by rows.
AnalyticMd jacobian_md(Jacobian J) {
  return [J](std::span<const double> x, std::span<const double> nu) {
    const auto rows = J(x);
    Vec image(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < nu.size(); ++j) image[i] += rows[i][j] * nu[j];
    }
    return euclid(image);
  };
}

std::size_t bit_reverse(std::size_t i, std::size_t bits) {
  std::size_t r = 0;
  for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
  return r;
}

MapOracle linear_map(std::string name, std::vector<Vec> A, SpacePtr target) {
  const auto n = A.front().size();
  MapOracle f;
  f.name = std::move(name);
  f.domain = Box{Vec(n, -1.0), Vec(n, 1.0)};
  f.target = std::move(target);
  f.eval = [A](std::span<const double> x) {
    Vec y(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
    }
    return Point(std::move(y));
  };
  return f;
}

Scenario s1_linear_euclidean() {
  const std::vector<Vec> A = {{1.0, 0.0}, {0.0, 2.0}};
  Scenario s;
  s.name = "S1-linear-euclidean";
  s.description = "f(x) = diag(1,2) x into euclidean(2)";
  s.map = linear_map("diag(1,2)", A, MetricSpace::euclidean(2));
  s.map.lipschitz_bound = 2.0;
  s.jacobian = [A](std::span<const double>) { return A; };
  s.analytic_md = jacobian_md(*s.jacobian);
  s.analytic_md_formula = "|A nu|_2, A = diag(1,2)";
  s.md_tol = 1e-6;
  s.points = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}, {0.6, 0.6}, {-0.25, -0.7}};
  s.linear = true;
  s.exact_radius = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  return s;
}

Scenario s1_linear_linf() {
  const std::vector<Vec> A = {{1.0, 0.5}, {-0.3, 2.0}};
  Scenario s;
  s.name = "S1-linear-linf";
  s.description = "f(x) = [[1,0.5],[-0.3,2]] x into lp(2,inf)";
  s.map = linear_map("A_inf", A, MetricSpace::lp(2, Exponent::infinity()));
  s.map.lipschitz_bound = 2.3;
  s.jacobian = [A](std::span<const double>) { return A; };
  s.analytic_md = [A](std::span<const double>, std::span<const double> nu) {
    return std::max(std::abs(A[0][0] * nu[0] + A[0][1] * nu[1]),
                    std::abs(A[1][0] * nu[0] + A[1][1] * nu[1]));
  };
  s.analytic_md_formula = "|A nu|_inf";
  s.md_tol = 1e-6;
  s.points = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}, {0.6, 0.6}, {-0.25, -0.7}};
  s.linear = true;
  s.exact_radius = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  return s;
}

Scenario s2_abs() {
  Scenario s;
  s.name = "S2-abs";
  s.description = "f(t) = |t| into euclidean(1); metric but not linearly differentiable at 0";
  s.map.name = "abs";
  s.map.domain = Box{{-1.0}, {1.0}};
  s.map.target = MetricSpace::euclidean(1);
  s.map.eval = [](std::span<const double> x) { return Point{std::abs(x[0])}; };
  s.map.lipschitz_bound = 1.0;
  s.analytic_md = [](std::span<const double>, std::span<const double> nu) { return std::abs(nu[0]); };
  s.analytic_md_formula = "|nu|";
  s.jacobian = [](std::span<const double> x) { return std::vector<Vec>{{x[0] > 0 ? 1.0 : -1.0}}; };
  s.fd_tol = 1e-3;
  s.points = {{0.0}, {0.3}, {-0.4}, {0.55}, {-0.7}, {0.15}};
  // Quotients are exact until the step reaches the kink.
  s.exact_radius = [](std::span<const double> x) {
    return x[0] == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(x[0]);
  };
  return s;
}

Scenario s3_l1_curve() {
  constexpr std::size_t cells = 1024;
  Scenario s;
  s.name = "S3-l1-curve";
  s.description = "t -> indicator of [0,t] in discretized L^1(0,1), 1024 cells; isometric curve";
  s.map.name = "l1-curve";
  s.map.domain = Box{{0.0}, {1.0}};
  s.map.target = MetricSpace::discretized_lebesgue(cells, Exponent::finite(1.0), 1.0);
  s.map.eval = [](std::span<const double> x) {
    Vec v(cells);
    const double w = 1.0 / static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      v[i] = std::clamp((x[0] - static_cast<double>(i) * w) / w, 0.0, 1.0);
    }
    return Point(std::move(v));
  };
  s.map.lipschitz_bound = 1.0;
  s.analytic_md = [](std::span<const double>, std::span<const double> nu) { return std::abs(nu[0]); };
  s.analytic_md_formula = "|nu|";
  s.fd_tol = 1e-3;
  s.md_tol = 1e-6;
  s.points = {{0.2}, {0.35}, {0.45}, {0.65}, {0.8}};
  s.exact_radius = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  return s;
}

Scenario s4_rank_deficient() {
  Scenario s;
  s.name = "S4-rank-deficient";
  s.description = "f(x1,x2) = x1 into euclidean(1); md vanishes on span(e2)";
  s.map = linear_map("first-coordinate", {{1.0, 0.0}}, MetricSpace::euclidean(1));
  s.map.lipschitz_bound = 1.0;
  s.jacobian = [](std::span<const double>) { return std::vector<Vec>{{1.0, 0.0}}; };
  s.analytic_md = [](std::span<const double>, std::span<const double> nu) { return std::abs(nu[0]); };
  s.analytic_md_formula = "|nu_1|";
  s.md_tol = 1e-6;
  s.points = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}, {0.6, 0.6}, {-0.25, -0.7}};
  s.linear = true;
  s.exact_radius = [](std::span<const double>) { return std::numeric_limits<double>::infinity(); };
  return s;
}

Scenario s5_kuratowski_curve() {
  constexpr std::size_t anchors = 16;
  Scenario s;
  s.name = "S5-kuratowski-curve";
  s.description =
      "half circle t -> (cos pi t, sin pi t) composed with the 16-anchor Kuratowski embedding into lp(16,inf)";
  s.map.name = "kuratowski-curve";
  s.map.domain = Box{{0.0}, {1.0}};
  s.map.target = MetricSpace::lp(anchors, Exponent::infinity());
  s.map.eval = [](std::span<const double> x) {
    const double c = std::cos(pi * x[0]), sn = std::sin(pi * x[0]);
    Vec v(anchors);
    for (std::size_t k = 0; k < anchors; ++k) {
      const double sk = static_cast<double>(k) / (anchors - 1);
      const double ax = std::cos(pi * sk), ay = std::sin(pi * sk);
      v[k] = std::hypot(ax - c, ay - sn) - 1.0;  // |anchor| = 1
    }
    return Point(std::move(v));
  };
  s.map.lipschitz_bound = pi;
  // d/dt |gamma(s_k) - gamma(t)| = -pi cos(pi (s_k - t) / 2) sign(s_k - t).
  s.analytic_md = [](std::span<const double> x, std::span<const double> nu) {
    double m = 0.0;
    for (std::size_t k = 0; k < anchors; ++k) {
      const double sk = static_cast<double>(k) / (anchors - 1);
      m = std::max(m, pi * std::cos(0.5 * pi * std::abs(sk - x[0])));
    }
    return m * std::abs(nu[0]);
  };
  s.analytic_md_formula = "pi max_k cos(pi |s_k - t| / 2) |nu|";
  s.points = {{0.23}, {0.41}, {0.5}, {0.62}, {0.79}};
  return s;
}

Scenario s6_sqrt_spike() {
  Scenario s;
  s.name = "S6-sqrt-spike";
  s.description = "f(x) = sign(x) sqrt|x| into euclidean(1); Sobolev for p < 2, not Lipschitz";
  s.map.name = "signed-sqrt";
  s.map.domain = Box{{-1.0}, {1.0}};
  s.map.target = MetricSpace::euclidean(1);
  s.map.eval = [](std::span<const double> x) {
    return Point{std::copysign(std::sqrt(std::abs(x[0])), x[0])};
  };
  s.jacobian = [](std::span<const double> x) {
    return std::vector<Vec>{{0.5 / std::sqrt(std::abs(x[0]))}};
  };
  s.analytic_md = [](std::span<const double> x, std::span<const double> nu) {
    return std::abs(nu[0]) * 0.5 / std::sqrt(std::abs(x[0]));
  };
  s.analytic_md_formula = "|nu| / (2 sqrt|x|), x != 0";
  s.gradient_majorant = [](std::span<const double> x, double grid_h) {
    const double cap = 0.5 / std::sqrt(grid_h);
    return x[0] == 0.0 ? cap : std::min(cap, 0.5 / std::sqrt(std::abs(x[0])));
  };
  s.fd_tol = 1e-3;
  s.points = {{0.1}, {0.25}, {-0.3}, {0.5}, {-0.6}};
  return s;
}

MapOracle warp_map() {
  // Smooth perturbation of the identity with Jacobian determinant >= 1 - (pi/4)^2 > 0.
  MapOracle f;
  f.name = "warp";
  f.domain = Box{{-1.0, -1.0}, {1.0, 1.0}};
  f.target = MetricSpace::euclidean(2);
  f.eval = [](std::span<const double> x) {
    return Point{x[0] + 0.25 * std::sin(pi * x[1]), x[1] + 0.25 * std::sin(pi * x[0])};
  };
  f.lipschitz_bound = 1.0 + 0.25 * pi;
  return f;
}

Jacobian warp_jacobian() {
  return [](std::span<const double> x) {
    return std::vector<Vec>{{1.0, 0.25 * pi * std::cos(pi * x[1])},
                            {0.25 * pi * std::cos(pi * x[0]), 1.0}};
  };
}

Scenario s7_truncated_warp() {
  Scenario s;
  s.name = "S7-truncated-warp";
  s.description = "pi_R o (1.5 warp) into euclidean(2) with R = 1; composition pairs psi o f";
  MapOracle base = warp_map();
  const auto inner = base.eval;
  base.name = "1.5warp";
  base.eval = [inner](std::span<const double> x) {
    Point p = inner(x);
    for (auto& c : p.coords) c *= 1.5;
    return p;
  };
  base.lipschitz_bound = 1.5 * *base.lipschitz_bound;
  const auto Y = base.target;
  s.compositions = {identity_map(Y), scaling_map(Y, 0.5), radial_truncation_map(Y, 1.0),
                    radial_truncation_map(Y, 100.0)};
  s.map = compose(s.compositions[2], base);
  s.composition_base = base;
  s.points = {{0.1, 0.1}, {-0.2, 0.15}, {0.5, 0.4}, {-0.6, -0.5}, {0.3, -0.7}};
  return s;
}

Scenario s8_smooth_warp() {
  Scenario s;
  s.name = "S8-smooth-warp";
  s.description = "f(x) = (x1 + sin(pi x2)/4, x2 + sin(pi x1)/4) into euclidean(2)";
  s.map = warp_map();
  s.jacobian = warp_jacobian();
  s.analytic_md = jacobian_md(*s.jacobian);
  s.analytic_md_formula = "|Df(x) nu|_2";
  s.md_tol = 0.0;  // reported only
  s.w1p_plateau = true;
  s.points = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}, {0.6, 0.6}, {-0.25, -0.7}};
  return s;
}

Scenario s9_surface() {
  Scenario s;
  s.name = "S9-surface-r3";
  s.description = "f(x) = (x1, x2, x1^2/2 + x1 x2) into euclidean(3)";
  s.map.name = "surface";
  s.map.domain = Box{{-1.0, -1.0}, {1.0, 1.0}};
  s.map.target = MetricSpace::euclidean(3);
  s.map.eval = [](std::span<const double> x) {
    return Point{x[0], x[1], 0.5 * x[0] * x[0] + x[0] * x[1]};
  };
  s.map.lipschitz_bound = std::sqrt(1.0 + 1.0 + 9.0);
  s.jacobian = [](std::span<const double> x) {
    return std::vector<Vec>{{1.0, 0.0}, {0.0, 1.0}, {x[0] + x[1], x[0]}};
  };
  s.analytic_md = jacobian_md(*s.jacobian);
  s.analytic_md_formula = "|Df(x) nu|_2";
  s.md_tol = 0.0;  // reported only
  s.points = {{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}, {0.6, 0.6}, {-0.25, -0.7}};
  return s;
}

}  // namespace

const std::vector<Scenario>& catalog() {
  static const std::vector<Scenario> scenarios = {
      s1_linear_euclidean(), s1_linear_linf(),   s2_abs(),         s3_l1_curve(),
      s4_rank_deficient(),   s5_kuratowski_curve(), s6_sqrt_spike(), s7_truncated_warp(),
      s8_smooth_warp(),      s9_surface(),
  };
  return scenarios;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& s : catalog()) names.push_back(s.name);
  return names;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : catalog()) {
    if (s.name == name) return s;
  }
  std::string msg = "unknown scenario '" + name + "'; available:";
  for (const auto& n : scenario_names()) msg += " " + n;
  throw ConfigError(msg);
}

std::vector<Point> ring_sample(const MapOracle& f, std::span<const double> x, std::size_t K,
                               double radius) {
  if (K == 0) throw InputError("ring_sample: K must be >= 1");
  const auto n = f.dim();
  std::vector<Vec> offsets;
  if (n == 1) {
    const std::size_t pairs = std::max<std::size_t>((K + 1) / 2, 16);
    for (std::size_t k = 0; k < K; ++k) {
      const double r = radius * (1.0 - static_cast<double>(k / 2) / (2.0 * static_cast<double>(pairs)));
      offsets.push_back({k % 2 == 0 ? r : -r});
    }
  } else {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < std::max<std::size_t>(K, 32)) ++bits;
    const std::size_t half = std::size_t{1} << bits;
    // Upper half of the 2*half fan (n = 2) or the z > 0 cap of a Fibonacci sphere (n = 3).
    const auto fan = direction_fan(n, 2 * half);
    for (std::size_t k = 0; k < K; ++k) {
      Vec d = fan[bit_reverse(k, bits)];
      for (auto& c : d) c *= radius;
      offsets.push_back(std::move(d));
    }
  }
  std::vector<Point> out;
  for (const auto& o : offsets) {
    Vec y(x.begin(), x.end());
    for (std::size_t j = 0; j < n; ++j) y[j] += o[j];
    out.push_back(f(y));
  }
  return out;
}

GaugeSequence ring_gauge(const MapOracle& f, std::span<const double> x, std::size_t K,
                         double fraction) {
  const double c = f.domain.clearance(x);
  if (!(c > 0.0)) throw ClearanceError("ring_gauge: point is not interior");
  return build_kuratowski_gauge(f.target, ring_sample(f, x, K, c * fraction));
}

std::vector<Point> grid_image_sample(const MapOracle& f, std::size_t per_axis) {
  if (per_axis < 2) throw InputError("grid_image_sample: need >= 2 nodes per axis");
  const auto n = f.dim();
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= per_axis;
  std::vector<Point> out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec y(n);
    std::size_t rest = idx;
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = rest % per_axis;
      rest /= per_axis;
      y[j] = f.domain.lo[j] +
             (f.domain.hi[j] - f.domain.lo[j]) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
    }
    out.push_back(f(y));
  }
  return out;
}

}  // namespace mdlab
