#include "mdlab/linear_target.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <variant>

#include "mdlab/error.hpp"
#include "mdlab/seminorm.hpp"

namespace mdlab {

namespace {

double pairing_weight(const MetricSpace& space) {
  if (const auto* k = std::get_if<DiscretizedLebesgueKind>(&space.kind())) {
    return k->length / static_cast<double>(k->cells);
  }
  return 1.0;
}

void require_normed(const MetricSpace& space, const char* who) {
  if (!space.is_normed()) throw InputError(std::string(who) + ": " + space.id() + " is not normed");
}

}  // namespace

double dual_norm(const MetricSpace& space, std::span<const double> c) {
  require_normed(space, "dual_norm");
  if (c.size() != space.dim()) throw InputError("dual_norm: coefficient length mismatch");
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, EuclideanKind>) {
          return weighted_lp_norm(c, Exponent::finite(2.0), 1.0);
        } else if constexpr (std::is_same_v<K, LpKind>) {
          return weighted_lp_norm(c, k.p.conjugate(), 1.0);
        } else if constexpr (std::is_same_v<K, DiscretizedLebesgueKind>) {
          return weighted_lp_norm(c, k.p.conjugate(), k.length / static_cast<double>(k.cells));
        } else {
          throw InputError("dual_norm: unsupported space");
        }
      },
      space.kind());
}

DualTestSet::DualTestSet(SpacePtr s, std::vector<Vec> fs, std::string l)
    : space(std::move(s)), functionals(std::move(fs)), label(std::move(l)) {
  require_normed(*space, "DualTestSet");
  if (functionals.empty()) throw InputError("DualTestSet: empty functional list");
  for (const auto& c : functionals) {
    const double nrm = dual_norm(*space, c);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InputError("DualTestSet: functional with zero norm");
    norms.push_back(nrm);
  }
}

double DualTestSet::pair(std::size_t k, std::span<const double> v) const {
  const auto& c = functionals[k];
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * v[i];
  return pairing_weight(*space) * s;
}

DualTestSet DualTestSet::merged(const DualTestSet& other) const {
  if (other.space->id() != space->id()) throw InputError("DualTestSet: merging sets on different spaces");
  auto fs = functionals;
  fs.insert(fs.end(), other.functionals.begin(), other.functionals.end());
  return DualTestSet(space, std::move(fs), label + "+" + other.label);
}

DualTestSet coordinate_duals(SpacePtr space) {
  std::vector<Vec> fs;
  for (std::size_t i = 0; i < space->dim(); ++i) {
    Vec c(space->dim(), 0.0);
    c[i] = 1.0;
    fs.push_back(std::move(c));
  }
  return DualTestSet(std::move(space), std::move(fs), "coordinate");
}

DualTestSet direction_duals(SpacePtr space, std::size_t count) {
  auto fan = direction_fan(space->dim(), count);
  return DualTestSet(std::move(space), std::move(fan), "directions(" + std::to_string(count) + ")");
}

DualTestSet random_duals(SpacePtr space, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> fs;
  for (std::size_t k = 0; k < count; ++k) {
    Vec c(space->dim());
    // 53 random bits -> [-1, 1), identical on every platform.
    for (auto& v : c) v = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
    fs.push_back(std::move(c));
  }
  return DualTestSet(std::move(space), std::move(fs), "random(" + std::to_string(seed) + ")");
}

DualTestSet step_duals(SpacePtr space, std::size_t blocks) {
  const auto* k = std::get_if<DiscretizedLebesgueKind>(&space->kind());
  if (!k) throw InputError("step_duals: needs a discretized_lebesgue space");
  if (blocks == 0) throw InputError("step_duals: need at least one block");
  const auto m = k->cells;
  std::vector<Vec> fs;
  for (std::size_t b = 0; b < blocks; ++b) {
    // Block [b/blocks, (b+1)/blocks) in units of the interval; cell i covers [i/m, (i+1)/m).
    const double a0 = static_cast<double>(b) / static_cast<double>(blocks);
    const double a1 = static_cast<double>(b + 1) / static_cast<double>(blocks);
    Vec c(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double c0 = static_cast<double>(i) / static_cast<double>(m);
      const double c1 = static_cast<double>(i + 1) / static_cast<double>(m);
      const double overlap = std::max(0.0, std::min(a1, c1) - std::max(a0, c0));
      c[i] = overlap * static_cast<double>(m);
    }
    Vec neg(c);
    for (auto& v : neg) v = -v;
    fs.push_back(std::move(c));
    fs.push_back(std::move(neg));
  }
  return DualTestSet(std::move(space), std::move(fs), "steps(" + std::to_string(blocks) + ")");
}

bool DualGradient::diagnostics_ok() const {
  return std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
}

DualGradient dual_gradient(const MapOracle& f, const DualTestSet& D, std::span<const double> x,
                           const StepSchedule& schedule, double tol, DualityFlag flag) {
  if (D.space->id() != f.target->id()) {
    throw InputError("dual_gradient: test set lives on " + D.space->id() + ", map targets " +
                     f.target->id());
  }
  std::vector<ScalarFunctional> fs;
  for (std::size_t k = 0; k < D.size(); ++k) {
    fs.emplace_back([&D, k](const Point& v) { return D.pair(k, v.coords); });
  }
  const auto n = f.dim();
  DualGradient G;
  G.rows = D.size();
  G.cols = n;
  G.flag = flag;
  G.entries.assign(G.rows * n, 0.0);
  G.converged.assign(G.rows * n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    const auto w = directional_pairings(f, fs, x, e, schedule, tol);
    for (std::size_t k = 0; k < G.rows; ++k) {
      G.entries[k * n + j] = w.pairings[k];
      G.converged[k * n + j] = w.converged[k];
    }
  }
  return G;
}

double md_from_dual(const DualGradient& G, const DualTestSet& D, std::span<const double> nu) {
  if (nu.size() != G.cols || D.size() != G.rows) throw InputError("md_from_dual: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < G.rows; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < G.cols; ++j) s += G.at(k, j) * nu[j];
    m = std::max(m, std::abs(s) / D.norms[k]);
  }
  return m;
}

WeakStarResidualReport weak_star_residual(const MapOracle& f, const DualGradient& G,
                                          const DualTestSet& D, std::span<const double> x,
                                          std::span<const double> radii,
                                          std::span<const Vec> fan) {
  if (radii.empty()) throw InputError("weak_star_residual: empty radius schedule");
  for (const auto& nu : fan) require_clearance(f.domain, x, nu, radii.front());
  const Point fx = f(x);
  const auto n = f.dim();
  WeakStarResidualReport r;
  r.radii.assign(radii.begin(), radii.end());
  r.per_functional.assign(D.size(), Vec(radii.size(), 0.0));
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double rad = radii[ri];
    double worst = 0.0;
    for (const auto& nu : fan) {
      Vec y(x.begin(), x.end());
      for (std::size_t j = 0; j < n; ++j) y[j] += rad * nu[j];
      const Point fy = f(y);
      Vec diff(fy.coords.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = fy.coords[i] - fx.coords[i];
      for (std::size_t k = 0; k < D.size(); ++k) {
        double lin = 0.0;
        for (std::size_t j = 0; j < n; ++j) lin += G.at(k, j) * nu[j];
        const double res = std::abs(D.pair(k, diff) - rad * lin) / (rad * D.norms[k]);
        r.per_functional[k][ri] = std::max(r.per_functional[k][ri], res);
        worst = std::max(worst, res);
      }
    }
    r.max_residual.push_back(worst);
  }
  return r;
}

}  // namespace mdlab
