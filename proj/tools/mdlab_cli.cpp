// mdlab: batch driver for the metric differentials lab.
//
// Exit status: 0 every assertion passed, 1 ran with failures, 2 could not run.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdlab/error.hpp"
#include "mdlab/lab.hpp"
#include "mdlab/scenarios.hpp"

namespace fs = std::filesystem;
using namespace mdlab;

namespace {

struct Common {
  std::string config;
  std::string out = "mdlab-out";
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> tol;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config with scenario / gauge / schedules / suites sections");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--scenario", c.scenario, "scenario name (overrides the config)");
  app->add_option("--seed", c.seed, "random seed (overrides the config)");
  app->add_option("--k", c.k, "gauge truncation K (overrides the config)");
  app->add_option("--tol", c.tol, "finite-difference tolerance (overrides the config)");
}

LabConfig make_config(const Common& c) {
  LabConfig cfg = c.config.empty() ? LabConfig{} : LabConfig::load(c.config);
  if (!c.scenario.empty()) cfg.scenario = c.scenario;
  if (c.seed) cfg.seed = *c.seed;
  if (c.k) cfg.K = *c.k;
  if (c.tol) cfg.tol = *c.tol;
  if (cfg.scenario.empty()) throw ConfigError("no scenario: pass --scenario or a config naming one");
  return cfg;
}

/// Writes and summarizes reports; returns the number of failed assertions.
std::size_t emit(const std::vector<ExperimentReport>& reports, const fs::path& out) {
  std::size_t failed = 0;
  for (const auto& r : reports) {
    const auto dir = write_report(r, out);
    std::printf("%-22s %-20s %s  %zu/%zu assertions  %.2fs  %s\n", r.scenario.c_str(), r.suite.c_str(),
                r.passed() ? "pass" : "FAIL", r.assertions.size() - r.failures(), r.assertions.size(),
                r.seconds, dir.string().c_str());
    for (const auto& a : r.assertions) {
      if (!a.pass) {
        std::printf("    failed %s: measured %.6g, required %s %.6g\n", a.name.c_str(), a.measured,
                    a.relation.c_str(), a.tolerance);
      }
    }
    failed += r.failures();
  }
  return failed;
}

std::vector<ExperimentReport> run_suites(LabConfig cfg, std::vector<std::string> suites) {
  if (cfg.suites.empty()) cfg.suites = std::move(suites);
  return run(cfg);
}

Vec parse_point(const std::string& s) {
  Vec v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("--point: cannot parse '" + tok + "'");
    }
  }
  if (v.empty()) throw ConfigError("--point: empty point");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric differentials lab"};
  app.require_subcommand(1);

  Common common;
  auto* list = app.add_subcommand("list-scenarios", "print the scenario catalog");
  auto* run_cmd = app.add_subcommand("run", "run the suites named by the config");
  auto* md = app.add_subcommand("md-at-point", "fit and compare the metric differential at one point");
  auto* gauge = app.add_subcommand("gauge-audit", "gauge underestimation audit");
  auto* sob = app.add_subcommand("sobolev-report", "maximal function, restriction and upper-gradient suites");
  auto* w1p = app.add_subcommand("w1p-check", "W^{1,p}-topology differentiability suite");
  auto* all = app.add_subcommand("verify-all", "every suite on every scenario");
  for (auto* s : {run_cmd, md, gauge, sob, w1p, all}) add_common(s, common);
  std::string point;
  md->add_option("--point", point, "comma-separated coordinates, e.g. 0.3,-0.2")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const fs::path out = common.out;
    std::size_t failed = 0;
    if (list->parsed()) {
      for (const auto& s : catalog()) {
        std::printf("%-22s n=%zu  %-24s %s\n", s.name.c_str(), s.map.dim(), s.map.target->id().c_str(),
                    s.description.c_str());
      }
      return 0;
    }
    if (run_cmd->parsed()) {
      failed = emit(run(make_config(common)), out);
    } else if (md->parsed()) {
      auto cfg = make_config(common);
      cfg.points = {parse_point(point)};
      cfg.suites = {"md-consistency"};
      const auto reports = run(cfg);
      if (const auto* t = reports.front().table("md_fan")) {
        for (const auto& c : t->columns) std::printf("%s ", c.c_str());
        std::printf("\n");
        for (const auto& row : t->rows) {
          for (double v : row) std::printf("%.10g ", v);
          std::printf("\n");
        }
      }
      failed = emit(reports, out);
    } else if (gauge->parsed()) {
      failed = emit(run_suites(make_config(common), {"gauge-audit"}), out);
    } else if (sob->parsed()) {
      failed = emit(run_suites(make_config(common), {"maximal-restriction", "reshetnyak"}), out);
    } else if (w1p->parsed()) {
      failed = emit(run_suites(make_config(common), {"w1p"}), out);
    } else if (all->parsed()) {
      LabConfig base = common.config.empty() ? LabConfig{} : LabConfig::load(common.config);
      if (common.seed) base.seed = *common.seed;
      if (common.k) base.K = *common.k;
      if (common.tol) base.tol = *common.tol;
      std::vector<std::string> names = common.scenario.empty() ? scenario_names()
                                                               : std::vector<std::string>{common.scenario};
      if (!common.scenario.empty()) find_scenario(common.scenario);
      for (const auto& n : names) {
        auto cfg = base;
        cfg.scenario = n;
        cfg.points.clear();
        failed += emit(run(cfg), out);
      }
    }
    std::printf("%s\n", failed ? "ran with failures" : "all assertions passed");
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mdlab: %s\n", e.what());
    return 2;
  }
}
