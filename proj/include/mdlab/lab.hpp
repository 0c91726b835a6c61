#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdlab/scenarios.hpp"

namespace mdlab {

using ordered_json = nlohmann::ordered_json;

/// Everything a run needs. Loaded from a JSON file with the sections
/// scenario / gauge / schedules / suites plus a top-level seed.
struct LabConfig {
  // scenario
  std::string scenario;
  std::vector<Vec> points;  ///< empty -> the scenario's own points
  // gauge
  std::size_t K = 32;
  double ring_fraction = 0.5;
  std::vector<std::size_t> audit_K = {4, 8, 16, 32};
  // schedules
  double h0_fraction = 1.0 / 16.0;
  std::size_t halvings = 8;
  std::optional<double> tol;  ///< overrides the scenario's fd tolerance
  std::size_t radii = 6;
  double w1p_h0 = 0.2;
  std::size_t w1p_halvings = 4;
  std::optional<double> t0;  ///< restriction thresholds start; empty -> 2 min Mh
  std::size_t t_doublings = 5;
  // suites
  std::vector<std::string> suites;  ///< empty -> every suite
  std::vector<double> p_values = {1.0, 2.0};
  std::size_t ball_grid = 64;
  std::size_t restriction_nodes = 0;  ///< per axis; 0 -> 1025 in 1D, 33 otherwise
  std::size_t fan = 0;                ///< 0 -> default fan for the dimension
  std::vector<std::size_t> dual_blocks = {8, 16, 32, 64};
  std::size_t dual_directions = 256;
  std::size_t truncation_pairs = 500;
  std::uint64_t seed = 20240917;

  /// Throws ConfigError on unknown keys or wrong types.
  static LabConfig from_json(const nlohmann::json& j);
  static LabConfig load(const std::filesystem::path& path);
  ordered_json to_json() const;
};

const std::vector<std::string>& suite_names();

struct Assertion {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  ///< "<=" or ">="
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<Vec> rows;

  /// Header row, then one line per row with %.17g numbers; LF endings.
  std::string to_csv() const;
};

struct ExperimentReport {
  std::string scenario;
  std::string suite;
  ordered_json parameters;
  std::deque<Table> tables;  // deque: suites hold references while adding tables
  std::vector<Assertion> assertions;
  ordered_json notes = ordered_json::object();
  std::string started;
  std::string finished;
  double seconds = 0.0;

  bool passed() const;
  std::size_t failures() const;
  const Assertion* find(const std::string& name) const;
  const Table* table(const std::string& name) const;
  ordered_json to_json() const;
};

/// Worker count: MDLAB_WORKERS when set to a positive integer, else the OpenMP default.
int worker_count();

ExperimentReport run_suite(const LabConfig& config, const std::string& suite);
/// Every suite named by the config (all when none are named), in suite_names() order.
std::vector<ExperimentReport> run(const LabConfig& config);

/// Writes <out>/<scenario>/<suite>/report.json and one CSV per table.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& out);

}  // namespace mdlab
