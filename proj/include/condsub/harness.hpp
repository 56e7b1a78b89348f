// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "condsub/domain.hpp"

#include <json.hpp>

namespace condsub {

/// One experiment: a task over a dataset with shared parameters, repeated
/// across trials. Loadable from JSON; CLI flags override fields.
struct ExperimentSpec {
  std::string task = "se";  // se dv max sum wcond des kmeans mst scaling
  std::string dataset;      // "file:<path>", bare path, or "gen:<kind>:<args>"
  double eps = 0.1;
  double delta = 0.05;
  std::uint64_t seed = 1;
  int trials = 1;
  int jobs = 0;  // 0: CONDSUB_JOBS env or hardware
  int draws = 20000;  // sampling-distribution tasks
  int k = 4;
  double beta = 8.0;
  double kmeans_ratio = 20.0;
  int max_level_override = -1;
  std::string out_dir;
  bool dedupe = false;
  bool accel = false;
  bool zero_wall = false;
  double max_failure_rate = -1.0;  // >= 0: gate for the exit code
  double max_slope = -1.0;         // scaling gate
  std::vector<std::int64_t> scaling_sizes = {1000, 10000, 100000, 1000000};
  int scaling_trials = 1;

  static ExperimentSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrialRow {
  int trial = 0;
  std::uint64_t seed = 0;
  double estimate = 0;
  double exact = 0;
  double rel_error = 0;
  bool success = true;
  std::uint64_t queries = 0;
  std::uint64_t desc_cost = 0;
  double wall_ms = 0;
};

struct Report {
  std::vector<TrialRow> rows;
  double failure_rate = 0;
  double rel_p50 = 0, rel_p95 = 0;
  std::uint64_t queries_p50 = 0, queries_p95 = 0;
  double wall_total_ms = 0;
  bool gate_passed = true;
  nlohmann::json extra;

  void finalize(double eps);
  void write_csv(std::ostream& out, bool zero_wall) const;
  nlohmann::json to_json(const ExperimentSpec& spec) const;
};

/// Deterministic dataset generation. Kinds:
///   uniform:n=..,d=..,side=..
///   clustered:n=..,k=..,sigma=..,side=..[,d=2]
///   collinear:n=..,spacing=..[,d=1][,side=..]
///   lattice:n=..,d=..[,side=..]
Dataset generate_dataset(const std::string& kind_args, std::uint64_t seed);

/// Resolves "file:..", "gen:.." or a bare path.
Dataset resolve_dataset(const std::string& source, std::uint64_t seed, bool dedupe);

/// Runs the experiment, writes report.csv and report.json under out_dir
/// (when set), and returns the report. Trials execute concurrently.
Report run_experiment(const ExperimentSpec& spec);

/// Least-squares slope of log(queries) against log(n). Exposed for tests.
double loglog_slope(const std::vector<double>& n, const std::vector<double>& q);

int run_cli(int argc, char** argv);

}  // namespace condsub
