#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmcsynth/descent.hpp"

namespace pmcsynth::bench {

struct ModelEntry {
  std::string id;
  std::string model_path;
  std::string property;      // e.g. "ER >= 2.9"
  std::string region_path;   // empty: default region
};

/// Parsed bench manifest. Key-value lines plus one `model <id> = <path> ;
/// <property> [; <region>]` line per model; see the README for the format.
struct Manifest {
  std::vector<ModelEntry> models;
  std::vector<std::pair<Method, bool>> methods;  // (method, sign)
  std::vector<Restriction> restrictions;
  std::vector<std::uint64_t> seeds{0};
  int repetitions = 5;
  DescentConfig base;  // lr, batch size, caps, ... shared by every cell
  std::pair<Method, bool> baseline_method{Method::momentum, true};
  Restriction baseline_restriction = Restriction::projection;
  std::string output_dir = ".";
};

Manifest parse_manifest(const std::string& text, const std::string& base_dir);

struct BenchRecord {
  std::string model;
  std::string method;
  std::string restriction;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::string rep;  // "0".."r-1" or "mean"
  std::string status;  // feasible | exhausted | error
  double value = 0.0;
  long iterations = 0;
  long restarts = 0;
  long gradient_solves = 0;
  double mu_final = std::numeric_limits<double>::quiet_NaN();
  std::string verified;  // yes | no | "" for non-feasible rows
  double preprocess_seconds = 0.0;
  double wall_seconds = 0.0;
  std::string message;  // error diagnostics
};

struct SuiteResult {
  std::vector<BenchRecord> rows;  // per-repetition rows followed by mean rows
};

/// Runs every (model, method, restriction, seed) cell `repetitions` times.
/// Each feasible result is re-verified with an independent evaluation (fresh
/// parse, direct solver backend): value(u_found) must satisfy the bound
/// within 1e-8 and u_found must lie in the region. Per-cell failures become
/// status=error rows; the suite never aborts.
SuiteResult run_suite(const Manifest& manifest);

/// Fixed-header CSV with all rows.
std::string to_csv(const SuiteResult& result);

/// One scatter file per non-baseline (method, restriction) cell, pairing the
/// baseline's mean wall time with the alternative's for log-log plotting.
/// Returns the written file names.
std::vector<std::string> write_outputs(const Manifest& manifest, const SuiteResult& result);

}  // namespace pmcsynth::bench
