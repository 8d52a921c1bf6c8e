#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pnpbench/harness/experiment.hpp"

namespace pnpbench {

// Fixed column order of results.csv.
const std::string& csv_header();

// %.12g, with every NaN written as "nan".
std::string format_number(double v);

std::string results_csv(const std::vector<ResultRow>& rows);

// Writes into out_dir (created if needed):
//   results.csv    one row per (sweep value, solver, case)
//   timings.csv    wall time per row (kept apart so results.csv is byte-stable)
//   summary.json   per-solver aggregates
//   manifest.json  resolved config, seed, oracle values, versions
//   operator.json, ground_truth.csv, measurements.csv
//   samples/<solver>[__<axis>=<value>]/case_<id>.csv  with columns row,seed,status,x0..x{d-1}
void write_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

// Reads a directory produced by write_report and recomputes its rows from
// the persisted samples.
ExperimentResult load_persisted(const std::filesystem::path& in_dir);

nlohmann::json oracle_to_json(const OracleReference& ref);

}  // namespace pnpbench
