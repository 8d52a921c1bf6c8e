#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pnpbench/errors.hpp"
#include "pnpbench/harness/config.hpp"
#include "pnpbench/harness/experiment.hpp"
#include "pnpbench/harness/report.hpp"
#include "pnpbench/seed.hpp"

using namespace pnpbench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config(const std::string& experiment = "exp1_identity") {
  json j = {
      {"experiment", experiment},
      {"sigma_y", 1.0},
      {"n_cases", 3},
      {"k_samples", 12},
      {"oracle_cases", 20},
      {"master_seed", 11},
      {"schedule", {{"steps", 20}}},
      {"solvers", json::array({"reference_exact", "dps", "fps_smc",
                               {{"name", "pnpdm"}, {"hyperparameters", {{"gibbs_iters", 5}}}}})},
  };
  if (experiment != "exp1_identity") j["operator"] = {{"kind", "binary_svd"}};
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pnpbench_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round-trips through its resolved JSON form") {
  const json minimal = {{"experiment", "exp1_identity"}, {"sigma_y", 1.0}, {"n_cases", 20},
                        {"k_samples", 100}, {"master_seed", 1}, {"solvers", {"reference_exact"}}};
  const auto cfg = parse_config(minimal);
  CHECK(parse_config(config_to_json(cfg)) == cfg);
  CHECK(cfg.op.kind == OperatorKind::identity);
  // Every hyperparameter is explicit after resolution.
  const auto full = parse_config(small_config("exp2_binary"));
  CHECK(parse_config(config_to_json(full)) == full);
  for (const auto& s : config_to_json(full)["solvers"])
    CHECK(s["hyperparameters"].size() == default_hyperparameters(solver_name_from_string(s["name"])).size());
}

TEST_CASE("config errors name the field") {
  json j = small_config();
  j.erase("sigma_y");
  CHECK(config_error(j).find("sigma_y") != std::string::npos);

  j = small_config();
  j["solvers"] = {"dsp"};
  const std::string msg = config_error(j);
  for (SolverName n : all_solvers()) CHECK(msg.find(to_string(n)) != std::string::npos);

  j = small_config();
  j["sigma_why"] = 1.0;
  CHECK(config_error(j).find("sigma_why") != std::string::npos);

  j = small_config();
  j["schedule"]["stpes"] = 3;
  CHECK(config_error(j).find("stpes") != std::string::npos);

  j = small_config();
  j["solvers"] = {{{"name", "dps"}, {"hyperparameters", {{"particles", 3}}}}};
  CHECK(config_error(j).find("particles") != std::string::npos);

  j = small_config();
  j["operator"] = {{"kind", "binary_svd"}};
  CHECK(!config_error(j).empty());  // exp1 forces the identity operator

  j = small_config();
  j["k_samples"] = 1;
  CHECK(config_error(j).find("k_samples") != std::string::npos);

  j = small_config();
  j["n_cases"] = 0;
  CHECK(config_error(j).find("n_cases") != std::string::npos);

  j = small_config("sweep");
  CHECK(config_error(j).find("sweep") != std::string::npos);

  j = small_config();
  j["solvers"] = {"dps", "dps"};
  CHECK(!config_error(j).empty());
}

TEST_CASE("sweep axis must be a hyperparameter of every configured solver") {
  auto cfg = parse_config(small_config());
  // reference_exact has no particles.
  CHECK_THROWS_AS(set_sweep(cfg, {"particles", {4, 8}}), ConfigError);
  json j = small_config();
  j["solvers"] = {"fps_smc", "mcg_diff"};
  cfg = parse_config(j);
  CHECK_THROWS_AS(set_sweep(cfg, {"particles_typo", {1.0}}), ConfigError);
  CHECK_THROWS_AS(set_sweep(cfg, {"particles", {}}), ConfigError);
  set_sweep(cfg, {"particles", {4, 8}});
  const auto group = solvers_for(cfg, 8.0);
  REQUIRE(group.size() == 2);
  for (const auto& spec : group) CHECK(spec.get("particles") == 8.0);
  CHECK(solvers_for(cfg, std::nullopt) == cfg.solvers);
}

TEST_CASE("seed derivation separates measurement and sampling streams") {
  CHECK(truth_seed(5, 2) == derive_seed(5, {{"truth", 2}}));
  CHECK(noise_seed(5, 2) == derive_seed(5, {{"noise", 2}}));
  CHECK(sampling_seed(5, SolverName::dps, 2) ==
        derive_seed(5, {{"solver", static_cast<std::int64_t>(SolverName::dps)}, {"case", 2}}));
  CHECK(sampling_seed(5, SolverName::dps, 2) != sampling_seed(5, SolverName::daps, 2));
  CHECK(truth_seed(5, 2) != noise_seed(5, 2));
}

TEST_CASE("run_experiment: rows, fairness, oracle values") {
  const auto cfg = parse_config(small_config("exp2_binary"));
  const auto result = run_experiment(cfg);
  CHECK(result.rows.size() == cfg.solvers.size() * 3);
  CHECK(result.batches.size() == result.rows.size());
  for (const auto& rec : result.batches) {
    // Every solver sees the identical measurement of its case.
    CHECK(rec.batch.measurement.y == result.measurements[static_cast<std::size_t>(rec.case_id)].y);
    CHECK(rec.batch.k() == 12);
  }
  for (const auto& row : result.rows) {
    CHECK(row.sigma_y == 1.0);
    CHECK(row.oracle_coverage == result.oracle.oracle_coverage);
    CHECK(row.theory_var_null == result.oracle.theory_var_null);
    CHECK(row.theory_ratio == doctest::Approx(result.oracle.theory_var_null / result.oracle.theory_var_obs));
    if (row.solver == "fps_smc") {
      CHECK(row.failure_rate == 1.0);
      CHECK(row.k_valid == 0);
      CHECK(std::isnan(row.coverage));
    } else {
      CHECK(row.failure_rate == 0.0);
    }
  }

  json sj = small_config("sweep");
  sj["solvers"] = {"fps_smc", "mcg_diff"};
  sj["sweep"] = {{"axis", "particles"}, {"values", {4, 6, 8}}};
  const auto sres = run_experiment(parse_config(sj));
  // |solvers| x n_cases x |values|
  CHECK(sres.rows.size() == 2 * 3 * 3);
  for (const auto& row : sres.rows) CHECK(row.sweep_axis == "particles");
}

TEST_CASE("exp1 reference_exact coverage agrees with the oracle") {
  json j = small_config();
  j["n_cases"] = 20;
  j["k_samples"] = 100;
  j["oracle_cases"] = 200;
  j["schedule"] = json::object();
  j["solvers"] = {"reference_exact"};
  const auto result = run_experiment(parse_config(j));
  const auto summary = summarize(result);
  REQUIRE(summary.size() == 1);
  CHECK(std::abs(summary[0].coverage - result.oracle.oracle_coverage) < 0.03);
}

TEST_CASE("reports: header, summary, number format") {
  CHECK(csv_header() ==
        "experiment,solver,family,sweep_axis,sweep_value,case_id,k_valid,coverage,mean_width,"
        "var_obs,var_null,ratio,rmse_mean,rmse_std,failure_rate,sigma_y,oracle_coverage,"
        "theory_var_obs,theory_var_null,theory_ratio,oracle_rmse,hyper_digest,seed");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(0.1) == "0.1");
  for (double v : {1.0 / 3.0, 2.718281828459045e-7, -12345.678901234567, 6.02214076e23}) {
    const double back = std::stod(format_number(v));
    CHECK(std::abs(back - v) <= 1e-11 * std::abs(v));
  }

  const auto result = run_experiment(parse_config(small_config("exp2_binary")));
  const fs::path out = scratch("report");
  write_report(result, out);
  const std::string csv = read_file(out / "results.csv");
  CHECK(csv.substr(0, csv.find('\n')) == csv_header());
  CHECK(csv == results_csv(result.rows));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(result.rows.size()) + 1);

  const json summary = json::parse(read_file(out / "summary.json"));
  for (const auto& spec : result.cfg.solvers) {
    bool found = false;
    for (const auto& s : summary["solvers"])
      if (s["solver"] == to_string(spec.name)) found = s.contains("coverage");
    CHECK(found);
  }
  const json manifest = json::parse(read_file(out / "manifest.json"));
  CHECK(parse_config(manifest["config"]) == result.cfg);
  CHECK(manifest["master_seed"] == 11);
  for (const char* f : {"timings.csv", "operator.json", "ground_truth.csv", "measurements.csv",
                        "samples/pnpdm/case_0.csv"})
    CHECK(fs::exists(out / f));

  // A path under a regular file cannot be created.
  CHECK_THROWS(write_report(result, out / "results.csv" / "sub"));
}

TEST_CASE("persisted samples regenerate the report byte for byte") {
  const auto result = run_experiment(parse_config(small_config("exp2_binary")));
  const fs::path out = scratch("persist");
  write_report(result, out);
  const auto loaded = load_persisted(out);
  CHECK(loaded.cfg == result.cfg);
  CHECK(results_csv(compute_rows(loaded)) == read_file(out / "results.csv"));
  for (std::size_t i = 0; i < result.batches.size(); ++i) {
    const auto& a = result.batches[i].batch;
    const auto& b = loaded.batches[i].batch;
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), sizeof(double) * a.samples.size()) == 0);
    CHECK(a.seeds == b.seeds);
  }
  const fs::path again = scratch("persist_again");
  write_report(loaded, again);
  CHECK(read_file(again / "results.csv") == read_file(out / "results.csv"));
  CHECK(read_file(again / "summary.json") == read_file(out / "summary.json"));

  // On persisted data, coverage is the mean of hits
  // recomputed directly from the files.
  const auto& rec = loaded.batches.front();
  const Matrix S = rec.batch.usable_samples();
  const Vector truth = rec.batch.measurement.x_star;
  double hits = 0.0;
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    const double mu = S.col(j).mean();
    const double sd = std::sqrt((S.col(j).array() - mu).square().sum() / (S.rows() - 1));
    hits += std::abs(truth[j] - mu) <= 1.96 * sd ? 1.0 : 0.0;
  }
  CHECK(compute_rows(loaded).front().coverage == hits / static_cast<double>(S.cols()));
}

TEST_CASE("results are independent of the worker count") {
  const auto cfg = parse_config(small_config("exp2_binary"));
  const std::string seq = results_csv(run_experiment(cfg, 1).rows);
  CHECK(results_csv(run_experiment(cfg, 1).rows) == seq);
  CHECK(results_csv(run_experiment(cfg, 3).rows) == seq);
}

TEST_CASE("worker count resolution") {
  ::unsetenv("PNPBENCH_WORKERS");
  CHECK(resolve_workers(0) == 1);
  CHECK(resolve_workers(4) == 4);
  ::setenv("PNPBENCH_WORKERS", "6", 1);
  CHECK(resolve_workers(0) == 6);
  CHECK(resolve_workers(2) == 2);
  ::setenv("PNPBENCH_WORKERS", "zero", 1);
  CHECK_THROWS(resolve_workers(0));
  ::unsetenv("PNPBENCH_WORKERS");
}
