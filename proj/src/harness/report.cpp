#include "pnpbench/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "pnpbench/errors.hpp"

namespace pnpbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string exact_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split(line));
  return rows;
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double null_to_nan(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string group_dir(const ExperimentConfig& cfg, const BatchRecord& rec) {
  std::string name = to_string(rec.spec.name);
  if (rec.sweep_value) name += "__" + cfg.sweep->name + "=" + format_number(*rec.sweep_value);
  return name;
}

std::string vector_cells(const Vector& v) {
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) out += "," + exact_number(v[j]);
  return out;
}

std::string coord_header(const char* prefix, Eigen::Index n) {
  std::string out;
  for (Eigen::Index j = 0; j < n; ++j) out += std::string(",") + prefix + std::to_string(j);
  return out;
}

Vector parse_tail(const std::vector<std::string>& cells, std::size_t from) {
  Vector v(static_cast<Eigen::Index>(cells.size() - from));
  for (std::size_t i = from; i < cells.size(); ++i) v[static_cast<Eigen::Index>(i - from)] = parse_double(cells[i]);
  return v;
}

}  // namespace

const std::string& csv_header() {
  static const std::string header =
      "experiment,solver,family,sweep_axis,sweep_value,case_id,k_valid,coverage,mean_width,"
      "var_obs,var_null,ratio,rmse_mean,rmse_std,failure_rate,sigma_y,oracle_coverage,"
      "theory_var_obs,theory_var_null,theory_ratio,oracle_rmse,hyper_digest,seed";
  return header;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.solver << ',' << r.family << ',' << r.sweep_axis << ','
        << (r.sweep_axis.empty() ? "" : format_number(r.sweep_value)) << ',' << r.case_id << ','
        << r.k_valid;
    for (double v : {r.coverage, r.mean_width, r.var_obs, r.var_null, r.ratio, r.rmse_mean,
                     r.rmse_std, r.failure_rate, r.sigma_y, r.oracle_coverage, r.theory_var_obs,
                     r.theory_var_null, r.theory_ratio, r.oracle_rmse}) {
      out << ',' << format_number(v);
    }
    out << ',' << r.hyper_digest << ',' << r.seed << '\n';
  }
  return out.str();
}

json oracle_to_json(const OracleReference& ref) {
  return {{"oracle_coverage", nan_to_null(ref.oracle_coverage)},
          {"theory_var_obs", nan_to_null(ref.theory_var_obs)},
          {"theory_var_null", nan_to_null(ref.theory_var_null)},
          {"theory_ratio", nan_to_null(ref.theory_var_null / ref.theory_var_obs)},
          {"oracle_rmse", nan_to_null(ref.oracle_rmse)},
          {"n_cases", ref.n_cases},
          {"k_samples", ref.k_samples}};
}

void write_report(const ExperimentResult& result, const fs::path& out_dir) {
  if (result.rows.empty()) throw std::invalid_argument("write_report: no rows");
  std::error_code ec;
  fs::create_directories(out_dir / "samples", ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  const ExperimentConfig& cfg = result.cfg;
  const Eigen::Index d = result.op.input_dim();

  write_file(out_dir / "results.csv", results_csv(result.rows));

  std::ostringstream timings;
  timings << "solver,sweep_value,case_id,wall_time\n";
  for (const auto& r : result.rows) {
    timings << r.solver << ',' << (r.sweep_axis.empty() ? "" : format_number(r.sweep_value)) << ','
            << r.case_id << ',' << format_number(r.wall_time) << '\n';
  }
  write_file(out_dir / "timings.csv", timings.str());

  json summary;
  summary["experiment"] = to_string(cfg.experiment);
  summary["sweep_axis"] = cfg.sweep ? json(cfg.sweep->name) : json(nullptr);
  summary["oracle"] = oracle_to_json(result.oracle);
  json groups = json::array();
  for (const auto& s : summarize(result)) {
    groups.push_back({{"solver", s.solver},
                      {"family", s.family},
                      {"sweep_value", s.sweep_value ? json(*s.sweep_value) : json(nullptr)},
                      {"coverage", nan_to_null(s.coverage)},
                      {"coverage_std", nan_to_null(s.coverage_std)},
                      {"mean_width", nan_to_null(s.mean_width)},
                      {"mean_width_std", nan_to_null(s.mean_width_std)},
                      {"var_obs", nan_to_null(s.var_obs)},
                      {"var_null", nan_to_null(s.var_null)},
                      {"ratio", nan_to_null(s.ratio)},
                      {"rmse_mean", nan_to_null(s.rmse_mean)},
                      {"rmse_std", nan_to_null(s.rmse_std)},
                      {"failure_rate", s.failure_rate},
                      {"k_valid_total", s.k_valid_total},
                      {"invalid_cases", s.invalid_cases}});
  }
  summary["solvers"] = groups;
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  json manifest;
  manifest["tool"] = "pnpbench";
  manifest["version"] = PNPBENCH_VERSION;
  manifest["config"] = config_to_json(cfg);
  manifest["master_seed"] = cfg.master_seed;
  manifest["operator_id"] = result.op.id();
  manifest["oracle"] = oracle_to_json(result.oracle);
  manifest["csv_header"] = csv_header();
  manifest["aggregation"] = {{"coverage", "mean over valid cases and dims of interval hits"},
                             {"interval_width", "dims then cases"},
                             {"rmse", "per-sample |x - x*|/sqrt(d), pooled over samples and cases"},
                             {"summary_std", "standard deviation of per-case values"}};
  manifest["versions"] = {{"compiler", __VERSION__},
                          {"cxx_standard", static_cast<long>(__cplusplus)},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(out_dir / "operator.json", operator_to_json(result.op).dump() + "\n");

  std::ostringstream truth, meas;
  truth << "case_id" << coord_header("x", d) << '\n';
  meas << "case_id,noise_seed" << coord_header("y", result.op.output_dim()) << '\n';
  for (std::size_t c = 0; c < result.measurements.size(); ++c) {
    truth << c << vector_cells(result.measurements[c].x_star) << '\n';
    meas << c << ',' << result.measurements[c].seed << vector_cells(result.measurements[c].y)
         << '\n';
  }
  write_file(out_dir / "ground_truth.csv", truth.str());
  write_file(out_dir / "measurements.csv", meas.str());

  for (const auto& rec : result.batches) {
    const fs::path dir = out_dir / "samples" / group_dir(cfg, rec);
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string());
    std::ostringstream out;
    out << "row,seed,status" << coord_header("x", d) << '\n';
    const SampleBatch& b = rec.batch;
    for (Eigen::Index k = 0; k < b.k(); ++k) {
      out << k << ',' << b.seeds[static_cast<std::size_t>(k)] << ','
          << to_string(b.status[static_cast<std::size_t>(k)].code)
          << vector_cells(b.samples.row(k).transpose()) << '\n';
    }
    write_file(dir / ("case_" + std::to_string(rec.case_id) + ".csv"), out.str());
  }
}

ExperimentResult load_persisted(const fs::path& in_dir) {
  json manifest;
  {
    std::ifstream in(in_dir / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in " + in_dir.string());
    manifest = json::parse(in);
  }
  const ExperimentConfig cfg = parse_config(manifest.at("config"));
  json op_json;
  {
    std::ifstream in(in_dir / "operator.json");
    if (!in) throw std::runtime_error("no operator.json in " + in_dir.string());
    op_json = json::parse(in);
  }
  ExperimentResult result{cfg, operator_from_json(op_json), {}, {}, {}, {}};
  const json& o = manifest.at("oracle");
  result.oracle.oracle_coverage = null_to_nan(o.at("oracle_coverage"));
  result.oracle.theory_var_obs = null_to_nan(o.at("theory_var_obs"));
  result.oracle.theory_var_null = null_to_nan(o.at("theory_var_null"));
  result.oracle.oracle_rmse = null_to_nan(o.at("oracle_rmse"));
  result.oracle.n_cases = o.at("n_cases").get<int>();
  result.oracle.k_samples = o.at("k_samples").get<int>();

  const auto truths = read_csv(in_dir / "ground_truth.csv");
  const auto meas = read_csv(in_dir / "measurements.csv");
  if (truths.size() != static_cast<std::size_t>(cfg.n_cases) || meas.size() != truths.size()) {
    throw std::runtime_error("persisted case count does not match the config");
  }
  for (std::size_t c = 0; c < truths.size(); ++c) {
    Measurement m;
    m.x_star = parse_tail(truths[c], 1);
    m.seed = std::stoull(meas[c][1]);
    m.y = parse_tail(meas[c], 2);
    m.sigma_y = cfg.sigma_y;
    m.operator_id = result.op.id();
    result.measurements.push_back(std::move(m));
  }

  std::vector<std::optional<double>> values{std::nullopt};
  if (cfg.sweep) {
    values.clear();
    for (double v : cfg.sweep->values) values.emplace_back(v);
  }
  for (const auto& value : values) {
    for (const auto& spec : solvers_for(cfg, value)) {
      for (int c = 0; c < cfg.n_cases; ++c) {
        BatchRecord rec{spec, value, c, {}};
        const auto rows = read_csv(in_dir / "samples" / group_dir(cfg, rec) /
                                   ("case_" + std::to_string(c) + ".csv"));
        SampleBatch& b = rec.batch;
        b.solver = spec;
        b.measurement = result.measurements[static_cast<std::size_t>(c)];
        b.samples.resize(static_cast<Eigen::Index>(rows.size()), result.op.input_dim());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          b.seeds.push_back(std::stoull(rows[k][1]));
          b.status.push_back({status_code_from_string(rows[k][2]), -1, ""});
          b.samples.row(static_cast<Eigen::Index>(k)) = parse_tail(rows[k], 3).transpose();
        }
        result.batches.push_back(std::move(rec));
      }
    }
  }
  result.rows = compute_rows(result);
  return result;
}

}  // namespace pnpbench
