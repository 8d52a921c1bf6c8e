#include "pnpbench/harness/config.hpp"

#include <fstream>
#include <set>

#include "pnpbench/errors.hpp"

namespace pnpbench {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + where + "." + key + "' (allowed: " + list + ")");
    }
  }
}

template <class T>
T read(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field '" + where + key + "' is invalid: " + e.what());
  }
}

template <class T>
T required(const json& obj, const std::string& key, const std::string& where = "") {
  if (!obj.contains(key)) throw ConfigError("missing required field '" + where + key + "'");
  return read<T>(obj, key, where);
}

template <class T>
T optional(const json& obj, const std::string& key, T fallback, const std::string& where = "") {
  return obj.contains(key) ? read<T>(obj, key, where) : fallback;
}

template <class Fn>
auto wrap(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("field '" + field + "': " + e.what());
  }
}

ExperimentKind experiment_from_string(const std::string& text) {
  if (text == "exp1_identity") return ExperimentKind::exp1_identity;
  if (text == "exp2_binary") return ExperimentKind::exp2_binary;
  if (text == "sweep") return ExperimentKind::sweep;
  throw ConfigError("field 'experiment': unknown value '" + text +
                    "' (expected exp1_identity, exp2_binary or sweep)");
}

SolverSpec parse_solver(const json& j, std::size_t idx) {
  const std::string where = "solvers[" + std::to_string(idx) + "]";
  if (j.is_string()) {
    return wrap(where, [&] { return resolve_solver(solver_name_from_string(j.get<std::string>())); });
  }
  check_keys(j, where, {"name", "hyperparameters"});
  const auto name = required<std::string>(j, "name", where + ".");
  Hyperparameters hyper;
  if (j.contains("hyperparameters")) {
    const json& h = j.at("hyperparameters");
    if (!h.is_object()) throw ConfigError(where + ".hyperparameters must be an object");
    for (const auto& [k, v] : h.items()) {
      if (!v.is_number()) throw ConfigError(where + ".hyperparameters." + k + " must be a number");
      hyper[k] = v.get<double>();
    }
  }
  return wrap(where, [&] { return resolve_solver(solver_name_from_string(name), hyper); });
}

void validate_sweep(const ExperimentConfig& cfg, const SweepAxis& axis) {
  if (axis.name.empty()) throw ConfigError("field 'sweep.axis' must be non-empty");
  if (axis.values.empty()) throw ConfigError("field 'sweep.values' must be non-empty");
  for (const auto& s : cfg.solvers) {
    if (!s.hyper.count(axis.name)) {
      throw ConfigError("sweep axis '" + axis.name + "' is not a hyperparameter of solver " +
                        to_string(s.name));
    }
    for (double v : axis.values) {
      Hyperparameters h = s.hyper;
      h[axis.name] = v;
      wrap("sweep.values", [&] { return resolve_solver(s.name, h); });
    }
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::exp1_identity: return "exp1_identity";
    case ExperimentKind::exp2_binary: return "exp2_binary";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"experiment", "prior", "operator", "sigma_y", "n_cases", "k_samples", "oracle_cases",
              "solvers", "schedule", "score_error", "master_seed", "sweep"});
  ExperimentConfig cfg;
  cfg.experiment = experiment_from_string(required<std::string>(j, "experiment"));
  cfg.sigma_y = required<double>(j, "sigma_y");
  cfg.n_cases = required<int>(j, "n_cases");
  cfg.k_samples = required<int>(j, "k_samples");
  cfg.master_seed = required<std::uint64_t>(j, "master_seed");
  cfg.oracle_cases = optional<int>(j, "oracle_cases", cfg.oracle_cases);
  if (!(cfg.sigma_y > 0.0)) throw ConfigError("field 'sigma_y' must be > 0");
  if (cfg.n_cases < 1) throw ConfigError("field 'n_cases' must be >= 1");
  if (cfg.k_samples < 2) throw ConfigError("field 'k_samples' must be >= 2");
  if (cfg.oracle_cases < 1) throw ConfigError("field 'oracle_cases' must be >= 1");

  if (j.contains("prior")) {
    const json& p = j.at("prior");
    check_keys(p, "prior",
               {"d", "structured_dim", "rho_ar", "sigma_w_sq", "mu_sep", "bimodal_coord"});
    ToyPriorSpec& s = cfg.prior;
    s.d = optional<int>(p, "d", s.d, "prior.");
    s.structured_dim = optional<int>(p, "structured_dim", s.structured_dim, "prior.");
    s.rho_ar = optional<double>(p, "rho_ar", s.rho_ar, "prior.");
    s.sigma_w_sq = optional<double>(p, "sigma_w_sq", s.sigma_w_sq, "prior.");
    s.mu_sep = optional<double>(p, "mu_sep", s.mu_sep, "prior.");
    s.bimodal_coord = optional<int>(p, "bimodal_coord", s.bimodal_coord, "prior.");
  }
  wrap("prior", [&] { validate(cfg.prior); return 0; });

  const OperatorKind default_kind = cfg.experiment == ExperimentKind::exp2_binary
                                        ? OperatorKind::binary_svd
                                        : OperatorKind::identity;
  cfg.op.kind = default_kind;
  if (j.contains("operator")) {
    const json& o = j.at("operator");
    check_keys(o, "operator", {"kind", "obs_count", "basis", "seed"});
    if (o.contains("kind")) {
      cfg.op.kind = wrap("operator.kind", [&] {
        return operator_kind_from_string(read<std::string>(o, "kind", "operator."));
      });
    }
    cfg.op.obs_count = optional<int>(o, "obs_count", cfg.op.obs_count, "operator.");
    if (o.contains("basis")) {
      cfg.op.basis = wrap("operator.basis", [&] {
        return basis_mode_from_string(read<std::string>(o, "basis", "operator."));
      });
    }
    cfg.op.seed = optional<std::uint64_t>(o, "seed", cfg.op.seed, "operator.");
  }
  if (cfg.experiment == ExperimentKind::exp1_identity && cfg.op.kind != OperatorKind::identity) {
    throw ConfigError("field 'operator.kind': exp1_identity requires the identity operator");
  }
  if (cfg.experiment == ExperimentKind::exp2_binary && cfg.op.kind != OperatorKind::binary_svd) {
    throw ConfigError("field 'operator.kind': exp2_binary requires binary_svd");
  }
  if (cfg.op.obs_count < 0 || cfg.op.obs_count > cfg.prior.d) {
    throw ConfigError("field 'operator.obs_count' must lie in [0, prior.d]");
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    check_keys(s, "schedule", {"sigma_min", "sigma_max", "steps", "spacing", "exponent"});
    ScheduleConfig& sc = cfg.schedule;
    sc.sigma_min = optional<double>(s, "sigma_min", sc.sigma_min, "schedule.");
    sc.sigma_max = optional<double>(s, "sigma_max", sc.sigma_max, "schedule.");
    sc.steps = optional<int>(s, "steps", sc.steps, "schedule.");
    if (s.contains("spacing")) {
      sc.spacing = wrap("schedule.spacing", [&] {
        return spacing_from_string(read<std::string>(s, "spacing", "schedule."));
      });
    }
    sc.exponent = optional<double>(s, "exponent", sc.exponent, "schedule.");
  }
  wrap("schedule", [&] { return make_schedule(cfg.schedule); });

  if (j.contains("score_error")) {
    const json& e = j.at("score_error");
    check_keys(e, "score_error", {"mult", "add"});
    cfg.score_error.mult = optional<double>(e, "mult", 0.0, "score_error.");
    cfg.score_error.add = optional<double>(e, "add", 0.0, "score_error.");
  }

  const json solvers = required<json>(j, "solvers");
  if (!solvers.is_array() || solvers.empty()) {
    throw ConfigError("field 'solvers' must be a non-empty array");
  }
  std::set<SolverName> seen;
  for (std::size_t i = 0; i < solvers.size(); ++i) {
    cfg.solvers.push_back(parse_solver(solvers[i], i));
    if (!seen.insert(cfg.solvers.back().name).second) {
      throw ConfigError("solver " + to_string(cfg.solvers.back().name) + " is listed twice");
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"axis", "values"});
    set_sweep(cfg, {required<std::string>(s, "axis", "sweep."),
                    required<std::vector<double>>(s, "values", "sweep.")});
  }
  if (cfg.experiment == ExperimentKind::sweep && !cfg.sweep) {
    throw ConfigError("missing required field 'sweep' for experiment 'sweep'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.experiment);
  j["master_seed"] = cfg.master_seed;
  j["sigma_y"] = cfg.sigma_y;
  j["n_cases"] = cfg.n_cases;
  j["k_samples"] = cfg.k_samples;
  j["oracle_cases"] = cfg.oracle_cases;
  j["prior"] = {{"d", cfg.prior.d},
                {"structured_dim", cfg.prior.structured_dim},
                {"rho_ar", cfg.prior.rho_ar},
                {"sigma_w_sq", cfg.prior.sigma_w_sq},
                {"mu_sep", cfg.prior.mu_sep},
                {"bimodal_coord", cfg.prior.bimodal_coord}};
  j["operator"] = {{"kind", to_string(cfg.op.kind)},
                   {"obs_count", cfg.op.obs_count},
                   {"basis", to_string(cfg.op.basis)},
                   {"seed", cfg.op.seed}};
  j["schedule"] = {{"sigma_min", cfg.schedule.sigma_min},
                   {"sigma_max", cfg.schedule.sigma_max},
                   {"steps", cfg.schedule.steps},
                   {"spacing", to_string(cfg.schedule.spacing)},
                   {"exponent", cfg.schedule.exponent}};
  j["score_error"] = {{"mult", cfg.score_error.mult}, {"add", cfg.score_error.add}};
  json solvers = json::array();
  for (const auto& s : cfg.solvers) {
    solvers.push_back({{"name", to_string(s.name)}, {"hyperparameters", s.hyper}});
  }
  j["solvers"] = solvers;
  if (cfg.sweep) j["sweep"] = {{"axis", cfg.sweep->name}, {"values", cfg.sweep->values}};
  return j;
}

void set_sweep(ExperimentConfig& cfg, SweepAxis axis) {
  validate_sweep(cfg, axis);
  cfg.sweep = std::move(axis);
}

NoiseSchedule make_schedule(const ScheduleConfig& s) {
  return build_schedule(s.sigma_min, s.sigma_max, s.steps, s.spacing, s.exponent);
}

LinearOperatorSVD make_operator(const ExperimentConfig& cfg) {
  return build_operator(cfg.op.kind, cfg.prior.d, cfg.op.obs_count, cfg.op.basis, cfg.op.seed);
}

}  // namespace pnpbench
