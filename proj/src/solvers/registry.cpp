#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "pnpbench/seed.hpp"
#include "pnpbench/solvers.hpp"

namespace pnpbench {

namespace {

struct Entry {
  SolverName name;
  const char* id;
  Family family;
  Hyperparameters defaults;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {SolverName::reference_exact, "reference_exact", Family::posterior_targeting, {}},
      {SolverName::reddiff, "reddiff", Family::map_like,
       {{"lambda_reg", 0.25}, {"step_size", 0.1}, {"opt_steps", 200}, {"level_window", 10}}},
      {SolverName::dps, "dps", Family::heuristic, {{"guidance_scale", 0.05}}},
      {SolverName::daps, "daps", Family::heuristic, {{"langevin_steps", 20}, {"step_size", 0.25}}},
      {SolverName::diffpir, "diffpir", Family::heuristic, {{"lambda_reg", 1.5}, {"zeta", 0.0}}},
      {SolverName::ddnm, "ddnm", Family::heuristic, {}},
      {SolverName::ddrm, "ddrm", Family::heuristic, {{"eta", 0.85}, {"eta_b", 1.0}}},
      {SolverName::pnpdm, "pnpdm", Family::posterior_targeting,
       {{"rho_coupling", 0.1}, {"rho_start", 3.0}, {"gibbs_iters", 100}, {"exact_x_step", 0}}},
      {SolverName::fps_smc, "fps_smc", Family::posterior_targeting,
       {{"particles", 20}, {"ess_threshold", 0.5}, {"pinv_guard", 0}}},
      {SolverName::mcg_diff, "mcg_diff", Family::posterior_targeting,
       {{"particles", 16}, {"ess_threshold", 0.5}}},
  };
  return entries;
}

const Entry& entry(SolverName name) {
  for (const auto& e : registry())
    if (e.name == name) return e;
  throw std::logic_error("solver missing from registry");
}

std::string valid_names() {
  std::string out;
  for (const auto& e : registry()) {
    if (!out.empty()) out += ", ";
    out += e.id;
  }
  return out;
}

}  // namespace

std::string to_string(SolverName name) { return entry(name).id; }

std::string to_string(Family family) {
  switch (family) {
    case Family::posterior_targeting: return "posterior_targeting";
    case Family::heuristic: return "heuristic";
    case Family::map_like: return "map_like";
  }
  return "?";
}

SolverName solver_name_from_string(const std::string& text) {
  for (const auto& e : registry())
    if (text == e.id) return e.name;
  throw std::invalid_argument("unknown solver '" + text + "'; valid solvers: " + valid_names());
}

const std::vector<SolverName>& all_solvers() {
  static const std::vector<SolverName> names = [] {
    std::vector<SolverName> out;
    for (const auto& e : registry()) out.push_back(e.name);
    return out;
  }();
  return names;
}

Family family_of(SolverName name) { return entry(name).family; }

const Hyperparameters& default_hyperparameters(SolverName name) { return entry(name).defaults; }

double SolverSpec::get(const std::string& key) const {
  const auto it = hyper.find(key);
  if (it == hyper.end()) {
    throw std::invalid_argument("solver " + to_string(name) + " has no hyperparameter '" + key +
                                "'");
  }
  return it->second;
}

int SolverSpec::get_int(const std::string& key) const {
  return static_cast<int>(std::lround(get(key)));
}

SolverSpec resolve_solver(SolverName name, const Hyperparameters& overrides) {
  SolverSpec spec{name, family_of(name), default_hyperparameters(name)};
  for (const auto& [key, value] : overrides) {
    auto it = spec.hyper.find(key);
    if (it == spec.hyper.end()) {
      std::string known;
      for (const auto& [k, v] : spec.hyper) known += (known.empty() ? "" : ", ") + k;
      throw std::invalid_argument("solver " + to_string(name) + " does not use hyperparameter '" +
                                  key + "' (known: " + (known.empty() ? "none" : known) + ")");
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument("hyperparameter '" + key + "' must be finite");
    }
    it->second = value;
  }
  if (spec.family != family_of(name)) throw std::logic_error("family mismatch");
  return spec;
}

std::string hyper_digest(const SolverSpec& spec) {
  std::ostringstream text;
  text << to_string(spec.name);
  char buf[64];
  for (const auto& [k, v] : spec.hyper) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    text << ';' << k << '=' << buf;
  }
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text.str())));
  return buf;
}

std::string to_string(StatusCode code) {
  switch (code) {
    case StatusCode::ok: return "ok";
    case StatusCode::diverged: return "diverged";
    case StatusCode::degenerate: return "degenerate";
  }
  return "?";
}

StatusCode status_code_from_string(const std::string& text) {
  if (text == "ok") return StatusCode::ok;
  if (text == "diverged") return StatusCode::diverged;
  if (text == "degenerate") return StatusCode::degenerate;
  throw std::invalid_argument("unknown sample status '" + text + "'");
}

}  // namespace pnpbench
