#include "jaam/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef JAAM_VERSION
#define JAAM_VERSION "0.0.0+unknown"
#endif

namespace jaam {

using nlohmann::json;

namespace {

std::vector<double> powers_of_two(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

double parse_step(const json& v, const char* key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.rfind("2^", 0) == 0) {
      try {
        std::size_t used = 0;
        const int k = std::stoi(s.substr(2), &used);
        if (used == s.size() - 2) return std::ldexp(1.0, k);
      } catch (const std::exception&) {
      }
    }
  }
  throw ConfigError(std::string("'") + key + "' expects a number or \"2^k\"");
}

std::vector<double> parse_steps(const json& v, const char* key) {
  if (!v.is_array()) throw ConfigError(std::string("'") + key + "' expects an array");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(parse_step(e, key));
  return out;
}

template <class T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("'") + key + "' has the wrong type");
  }
}

RunSettings base_1d(const std::string& id, double lambda) {
  RunSettings s;
  ExperimentConfig& c = s.experiment;
  c.problem_id = id;
  c.overrides.sigma = 0.2;
  c.overrides.intensity = lambda;
  c.rho = 128.0;
  c.h_max = powers_of_two(-14, -10);
  c.h_ref = 0x1p-18;
  c.paths = 500;
  return s;
}

RunSettings base_2d(const std::string& id) {
  RunSettings s;
  ExperimentConfig& c = s.experiment;
  c.problem_id = id;
  c.overrides.sigma = 0.2;
  c.overrides.intensity = 2.5;
  c.overrides.initial_state = std::vector<double>{0.5, 0.7};
  c.overrides.horizon = 1.0;
  c.rho = 128.0;
  c.h_max = powers_of_two(-9, -5);
  c.h_ref = 0x1p-18;
  c.paths = 500;
  return s;
}

RunSettings noncom_preset() {
  RunSettings s = base_2d("2d-g3");
  s.experiment.h_ref = 0x1p-9;
  s.experiment.h_max = powers_of_two(-6, -1);
  s.experiment.paths = 100;
  return s;
}

RunSettings backstop_preset() {
  RunSettings s = base_1d("1d-mult", 2.0);
  s.experiment.mode = ExperimentMode::Backstop;
  s.experiment.h_max = {0x1p-6};
  s.experiment.rho_sweep = {8.0, 128.0};
  s.experiment.paths = 1000;
  return s;
}

void apply_keys(RunSettings& s, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("preset")) {
    const auto name = get_as<std::string>(j.at("preset"), "preset");
    auto p = find_preset(name);
    if (!p) throw ConfigError("unknown preset '" + name + "'");
    s = *p;
  }
  ExperimentConfig& c = s.experiment;
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "preset") {
      continue;
    } else if (key == "problem") {
      c.problem_id = get_as<std::string>(v, k);
    } else if (key == "mode") {
      auto m = parse_mode(get_as<std::string>(v, k));
      if (!m) throw ConfigError("unknown mode '" + v.dump() + "'");
      c.mode = *m;
    } else if (key == "schemes") {
      c.schemes = get_as<std::vector<std::string>>(v, k);
    } else if (key == "main") {
      c.main_map = get_as<std::string>(v, k);
    } else if (key == "backstop") {
      c.backstop_map = get_as<std::string>(v, k);
    } else if (key == "h_max") {
      c.h_max = parse_steps(v, k);
    } else if (key == "rho") {
      c.rho = parse_step(v, k);
    } else if (key == "kappa") {
      c.kappa = get_as<double>(v, k);
    } else if (key == "paths" || key == "M") {
      const auto n = get_as<long long>(v, k);
      if (n < 1) throw ConfigError("path count must be at least 1");
      c.paths = static_cast<std::size_t>(n);
    } else if (key == "h_ref") {
      c.h_ref = parse_step(v, k);
    } else if (key == "lambda") {
      c.overrides.intensity = get_as<double>(v, k);
    } else if (key == "sigma") {
      c.overrides.sigma = get_as<double>(v, k);
    } else if (key == "x0") {
      c.overrides.initial_state = get_as<std::vector<double>>(v, k);
    } else if (key == "horizon") {
      c.overrides.horizon = get_as<double>(v, k);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, k);
    } else if (key == "out") {
      s.out_dir = get_as<std::string>(v, k);
    } else if (key == "rho_sweep") {
      c.rho_sweep = parse_steps(v, k);
    } else if (key == "backstop_rule") {
      const auto r = get_as<std::string>(v, k);
      if (r == "literal")
        c.backstop_rule = BackstopRule::Literal;
      else if (r == "norm-only")
        c.backstop_rule = BackstopRule::NormOnly;
      else
        throw ConfigError("backstop_rule must be \"literal\" or \"norm-only\"");
    } else if (key == "levy_terms") {
      c.levy_terms = get_as<int>(v, k);
    } else if (key == "projection_scale") {
      c.map_params.projection_scale = get_as<double>(v, k);
    } else if (key == "projection_exponent") {
      c.map_params.projection_exponent = get_as<double>(v, k);
    } else if (key == "newton_tol") {
      c.map_params.newton_tol = get_as<double>(v, k);
    } else if (key == "newton_max_iter") {
      c.map_params.newton_max_iter = get_as<int>(v, k);
    } else if (key == "reference_diagnostic") {
      c.reference_diagnostic = get_as<bool>(v, k);
    } else if (key == "workers") {
      c.workers = get_as<unsigned>(v, k);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

json settings_json(const RunSettings& s) {
  const ExperimentConfig& c = s.experiment;
  json j;
  j["problem"] = c.problem_id;
  j["mode"] = std::string(to_string(c.mode));
  j["schemes"] = c.schemes;
  j["main"] = c.main_map;
  j["backstop"] = c.backstop_map;
  j["h_max"] = c.h_max;
  j["rho"] = c.rho;
  j["kappa"] = c.kappa;
  j["paths"] = c.paths;
  j["h_ref"] = c.h_ref;
  if (c.overrides.intensity) j["lambda"] = *c.overrides.intensity;
  if (c.overrides.sigma) j["sigma"] = *c.overrides.sigma;
  if (c.overrides.initial_state) j["x0"] = *c.overrides.initial_state;
  if (c.overrides.horizon) j["horizon"] = *c.overrides.horizon;
  j["seed"] = c.seed;
  j["out"] = s.out_dir;
  j["rho_sweep"] = c.rho_sweep;
  j["backstop_rule"] = c.backstop_rule == BackstopRule::Literal ? "literal" : "norm-only";
  j["levy_terms"] = c.levy_terms;
  j["projection_scale"] = c.map_params.projection_scale;
  if (c.map_params.projection_exponent)
    j["projection_exponent"] = *c.map_params.projection_exponent;
  j["newton_tol"] = c.map_params.newton_tol;
  j["newton_max_iter"] = c.map_params.newton_max_iter;
  if (c.reference_diagnostic) j["reference_diagnostic"] = *c.reference_diagnostic;
  j["workers"] = c.workers;
  return j;
}

}  // namespace

RunSettings parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunSettings s;
  apply_keys(s, j);
  return s;
}

RunSettings load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const RunSettings& settings) { return settings_json(settings).dump(2); }

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "fig1-additive",    "fig1-multiplicative", "fig2-lambda25",   "fig2-lambda250",
      "fig3-diagonal",    "fig3-commutative",    "fig3-noncom",     "fig4-noncom",
      "backstop-1d-mult"};
  return names;
}

std::optional<RunSettings> find_preset(std::string_view name) {
  if (name == "fig1-additive") return base_1d("1d-add", 2.0);
  if (name == "fig1-multiplicative") return base_1d("1d-mult", 2.0);
  if (name == "fig2-lambda25") return base_1d("1d-mult", 25.0);
  if (name == "fig2-lambda250") return base_1d("1d-mult", 250.0);
  if (name == "fig3-diagonal") return base_2d("2d-g1");
  if (name == "fig3-commutative") return base_2d("2d-g2");
  if (name == "fig3-noncom" || name == "fig4-noncom") return noncom_preset();
  if (name == "backstop-1d-mult") return backstop_preset();
  return std::nullopt;
}

void apply_desk_scale(ExperimentConfig& cfg) {
  cfg.paths = std::max<std::size_t>(1, cfg.paths / 2);
  std::sort(cfg.h_max.begin(), cfg.h_max.end());
  if (cfg.h_max.size() > 4) cfg.h_max.erase(cfg.h_max.begin(), cfg.h_max.end() - 4);
}

std::string version_string() { return JAAM_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::to_json() const {
  json j;
  j["config"] = settings_json(settings);
  j["version"] = version;
  j["master_seed"] = master_seed;
  j["started"] = started;
  j["finished"] = finished;
  j["output_dir"] = output_dir;
  json diag = json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = json::parse(v);
  j["diagnostics"] = diag;
  return j.dump(2) + "\n";
}

}  // namespace jaam
