#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jaam/harness.hpp"

namespace jaam {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs: the experiment plus where its files go.
struct RunSettings {
  ExperimentConfig experiment;
  std::string out_dir = "out";
};

/// Config files are JSON objects. Recognised keys:
///   preset, problem, mode, schemes, main, backstop, h_max, rho, kappa,
///   paths (or M), h_ref, lambda, sigma, x0, horizon, seed, out, rho_sweep,
///   backstop_rule, levy_terms, projection_scale, projection_exponent,
///   newton_tol, newton_max_iter, reference_diagnostic, workers.
/// A "preset" key is expanded first and the remaining keys override it.
/// Step sizes may be numbers or strings of the form "2^-k".
RunSettings parse_config(std::string_view json_text);
RunSettings load_config(const std::string& path);

/// Inverse of parse_config; the output parses back to the same settings.
std::string to_json(const RunSettings& settings);

const std::vector<std::string>& preset_names();
std::optional<RunSettings> find_preset(std::string_view name);

/// Halves the path count and keeps the 4 largest h_max values.
void apply_desk_scale(ExperimentConfig& cfg);

/// "<project version>+<git describe>".
std::string version_string();

struct RunManifest {
  RunSettings settings;
  std::string version;
  std::uint64_t master_seed = 0;
  std::string started;
  std::string finished;
  std::string output_dir;
  /// Free-form diagnostics (key, JSON value text).
  std::vector<std::pair<std::string, std::string>> diagnostics;

  std::string to_json() const;
};

/// UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace jaam
