// jaam: run convergence, efficiency and backstop experiments from a config
// file or a named preset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jaam/config.hpp"
#include "jaam/harness.hpp"
#include "jaam/report.hpp"

namespace {

using namespace jaam;

constexpr int kConfigFailure = 1;
constexpr int kNumericalFailure = 2;

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool desk_scale = false;
  bool single_worker = false;
  bool trace = false;
  std::size_t path_index = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("-p,--preset", o.preset, "Named preset (see `jaam presets`)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  cmd->add_flag("--desk-scale", o.desk_scale, "Halve M and keep the 4 largest h_max");
  cmd->add_flag("--single-worker", o.single_worker, "Run every path on one thread");
  cmd->add_flag("--trace", o.trace, "Also write trace.csv for path 0 at the first h_max");
}

RunSettings resolve(const Options& o, ExperimentMode mode) {
  if (!o.config.empty() && !o.preset.empty())
    throw ConfigError("give either --config or --preset, not both");
  RunSettings s;
  if (!o.config.empty()) {
    s = load_config(o.config);
  } else if (!o.preset.empty()) {
    auto p = find_preset(o.preset);
    if (!p) throw ConfigError("unknown preset '" + o.preset + "'");
    s = *p;
  } else {
    throw ConfigError("a --config file or a --preset is required");
  }
  s.experiment.mode = mode;
  if (o.desk_scale) apply_desk_scale(s.experiment);
  if (o.seed) s.experiment.seed = *o.seed;
  if (!o.out.empty()) s.out_dir = o.out;
  if (o.workers) s.experiment.workers = *o.workers;
  if (o.single_worker) s.experiment.workers = 1;
  return s;
}

std::string path_in(const RunSettings& s, const std::string& name) {
  return (std::filesystem::path(s.out_dir) / name).string();
}

PathRecord trace_path(const ExperimentConfig& cfg, std::size_t index) {
  const SjdeProblem problem = cfg.problem();
  StepParams sp;
  sp.h_max = cfg.h_max.front();
  sp.rho = cfg.rho;
  sp.kappa = cfg.kappa;
  sp.rule = cfg.backstop_rule;
  sp.levy.fixed_terms = cfg.levy_terms;
  sp.validate();
  RandomStream jumps = RandomStream::for_path(cfg.seed, index, StreamTag::Jumps);
  const JumpSchedule schedule =
      sample_jump_schedule(problem.intensity, problem.horizon, problem.mark_sampler, jumps);
  WienerSource noise = WienerSource::on_demand(
      problem.drivers, problem.horizon, RandomStream::for_path(cfg.seed, index, StreamTag::Wiener),
      sp.levy);
  return simulate_path(problem, sp, noise, schedule, cfg.map_pair(), true);
}

std::string slopes_json(const ErrorTable& table) {
  std::string out = "{";
  for (std::size_t k = 0; k < table.slopes.size(); ++k) {
    const SlopeFit& f = table.slopes[k];
    out += (k ? ", \"" : "\"") + f.scheme + "/" + std::string(to_string(f.axis)) + "\": " +
           (std::isfinite(f.slope) ? format_double(f.slope) : std::string("null"));
  }
  return out + "}";
}

std::string efficiency_order(const ErrorTable& table) {
  if (table.rows.empty()) return "[]";
  const double h = std::min_element(table.rows.begin(), table.rows.end(),
                                    [](const ErrorRow& a, const ErrorRow& b) {
                                      return a.h_max < b.h_max;
                                    })->h_max;
  std::vector<ErrorRow> sel;
  for (const auto& r : table.rows)
    if (r.h_max == h) sel.push_back(r);
  std::sort(sel.begin(), sel.end(), [](const ErrorRow& a, const ErrorRow& b) {
    return a.mean_cpu_seconds < b.mean_cpu_seconds;
  });
  std::string out = "[";
  for (std::size_t k = 0; k < sel.size(); ++k) out += (k ? ", \"" : "\"") + sel[k].scheme + "\"";
  return out + "]";
}

template <class Body>
int guarded(const Options& o, ExperimentMode mode, Body&& body) {
  RunSettings s;
  try {
    s = resolve(o, mode);
    if (mode != ExperimentMode::Backstop || !s.experiment.rho_sweep.empty()) s.experiment.validate();
    else throw ConfigError("rho_sweep is required for the backstop sweep");
  } catch (const std::exception& e) {
    std::cerr << "jaam: configuration error: " << e.what() << "\n";
    return kConfigFailure;
  }
  RunManifest manifest;
  manifest.settings = s;
  manifest.version = version_string();
  manifest.master_seed = s.experiment.seed;
  manifest.output_dir = s.out_dir;
  manifest.started = utc_timestamp();
  try {
    body(s, manifest);
    if (o.trace) write_text(path_in(s, "trace.csv"), trace_csv(trace_path(s.experiment, 0)));
  } catch (const std::exception& e) {
    std::cerr << "jaam: run aborted: " << e.what() << "\n";
    return kNumericalFailure;
  }
  manifest.finished = utc_timestamp();
  try {
    write_text(path_in(s, "manifest.json"), manifest.to_json());
    write_text(path_in(s, "plot.py"), plot_script(mode));
  } catch (const std::exception& e) {
    std::cerr << "jaam: " << e.what() << "\n";
    return kConfigFailure;
  }
  std::cout << "wrote " << s.out_dir << "\n";
  return 0;
}

int cmd_convergence(const Options& o) {
  return guarded(o, ExperimentMode::Convergence, [](const RunSettings& s, RunManifest& m) {
    const ErrorTable table = convergence_experiment(s.experiment);
    write_text(path_in(s, "errors.csv"), errors_csv(table));
    write_text(path_in(s, "slopes.csv"), slopes_csv(table));
    write_text(path_in(s, "timing.csv"), timing_csv(table));
    m.diagnostics.emplace_back("slopes", slopes_json(table));
    if (table.reference_ratio)
      m.diagnostics.emplace_back("reference_ratio", format_double(*table.reference_ratio));
    for (const auto& sl : table.slopes)
      std::cout << sl.scheme << " slope vs " << to_string(sl.axis) << " "
                << format_double(sl.slope) << "\n";
  });
}

int cmd_efficiency(const Options& o) {
  return guarded(o, ExperimentMode::Efficiency, [](const RunSettings& s, RunManifest& m) {
    const ErrorTable table = efficiency_experiment(s.experiment);
    write_text(path_in(s, "timing.csv"), timing_csv(table));
    m.diagnostics.emplace_back("cpu_order_at_smallest_h_max", efficiency_order(table));
  });
}

int cmd_backstop(const Options& o) {
  return guarded(o, ExperimentMode::Backstop, [](const RunSettings& s, RunManifest&) {
    write_text(path_in(s, "backstop.csv"), backstop_csv(backstop_experiment(s.experiment)));
  });
}

int cmd_path(const Options& o) {
  RunSettings s;
  try {
    s = resolve(o, ExperimentMode::Efficiency);
    if (s.experiment.h_max.empty()) throw ConfigError("h_max list is empty");
    (void)s.experiment.problem();
    (void)s.experiment.map_pair();
  } catch (const std::exception& e) {
    std::cerr << "jaam: configuration error: " << e.what() << "\n";
    return kConfigFailure;
  }
  try {
    const PathRecord rec = trace_path(s.experiment, o.path_index);
    write_text(path_in(s, "trace.csv"), trace_csv(rec));
    std::cout << "steps " << rec.steps << ", jumps " << rec.jumps << ", backstop "
              << rec.backstop_steps << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "jaam: configuration error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "jaam: configuration error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "jaam: run aborted: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump-adapted adaptive Milstein experiments"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Options opts;
  auto* conv = app.add_subcommand("convergence", "Strong-error convergence against a reference");
  auto* eff = app.add_subcommand("efficiency", "CPU time per path on independent noise");
  auto* back = app.add_subcommand("backstop", "Backstop frequency over a rho sweep");
  auto* path = app.add_subcommand("path", "Simulate one path and write its step trace");
  auto* presets = app.add_subcommand("presets", "List presets or print one as JSON");
  for (auto* cmd : {conv, eff, back, path}) add_common(cmd, opts);
  path->add_option("--path-index", opts.path_index, "Path index within the seed");
  std::string show;
  presets->add_option("name", show, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  if (*conv) return cmd_convergence(opts);
  if (*eff) return cmd_efficiency(opts);
  if (*back) return cmd_backstop(opts);
  if (*path) return cmd_path(opts);
  if (show.empty()) {
    for (const auto& n : preset_names()) std::cout << n << "\n";
    return 0;
  }
  const auto p = find_preset(show);
  if (!p) {
    std::cerr << "jaam: unknown preset '" << show << "'\n";
    return kConfigFailure;
  }
  std::cout << to_json(*p) << "\n";
  return 0;
}
