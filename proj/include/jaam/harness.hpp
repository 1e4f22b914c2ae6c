#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jaam/maps.hpp"
#include "jaam/model.hpp"
#include "jaam/noise.hpp"
#include "jaam/stepper.hpp"

namespace jaam {

enum class ExperimentMode { Convergence, Efficiency, Backstop };

std::string_view to_string(ExperimentMode mode) noexcept;
std::optional<ExperimentMode> parse_mode(std::string_view s) noexcept;

/// Scheme label of the adaptive method in every table.
inline constexpr const char* kAdaptiveScheme = "JA-AMM";

struct ExperimentConfig {
  std::string problem_id = "1d-add";
  ProblemOverrides overrides;
  /// Fixed-step jump-adapted comparators by map id.
  std::vector<std::string> schemes{"pmil", "ssbm", "tmil"};
  std::string main_map = "milstein";
  std::string backstop_map = "pmil";
  std::vector<double> h_max;
  double rho = 128.0;
  double kappa = 1.0;
  BackstopRule backstop_rule = BackstopRule::Literal;
  std::size_t paths = 100;
  double h_ref = 0x1p-14;
  std::uint64_t seed = 1;
  ExperimentMode mode = ExperimentMode::Convergence;
  std::vector<double> rho_sweep;
  /// Levy-area series terms; 0 selects ceil(1/h) per step.
  int levy_terms = 0;
  MapParams map_params;
  /// Emit the reference self-consistency ratio (defaults on for
  /// non-commutative problems).
  std::optional<bool> reference_diagnostic;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned workers = 0;

  /// Throws std::invalid_argument.
  void validate() const;
  SjdeProblem problem() const;
  MapPair map_pair() const;
  std::vector<OneStepMap> comparators() const;
};

struct ErrorRow {
  double h_max = 0.0;
  std::string scheme;
  double h_mean = 0.0;
  /// Step actually used: h_max for the adaptive scheme, the (grid-rounded)
  /// h_mean for fixed-step comparators.
  double step = 0.0;
  double rms_error = 0.0;
  double rms_stderr = 0.0;
  double mean_cpu_seconds = 0.0;
  double mean_steps = 0.0;
  double backstop_frequency = 0.0;
  double truncated_frequency = 0.0;
};

/// Abscissa of a slope fit: the mean non-jump step h_mean, or the nominal
/// step (h_max for the adaptive scheme, the fixed step for comparators).
enum class SlopeAxis { MeanStep, NominalStep };
std::string_view to_string(SlopeAxis axis) noexcept;

struct SlopeFit {
  std::string scheme;
  SlopeAxis axis = SlopeAxis::MeanStep;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::size_t points = 0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  std::vector<SlopeFit> slopes;
  std::optional<double> reference_ratio;

  std::vector<ErrorRow> rows_for(const std::string& scheme) const;
  const SlopeFit* slope_for(const std::string& scheme,
                            SlopeAxis axis = SlopeAxis::MeanStep) const;
};

struct BackstopRow {
  double h_max = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  std::size_t steps = 0;
  double frequency = 0.0;
  double norm_frequency = 0.0;
  double truncated_frequency = 0.0;
  /// 1 - exp(-lambda h_max / rho), the jump part of the backstop bound.
  double jump_term = 0.0;
};

/// Raised when a trajectory fails; names the path and scheme.
class ExperimentAborted : public std::runtime_error {
 public:
  ExperimentAborted(std::size_t path, std::string scheme, const std::string& what)
      : std::runtime_error("path " + std::to_string(path) + ", scheme " + scheme + ": " + what),
        path_(path),
        scheme_(std::move(scheme)) {}
  std::size_t path() const noexcept { return path_; }
  const std::string& scheme() const noexcept { return scheme_; }

 private:
  std::size_t path_;
  std::string scheme_;
};

/// Least squares of log2(error) against log2(step).
SlopeFit fit_slope(const std::string& scheme, const std::vector<double>& steps,
                   const std::vector<double>& errors);

/// h_mean = (1/M) sum_m T / (N_m - Nbar_m).
double mean_step(double horizon, const std::vector<std::size_t>& steps,
                 const std::vector<std::size_t>& jumps);

/// Runs fn(0..count-1) on `workers` threads. Results must be written by
/// index; the lowest-index exception is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Projected Milstein on the superposition of a grid of spacing `step`
/// (a multiple of the source spacing) and the jump times.
Vector run_reference(const SjdeProblem& problem, const JumpSchedule& schedule,
                     WienerSource& noise, double step, const MapParams& params = {},
                     const LevyPolicy& levy = {});

/// The coupled noise of one path: its jump schedule and fine-grid Wiener
/// path, with every off-grid jump time already inserted as a node.
struct CoupledPath {
  JumpSchedule schedule;
  WienerSource noise;
};
CoupledPath make_coupled_path(const SjdeProblem& problem, double h_ref, std::uint64_t seed,
                              std::size_t path_index, const LevyPolicy& levy = {});

ErrorTable convergence_experiment(const ExperimentConfig& cfg);
ErrorTable efficiency_experiment(const ExperimentConfig& cfg);
std::vector<BackstopRow> backstop_experiment(const ExperimentConfig& cfg);

/// RMS(X_h - X_{h/2}) / RMS(X_{h/2} - X_{h/4}) for the reference solver,
/// all three levels driven by one path at spacing h/4.
double reference_ratio(const SjdeProblem& problem, double h_ref, std::size_t paths,
                       std::uint64_t seed, unsigned workers = 0, LevyPolicy levy = {},
                       const MapParams& params = {});

/// Mean-square one-step error of the Milstein map from a fixed state,
/// against a fine Milstein solution on the same Brownian path.
struct LocalErrorStudy {
  std::vector<double> steps;
  std::vector<double> mean_square;
  std::vector<double> stderr_mean_square;
  double exponent = 0.0;
};
LocalErrorStudy local_error_study(const SjdeProblem& problem, const Vector& x0,
                                  const std::vector<double>& steps, std::size_t samples,
                                  int substeps, std::uint64_t seed, unsigned workers = 0);

}  // namespace jaam
