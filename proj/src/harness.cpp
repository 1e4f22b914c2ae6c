#include "jaam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace jaam {

std::string_view to_string(ExperimentMode mode) noexcept {
  switch (mode) {
    case ExperimentMode::Convergence: return "convergence";
    case ExperimentMode::Efficiency: return "efficiency";
    case ExperimentMode::Backstop: return "backstop";
  }
  return "unknown";
}

std::optional<ExperimentMode> parse_mode(std::string_view s) noexcept {
  if (s == "convergence") return ExperimentMode::Convergence;
  if (s == "efficiency") return ExperimentMode::Efficiency;
  if (s == "backstop") return ExperimentMode::Backstop;
  return std::nullopt;
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  const auto& ids = builtin_ids();
  if (std::find(ids.begin(), ids.end(), problem_id) == ids.end())
    throw std::invalid_argument("unknown problem id '" + problem_id + "'");
  if (h_max.empty()) throw std::invalid_argument("h_max list is empty");
  for (double h : h_max)
    if (!(h > 0.0) || h > 1.0) throw std::invalid_argument("every h_max must lie in (0, 1]");
  if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (paths < 1) throw std::invalid_argument("path count must be at least 1");
  if (levy_terms < 0) throw std::invalid_argument("levy_terms must be non-negative");
  if (!parse_map_id(main_map)) throw std::invalid_argument("unknown main map '" + main_map + "'");
  if (!parse_map_id(backstop_map))
    throw std::invalid_argument("unknown backstop map '" + backstop_map + "'");
  for (const auto& s : schemes)
    if (!parse_map_id(s)) throw std::invalid_argument("unknown scheme '" + s + "'");

  switch (mode) {
    case ExperimentMode::Convergence: {
      if (schemes.empty()) throw std::invalid_argument("scheme list is empty");
      if (!(h_ref > 0.0)) throw std::invalid_argument("h_ref must be positive");
      const double smallest = *std::min_element(h_max.begin(), h_max.end());
      if (h_ref > smallest / 4.0)
        throw std::invalid_argument("h_ref must not exceed min(h_max) / 4");
      break;
    }
    case ExperimentMode::Efficiency:
      if (schemes.empty()) throw std::invalid_argument("scheme list is empty");
      break;
    case ExperimentMode::Backstop:
      if (rho_sweep.empty()) throw std::invalid_argument("rho sweep is empty");
      for (double r : rho_sweep)
        if (!(r > 1.0)) throw std::invalid_argument("every swept rho must exceed 1");
      if (kappa < 1.0) throw std::invalid_argument("backstop sweep needs kappa >= 1");
      break;
  }
}

SjdeProblem ExperimentConfig::problem() const { return make_builtin(problem_id, overrides); }

MapPair ExperimentConfig::map_pair() const {
  return MapPair{OneStepMap{*parse_map_id(main_map), map_params},
                 OneStepMap{*parse_map_id(backstop_map), map_params}};
}

std::vector<OneStepMap> ExperimentConfig::comparators() const {
  std::vector<OneStepMap> out;
  for (const auto& s : schemes) out.push_back(OneStepMap{*parse_map_id(s), map_params});
  return out;
}

std::vector<ErrorRow> ErrorTable::rows_for(const std::string& scheme) const {
  std::vector<ErrorRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const ErrorRow& r) { return r.scheme == scheme; });
  return out;
}

std::string_view to_string(SlopeAxis axis) noexcept {
  return axis == SlopeAxis::MeanStep ? "h_mean" : "step";
}

const SlopeFit* ErrorTable::slope_for(const std::string& scheme, SlopeAxis axis) const {
  for (const auto& s : slopes)
    if (s.scheme == scheme && s.axis == axis) return &s;
  return nullptr;
}

// ---------------------------------------------------------------- helpers

SlopeFit fit_slope(const std::string& scheme, const std::vector<double>& steps,
                   const std::vector<double>& errors) {
  SlopeFit fit;
  fit.scheme = scheme;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < steps.size() && k < errors.size(); ++k) {
    if (steps[k] > 0.0 && errors[k] > 0.0 && std::isfinite(errors[k])) {
      xs.push_back(std::log2(steps[k]));
      ys.push_back(std::log2(errors[k]));
    }
  }
  fit.points = xs.size();
  if (xs.size() < 2) {
    fit.slope = fit.intercept = fit.residual = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

double mean_step(double horizon, const std::vector<std::size_t>& steps,
                 const std::vector<std::size_t>& jumps) {
  if (steps.empty()) throw std::invalid_argument("mean_step needs at least one path");
  double sum = 0.0;
  for (std::size_t m = 0; m < steps.size(); ++m) {
    const std::size_t non_jump = steps[m] > jumps[m] ? steps[m] - jumps[m] : 1;
    sum += horizon / static_cast<double>(non_jump);
  }
  return sum / static_cast<double>(steps.size());
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));

  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct RmsSummary {
  double rms = 0.0;
  double stderr_rms = 0.0;
};

RmsSummary summarize(const std::vector<double>& squared) {
  const double n = static_cast<double>(squared.size());
  const double mean = std::accumulate(squared.begin(), squared.end(), 0.0) / n;
  double var = 0.0;
  for (double e : squared) var += (e - mean) * (e - mean);
  var = squared.size() > 1 ? var / (n - 1.0) : 0.0;
  RmsSummary out;
  out.rms = std::sqrt(mean);
  out.stderr_rms = mean > 0.0 ? std::sqrt(var / n) / (2.0 * out.rms) : 0.0;
  return out;
}

template <class T>
double mean_of(const std::vector<T>& v) {
  double s = 0.0;
  for (const auto& x : v) s += static_cast<double>(x);
  return s / static_cast<double>(v.size());
}

StepParams step_params(const ExperimentConfig& cfg, double h_max, double quantum) {
  StepParams sp;
  sp.h_max = h_max;
  sp.rho = cfg.rho;
  sp.kappa = cfg.kappa;
  sp.quantum = quantum;
  sp.rule = cfg.backstop_rule;
  sp.levy.fixed_terms = cfg.levy_terms;
  return sp;
}

JumpSchedule path_schedule(const SjdeProblem& problem, std::uint64_t seed, std::size_t m) {
  RandomStream rng = RandomStream::for_path(seed, m, StreamTag::Jumps);
  return sample_jump_schedule(problem.intensity, problem.horizon, problem.mark_sampler, rng);
}

template <class Fn>
auto guarded(std::size_t path, std::string_view scheme, Fn&& fn) {
  try {
    return fn();
  } catch (const ExperimentAborted&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentAborted(path, std::string(scheme), e.what());
  }
}

// Per-path results of adaptive runs, one entry per h_max.
struct AdaptiveRuns {
  std::vector<Vector> endpoint;
  std::vector<std::size_t> steps, jumps, backstop, truncated;
  std::vector<double> cpu;

  explicit AdaptiveRuns(std::size_t rows)
      : endpoint(rows), steps(rows), jumps(rows), backstop(rows), truncated(rows), cpu(rows) {}
};

struct FixedRuns {
  std::vector<Vector> endpoint;  // rows * schemes
  std::vector<std::size_t> steps;
  std::vector<double> cpu;
};

ErrorRow adaptive_row(double h_max, double h_mean, const std::vector<AdaptiveRuns>& runs,
                      std::size_t r) {
  ErrorRow row;
  row.h_max = h_max;
  row.scheme = kAdaptiveScheme;
  row.h_mean = h_mean;
  row.step = h_max;
  double total_steps = 0.0, backstop = 0.0, truncated = 0.0, cpu = 0.0;
  for (const auto& run : runs) {
    total_steps += static_cast<double>(run.steps[r]);
    backstop += static_cast<double>(run.backstop[r]);
    truncated += static_cast<double>(run.truncated[r]);
    cpu += run.cpu[r];
  }
  const double n = static_cast<double>(runs.size());
  row.mean_steps = total_steps / n;
  row.mean_cpu_seconds = cpu / n;
  row.backstop_frequency = backstop / total_steps;
  row.truncated_frequency = truncated / total_steps;
  return row;
}

double grid_step(double h_mean, double quantum) {
  if (quantum <= 0.0) return h_mean;
  return std::max(1.0, std::round(h_mean / quantum)) * quantum;
}

}  // namespace

Vector run_reference(const SjdeProblem& problem, const JumpSchedule& schedule,
                     WienerSource& noise, double step, const MapParams& params,
                     const LevyPolicy& levy) {
  const OneStepMap pmil{MapKind::ProjectedMilstein, params};
  const double quantum = noise.mode() == WienerMode::FineGridCoupled ? noise.h_ref() : 0.0;
  return simulate_fixed_step(problem, FixedMesh{step, quantum}, noise, schedule, pmil, levy)
      .endpoint;
}

CoupledPath make_coupled_path(const SjdeProblem& problem, double h_ref, std::uint64_t seed,
                              std::size_t path_index, const LevyPolicy& levy) {
  JumpSchedule schedule = path_schedule(problem, seed, path_index);
  const bool areas = problem.noise_class == NoiseClass::NonCommutative && problem.drivers >= 2;
  WienerSource noise = WienerSource::fine_grid(problem.drivers, problem.horizon, h_ref, seed,
                                               path_index, areas, levy);
  // Jump times are inserted first and in time order, so every later use of
  // this path (in any pass) sees identical bridge draws.
  for (double tau : schedule.times)
    if (tau < problem.horizon) noise.refine_at(tau);
  return CoupledPath{std::move(schedule), std::move(noise)};
}

ErrorTable convergence_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SjdeProblem problem = cfg.problem();
  const MapPair maps = cfg.map_pair();
  const std::vector<OneStepMap> comps = cfg.comparators();
  const LevyPolicy levy{cfg.levy_terms};
  const std::size_t rows = cfg.h_max.size();
  const std::size_t M = cfg.paths;
  const double T = problem.horizon;

  // Pass 1: reference and adaptive runs.
  std::vector<Vector> reference(M);
  std::vector<AdaptiveRuns> adaptive(M, AdaptiveRuns(rows));
  parallel_for(M, cfg.workers, [&](std::size_t m) {
    CoupledPath path = make_coupled_path(problem, cfg.h_ref, cfg.seed, m, levy);
    reference[m] = guarded(m, "reference", [&] {
      return run_reference(problem, path.schedule, path.noise, cfg.h_ref, cfg.map_params, levy);
    });
    for (std::size_t r = 0; r < rows; ++r) {
      const StepParams sp = step_params(cfg, cfg.h_max[r], cfg.h_ref);
      const auto start = Clock::now();
      PathRecord rec = guarded(m, kAdaptiveScheme, [&] {
        return simulate_path(problem, sp, path.noise, path.schedule, maps, false);
      });
      adaptive[m].cpu[r] = seconds_since(start);
      adaptive[m].endpoint[r] = rec.endpoint;
      adaptive[m].steps[r] = rec.steps;
      adaptive[m].jumps[r] = rec.jumps;
      adaptive[m].backstop[r] = rec.backstop_steps;
      adaptive[m].truncated[r] = rec.backstop_truncated;
    }
  });

  std::vector<double> h_mean(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> steps(M), jumps(M);
    for (std::size_t m = 0; m < M; ++m) {
      steps[m] = adaptive[m].steps[r];
      jumps[m] = adaptive[m].jumps[r];
    }
    h_mean[r] = mean_step(T, steps, jumps);
  }

  // Pass 2: fixed-step comparators at h_mean on the same coupled paths.
  const std::size_t C = comps.size();
  std::vector<FixedRuns> fixed(M);
  parallel_for(M, cfg.workers, [&](std::size_t m) {
    CoupledPath path = make_coupled_path(problem, cfg.h_ref, cfg.seed, m, levy);
    FixedRuns& out = fixed[m];
    out.endpoint.resize(rows * C);
    out.steps.resize(rows * C);
    out.cpu.resize(rows * C);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const auto start = Clock::now();
        PathRecord rec = guarded(m, std::string(scheme_label(comps[c].kind)), [&] {
          return simulate_fixed_step(problem, FixedMesh{h_mean[r], cfg.h_ref}, path.noise,
                                     path.schedule, comps[c], levy);
        });
        out.cpu[r * C + c] = seconds_since(start);
        out.endpoint[r * C + c] = rec.endpoint;
        out.steps[r * C + c] = rec.steps;
      }
    }
  });

  ErrorTable table;
  for (std::size_t r = 0; r < rows; ++r) {
    ErrorRow row = adaptive_row(cfg.h_max[r], h_mean[r], adaptive, r);
    std::vector<double> sq(M);
    for (std::size_t m = 0; m < M; ++m)
      sq[m] = (adaptive[m].endpoint[r] - reference[m]).squaredNorm();
    const RmsSummary s = summarize(sq);
    row.rms_error = s.rms;
    row.rms_stderr = s.stderr_rms;
    table.rows.push_back(row);

    for (std::size_t c = 0; c < C; ++c) {
      ErrorRow fr;
      fr.h_max = cfg.h_max[r];
      fr.scheme = std::string(scheme_label(comps[c].kind));
      fr.h_mean = h_mean[r];
      fr.step = grid_step(h_mean[r], cfg.h_ref);
      std::vector<double> steps(M), cpu(M);
      for (std::size_t m = 0; m < M; ++m) {
        sq[m] = (fixed[m].endpoint[r * C + c] - reference[m]).squaredNorm();
        steps[m] = static_cast<double>(fixed[m].steps[r * C + c]);
        cpu[m] = fixed[m].cpu[r * C + c];
      }
      const RmsSummary fs = summarize(sq);
      fr.rms_error = fs.rms;
      fr.rms_stderr = fs.stderr_rms;
      fr.mean_steps = mean_of(steps);
      fr.mean_cpu_seconds = mean_of(cpu);
      table.rows.push_back(fr);
    }
  }

  std::vector<std::string> labels{kAdaptiveScheme};
  for (const auto& c : comps) labels.emplace_back(scheme_label(c.kind));
  for (const auto axis : {SlopeAxis::MeanStep, SlopeAxis::NominalStep}) {
    for (const auto& label : labels) {
      std::vector<double> xs, ys;
      for (const auto& row : table.rows_for(label)) {
        xs.push_back(axis == SlopeAxis::MeanStep ? row.h_mean : row.step);
        ys.push_back(row.rms_error);
      }
      SlopeFit fit = fit_slope(label, xs, ys);
      fit.axis = axis;
      table.slopes.push_back(fit);
    }
  }

  const bool diagnostic =
      cfg.reference_diagnostic.value_or(problem.noise_class == NoiseClass::NonCommutative);
  if (diagnostic) {
    table.reference_ratio =
        reference_ratio(problem, cfg.h_ref, std::min<std::size_t>(M, 100), cfg.seed, cfg.workers,
                        LevyPolicy{cfg.levy_terms > 0 ? cfg.levy_terms : levy.terms(cfg.h_ref)},
                        cfg.map_params);
  }
  return table;
}

ErrorTable efficiency_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SjdeProblem problem = cfg.problem();
  const MapPair maps = cfg.map_pair();
  const std::vector<OneStepMap> comps = cfg.comparators();
  const LevyPolicy levy{cfg.levy_terms};
  const std::size_t rows = cfg.h_max.size();
  const std::size_t M = cfg.paths;
  const std::size_t C = comps.size();

  auto uncoupled = [&](std::size_t m, std::uint64_t substream) {
    return WienerSource::on_demand(
        problem.drivers, problem.horizon,
        RandomStream::for_path(cfg.seed, m, StreamTag::Timing, substream), levy);
  };

  std::vector<AdaptiveRuns> adaptive(M, AdaptiveRuns(rows));
  parallel_for(M, cfg.workers, [&](std::size_t m) {
    const JumpSchedule schedule = path_schedule(problem, cfg.seed, m);
    for (std::size_t r = 0; r < rows; ++r) {
      WienerSource noise = uncoupled(m, r * (C + 1));
      const StepParams sp = step_params(cfg, cfg.h_max[r], 0.0);
      const auto start = Clock::now();
      PathRecord rec = guarded(m, kAdaptiveScheme, [&] {
        return simulate_path(problem, sp, noise, schedule, maps, false);
      });
      adaptive[m].cpu[r] = seconds_since(start);
      adaptive[m].steps[r] = rec.steps;
      adaptive[m].jumps[r] = rec.jumps;
      adaptive[m].backstop[r] = rec.backstop_steps;
      adaptive[m].truncated[r] = rec.backstop_truncated;
    }
  });

  std::vector<double> h_mean(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::size_t> steps(M), jumps(M);
    for (std::size_t m = 0; m < M; ++m) {
      steps[m] = adaptive[m].steps[r];
      jumps[m] = adaptive[m].jumps[r];
    }
    h_mean[r] = mean_step(problem.horizon, steps, jumps);
  }

  std::vector<FixedRuns> fixed(M);
  parallel_for(M, cfg.workers, [&](std::size_t m) {
    const JumpSchedule schedule = path_schedule(problem, cfg.seed, m);
    FixedRuns& out = fixed[m];
    out.steps.resize(rows * C);
    out.cpu.resize(rows * C);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        WienerSource noise = uncoupled(m, r * (C + 1) + 1 + c);
        const auto start = Clock::now();
        PathRecord rec = guarded(m, std::string(scheme_label(comps[c].kind)), [&] {
          return simulate_fixed_step(problem, FixedMesh{h_mean[r], 0.0}, noise, schedule,
                                     comps[c], levy);
        });
        out.cpu[r * C + c] = seconds_since(start);
        out.steps[r * C + c] = rec.steps;
      }
    }
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  ErrorTable table;
  for (std::size_t r = 0; r < rows; ++r) {
    ErrorRow row = adaptive_row(cfg.h_max[r], h_mean[r], adaptive, r);
    row.rms_error = row.rms_stderr = nan;
    table.rows.push_back(row);
    for (std::size_t c = 0; c < C; ++c) {
      ErrorRow fr;
      fr.h_max = cfg.h_max[r];
      fr.scheme = std::string(scheme_label(comps[c].kind));
      fr.h_mean = h_mean[r];
      fr.step = h_mean[r];
      fr.rms_error = fr.rms_stderr = nan;
      std::vector<double> steps(M), cpu(M);
      for (std::size_t m = 0; m < M; ++m) {
        steps[m] = static_cast<double>(fixed[m].steps[r * C + c]);
        cpu[m] = fixed[m].cpu[r * C + c];
      }
      fr.mean_steps = mean_of(steps);
      fr.mean_cpu_seconds = mean_of(cpu);
      table.rows.push_back(fr);
    }
  }
  return table;
}

std::vector<BackstopRow> backstop_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SjdeProblem problem = cfg.problem();
  const MapPair maps = cfg.map_pair();
  const LevyPolicy levy{cfg.levy_terms};
  const std::size_t M = cfg.paths;

  std::vector<BackstopRow> out;
  for (double h_max : cfg.h_max) {
    for (double rho : cfg.rho_sweep) {
      ExperimentConfig local = cfg;
      local.rho = rho;
      const StepParams sp = step_params(local, h_max, 0.0);
      std::vector<std::size_t> steps(M), backstop(M), norm(M), truncated(M);
      parallel_for(M, cfg.workers, [&](std::size_t m) {
        const JumpSchedule schedule = path_schedule(problem, cfg.seed, m);
        WienerSource noise = WienerSource::on_demand(
            problem.drivers, problem.horizon,
            RandomStream::for_path(cfg.seed, m, StreamTag::Wiener), levy);
        PathRecord rec = guarded(m, kAdaptiveScheme, [&] {
          return simulate_path(problem, sp, noise, schedule, maps, false);
        });
        steps[m] = rec.steps;
        backstop[m] = rec.backstop_steps;
        norm[m] = rec.backstop_norm;
        truncated[m] = rec.backstop_truncated;
      });
      BackstopRow row;
      row.h_max = h_max;
      row.rho = rho;
      row.kappa = cfg.kappa;
      row.steps = std::accumulate(steps.begin(), steps.end(), std::size_t{0});
      const double total = static_cast<double>(row.steps);
      row.frequency =
          static_cast<double>(std::accumulate(backstop.begin(), backstop.end(), std::size_t{0})) /
          total;
      row.norm_frequency =
          static_cast<double>(std::accumulate(norm.begin(), norm.end(), std::size_t{0})) / total;
      row.truncated_frequency = static_cast<double>(std::accumulate(
                                    truncated.begin(), truncated.end(), std::size_t{0})) /
                                total;
      row.jump_term = 1.0 - std::exp(-problem.intensity * h_max / rho);
      out.push_back(row);
    }
  }
  return out;
}

double reference_ratio(const SjdeProblem& problem, double h_ref, std::size_t paths,
                       std::uint64_t seed, unsigned workers, LevyPolicy levy,
                       const MapParams& params) {
  std::vector<double> coarse(paths), fine(paths);
  parallel_for(paths, workers, [&](std::size_t m) {
    CoupledPath path = make_coupled_path(problem, h_ref / 4.0, seed, m, levy);
    const Vector x1 = run_reference(problem, path.schedule, path.noise, h_ref, params, levy);
    const Vector x2 = run_reference(problem, path.schedule, path.noise, h_ref / 2.0, params, levy);
    const Vector x4 = run_reference(problem, path.schedule, path.noise, h_ref / 4.0, params, levy);
    coarse[m] = (x1 - x2).squaredNorm();
    fine[m] = (x2 - x4).squaredNorm();
  });
  const double num = std::accumulate(coarse.begin(), coarse.end(), 0.0);
  const double den = std::accumulate(fine.begin(), fine.end(), 0.0);
  return std::sqrt(num / den);
}

LocalErrorStudy local_error_study(const SjdeProblem& problem, const Vector& x0,
                                  const std::vector<double>& steps, std::size_t samples,
                                  int substeps, std::uint64_t seed, unsigned workers) {
  if (samples < 2 || substeps < 2) throw std::invalid_argument("need samples >= 2, substeps >= 2");
  const bool areas = problem.noise_class == NoiseClass::NonCommutative && problem.drivers >= 2;
  const OneStepMap fine_map{MapKind::Milstein, {}};
  const JumpSchedule no_jumps{};

  LocalErrorStudy study;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double h = steps[k];
    SjdeProblem local = problem;
    local.horizon = h;
    local.initial_state = x0;
    local.intensity = 0.0;
    JumpSchedule schedule = no_jumps;
    schedule.horizon = h;

    std::vector<double> sq(samples);
    parallel_for(samples, workers, [&](std::size_t s) {
      const std::uint64_t index = (static_cast<std::uint64_t>(k) << 40) | s;
      WienerSource noise =
          WienerSource::fine_grid(problem.drivers, h, h / substeps, seed, index, areas);
      const Vector exact =
          simulate_fixed_step(local, FixedMesh{h / substeps, h / substeps}, noise, schedule,
                              fine_map)
              .endpoint;
      const Vector one = milstein(x0, noise.sample_iterated(0.0, h, problem.noise_class), local);
      sq[s] = (exact - one).squaredNorm();
    });
    const double n = static_cast<double>(samples);
    const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / n;
    double var = 0.0;
    for (double e : sq) var += (e - mean) * (e - mean);
    study.steps.push_back(h);
    study.mean_square.push_back(mean);
    study.stderr_mean_square.push_back(std::sqrt(var / (n - 1.0) / n));
  }
  study.exponent = fit_slope("milstein", study.steps, study.mean_square).slope;
  return study;
}

}  // namespace jaam
