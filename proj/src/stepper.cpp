#include "jaam/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jaam {

double StepParams::path_bound() const { return std::pow(rho, kappa); }

void StepParams::validate() const {
  if (!(h_max > 0.0) || h_max > 1.0) throw std::invalid_argument("h_max must lie in (0, 1]");
  if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (quantum < 0.0) throw std::invalid_argument("quantum must be non-negative");
}

StepProposal propose_step(const Vector& y, double t, const StepParams& params,
                          std::optional<double> next_jump, double horizon) {
  const double h_max = params.h_max;
  const double h_min = params.h_min();
  const double norm = y.norm();
  const double candidate = norm > 0.0 ? h_max / std::pow(norm, 1.0 / params.kappa)
                                      : std::numeric_limits<double>::infinity();

  StepProposal out;
  out.norm_clamped = candidate <= h_min;
  const double h_adapt = std::clamp(candidate, h_min, h_max);

  double node = t + h_adapt;
  while (node - t > h_adapt) node = std::nextafter(node, t);
  if (params.quantum > 0.0) {
    // Round down onto the grid unless that would leave a step of h_min or less.
    double cells = std::floor((t + h_adapt) / params.quantum + 1e-9);
    if (cells * params.quantum - t > h_adapt) cells -= 1.0;
    const double snapped = cells * params.quantum;
    if (snapped - t > h_min) node = snapped;
  }
  if (next_jump && *next_jump <= node) {
    node = *next_jump;
    out.truncated = true;
  }
  if (horizon <= node) {
    node = horizon;
    out.truncated = true;
  }

  out.t_next = node;
  out.h = node - t;
  out.use_backstop = params.rule == BackstopRule::Literal ? (out.h <= h_min || out.norm_clamped)
                                                          : out.norm_clamped;
  return out;
}

StepOutcome advance(const SjdeProblem& problem, const Vector& y, double t,
                    const StepProposal& step, WienerSource& noise,
                    const JumpSchedule& schedule, const MapPair& maps, const LevyPolicy& levy) {
  if (!(step.t_next > t)) throw std::invalid_argument("step must move forward in time");
  const OneStepMap& map = step.use_backstop ? maps.backstop : maps.main;
  const IteratedIntegrals xi = noise.sample_iterated(t, step.t_next, problem.noise_class,
                                                     levy.terms(step.t_next - t));
  StepOutcome out;
  out.t_next = step.t_next;
  out.h_used = step.t_next - t;
  out.used_backstop = step.use_backstop;
  out.norm_clamped = step.norm_clamped;
  try {
    out.state_before_jump = map(y, xi, problem);
  } catch (const MapFailure& e) {
    throw StepError(map.kind, t, e.what());
  }
  out.state_after_jump = out.state_before_jump;
  if (auto k = schedule.index_at(step.t_next)) {
    out.state_after_jump += problem.jump_coeff(schedule.marks[*k], out.state_before_jump);
    out.jump_applied = true;
  }
  return out;
}

std::size_t step_budget(double horizon, double h_min, std::size_t jumps) {
  return static_cast<std::size_t>(std::ceil(horizon / h_min)) + 2 * jumps + 2;
}

PathRecord simulate_path(const SjdeProblem& problem, const StepParams& params,
                         WienerSource& noise, const JumpSchedule& schedule,
                         const MapPair& maps, bool keep_nodes) {
  params.validate();
  const double T = problem.horizon;
  const std::size_t budget = step_budget(T, params.h_min(), schedule.size());

  PathRecord rec;
  Vector y = problem.initial_state;
  double t = 0.0;
  while (t < T) {
    if (rec.steps >= budget) {
      throw PathAborted("adaptive path exceeded its step budget of " + std::to_string(budget));
    }
    const StepProposal step = propose_step(y, t, params, schedule.next_after(t), T);
    StepOutcome out = advance(problem, y, t, step, noise, schedule, maps, params.levy);
    ++rec.steps;
    if (out.jump_applied) ++rec.jumps;
    if (out.used_backstop) {
      ++rec.backstop_steps;
      if (out.norm_clamped) {
        ++rec.backstop_norm;
      } else {
        ++rec.backstop_truncated;
      }
    }
    t = out.t_next;
    y = out.state_after_jump;
    if (keep_nodes) rec.nodes.push_back(std::move(out));
    if (!y.allFinite()) throw PathAborted("state left the finite range at t = " + std::to_string(t));
  }
  rec.endpoint = y;
  return rec;
}

PathRecord simulate_fixed_step(const SjdeProblem& problem, const FixedMesh& mesh,
                               WienerSource& noise, const JumpSchedule& schedule,
                               const OneStepMap& map, const LevyPolicy& levy, bool keep_nodes) {
  if (!(mesh.step > 0.0)) throw std::invalid_argument("fixed step must be positive");
  const double T = problem.horizon;

  // Grid node k sits at k * cells * quantum (or k * step without a quantum).
  double spacing = mesh.step;
  double cells = 1.0;
  if (mesh.quantum > 0.0) {
    cells = std::max(1.0, std::round(mesh.step / mesh.quantum));
    spacing = mesh.quantum;
  }
  auto grid_node = [&](std::size_t k) { return static_cast<double>(k) * cells * spacing; };

  PathRecord rec;
  Vector y = problem.initial_state;
  double t = 0.0;
  std::size_t next_grid = 1;
  std::size_t next_jump = 0;
  const std::size_t budget =
      static_cast<std::size_t>(std::ceil(T / (cells * spacing))) + schedule.size() + 2;
  while (t < T) {
    if (rec.steps >= budget) throw PathAborted("fixed-step path exceeded its step budget");
    while (grid_node(next_grid) <= t) ++next_grid;
    double node = std::min(grid_node(next_grid), T);
    while (next_jump < schedule.size() && schedule.times[next_jump] <= t) ++next_jump;
    const bool jump_node = next_jump < schedule.size() && schedule.times[next_jump] <= node;
    if (jump_node) node = schedule.times[next_jump];

    const IteratedIntegrals xi =
        noise.sample_iterated(t, node, problem.noise_class, levy.terms(node - t));
    StepOutcome out;
    out.t_next = node;
    out.h_used = node - t;
    try {
      out.state_before_jump = map(y, xi, problem);
    } catch (const MapFailure& e) {
      throw StepError(map.kind, t, e.what());
    }
    out.state_after_jump = out.state_before_jump;
    if (jump_node) {
      out.state_after_jump += problem.jump_coeff(schedule.marks[next_jump], out.state_before_jump);
      out.jump_applied = true;
      ++rec.jumps;
    }
    ++rec.steps;
    t = node;
    y = out.state_after_jump;
    if (keep_nodes) rec.nodes.push_back(std::move(out));
    if (!y.allFinite()) throw PathAborted("state left the finite range at t = " + std::to_string(t));
  }
  rec.endpoint = y;
  return rec;
}

}  // namespace jaam
