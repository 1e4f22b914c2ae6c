#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jaam/maps.hpp"
#include "jaam/model.hpp"
#include "jaam/noise.hpp"
#include "jaam/types.hpp"

namespace jaam {

/// When the backstop map takes a step.
///  Literal:  every step with h <= h_min, including steps cut short by a jump
///            time or the final time.
///  NormOnly: only steps whose adaptive candidate was clamped to h_min
///            because ||y|| was too large.
enum class BackstopRule { Literal, NormOnly };

struct StepParams {
  double h_max = 0.0;
  double rho = 128.0;
  double kappa = 1.0;
  /// Grid the adaptive candidate is rounded down to (0: no rounding). Set to
  /// the reference spacing when errors are measured against a coupled path.
  double quantum = 0.0;
  BackstopRule rule = BackstopRule::Literal;
  LevyPolicy levy;

  double h_min() const noexcept { return h_max / rho; }
  /// Bound R = rho^kappa on ||Y(t_n)|| whenever the main map is used.
  double path_bound() const;
  void validate() const;
};

struct StepProposal {
  double t_next = 0.0;
  double h = 0.0;
  bool use_backstop = false;
  /// The adaptive candidate h_max / ||y||^(1/kappa) fell to h_min or below.
  bool norm_clamped = false;
  /// The step was shortened to land on a jump time or on T.
  bool truncated = false;
};

/// Step-size rule
///   h = min(clamp(h_max / ||y||^(1/kappa), h_min, h_max), next_jump - t, T - t).
/// When the step lands on a jump time or on T, t_next is that time exactly.
StepProposal propose_step(const Vector& y, double t, const StepParams& params,
                          std::optional<double> next_jump, double horizon);

struct StepOutcome {
  double t_next = 0.0;
  Vector state_before_jump;
  Vector state_after_jump;
  double h_used = 0.0;
  bool used_backstop = false;
  bool jump_applied = false;
  bool norm_clamped = false;
};

struct MapPair {
  OneStepMap main{MapKind::Milstein, {}};
  OneStepMap backstop{MapKind::ProjectedMilstein, {}};
};

/// Raised when a map fails inside a step; carries the failing map and time.
class StepError : public std::runtime_error {
 public:
  StepError(MapKind kind, double t, const std::string& what)
      : std::runtime_error(what), kind_(kind), t_(t) {}
  MapKind kind() const noexcept { return kind_; }
  double time() const noexcept { return t_; }

 private:
  MapKind kind_;
  double t_;
};

/// Raised when a path exceeds its step budget or its state stops being finite.
class PathAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One step of the hybrid scheme: main or backstop map over [t, t_next],
/// then the jump at t_next if the schedule has one there.
StepOutcome advance(const SjdeProblem& problem, const Vector& y, double t,
                    const StepProposal& step, WienerSource& noise,
                    const JumpSchedule& schedule, const MapPair& maps,
                    const LevyPolicy& levy = {});

struct PathRecord {
  std::vector<StepOutcome> nodes;
  Vector endpoint;
  std::size_t steps = 0;
  std::size_t jumps = 0;
  std::size_t backstop_steps = 0;
  /// Backstop steps triggered by the norm clamp.
  std::size_t backstop_norm = 0;
  /// Backstop steps caused only by landing on a jump time or on T.
  std::size_t backstop_truncated = 0;
};

/// ceil(T / h_min) + 2 * jumps + 2.
std::size_t step_budget(double horizon, double h_min, std::size_t jumps);

/// Adaptive jump-adapted path from (0, X0) to T.
PathRecord simulate_path(const SjdeProblem& problem, const StepParams& params,
                         WienerSource& noise, const JumpSchedule& schedule,
                         const MapPair& maps, bool keep_nodes = true);

/// Equidistant mesh of spacing `step` superposed with the jump times. With
/// `quantum` > 0 the spacing is taken as round(step / quantum) cells of the
/// coupled grid and node times are computed from cell indices, so they fall
/// exactly on the grid.
struct FixedMesh {
  double step = 0.0;
  double quantum = 0.0;
};

PathRecord simulate_fixed_step(const SjdeProblem& problem, const FixedMesh& mesh,
                               WienerSource& noise, const JumpSchedule& schedule,
                               const OneStepMap& map, const LevyPolicy& levy = {},
                               bool keep_nodes = false);

}  // namespace jaam
