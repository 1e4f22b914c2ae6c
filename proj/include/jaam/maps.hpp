#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "jaam/model.hpp"
#include "jaam/noise.hpp"
#include "jaam/types.hpp"

namespace jaam {

enum class MapKind { Milstein, ProjectedMilstein, SplitStepBackward, TamedMilstein };

/// Config ids: "milstein", "pmil", "ssbm", "tmil".
std::string_view map_id(MapKind kind) noexcept;
std::optional<MapKind> parse_map_id(std::string_view id) noexcept;
/// Display name of the jump-adapted fixed-step scheme built on a map, e.g. "JA-PMil".
std::string_view scheme_label(MapKind kind) noexcept;

struct MapParams {
  double projection_scale = 0.25;
  /// Projection exponent; when unset, 1 / (2 (q - 1)) with q the drift degree.
  std::optional<double> projection_exponent;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
};

/// Raised when an implicit map fails to converge.
class MapFailure : public std::runtime_error {
 public:
  MapFailure(MapKind kind, const std::string& what)
      : std::runtime_error(std::string(map_id(kind)) + ": " + what), kind_(kind) {}
  MapKind kind() const noexcept { return kind_; }

 private:
  MapKind kind_;
};

// x + h f(x) + sum_i g_i(x) dW_i + sum_{i,j} Dg_i(x) g_j(x) I_(j,i)
Vector milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p);

/// theta * h^-alpha; unbounded for drifts of degree <= 1 unless alpha is set.
double projection_radius(double h, const SjdeProblem& p, const MapParams& params);

/// Milstein applied to x scaled back onto the ball of radius theta * h^-alpha.
Vector projected_milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p,
                          const MapParams& params = {});

/// Solves y = x + h f(y) by damped Newton, then adds the Milstein stochastic
/// terms evaluated at y. Throws MapFailure if the residual does not drop
/// below tol * (1 + ||x||) within the iteration cap.
Vector split_step_backward_milstein(const Vector& x, const IteratedIntegrals& xi,
                                    const SjdeProblem& p, const MapParams& params = {});

/// Whole increment divided by 1 + h ||f(x)||.
Vector tamed_milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p);

/// Stateless one-step map selected by id; a pure function of (x, h, xi).
struct OneStepMap {
  MapKind kind = MapKind::Milstein;
  MapParams params;

  Vector operator()(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p) const;
};

}  // namespace jaam
