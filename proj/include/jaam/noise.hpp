#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jaam/model.hpp"
#include "jaam/rng.hpp"
#include "jaam/types.hpp"

namespace jaam {

/// Jump times on (0, T] with one mark per jump, fixed before stepping starts.
struct JumpSchedule {
  std::vector<double> times;
  std::vector<Vector> marks;
  double horizon = 0.0;

  std::size_t size() const noexcept { return times.size(); }
  /// Number of jumps with time <= t.
  std::size_t count(double t) const noexcept;
  /// First jump time strictly after t.
  std::optional<double> next_after(double t) const noexcept;
  /// Index of the jump exactly at t, if any.
  std::optional<std::size_t> index_at(double t) const noexcept;
};

JumpSchedule sample_jump_schedule(double lambda, double horizon, const MarkSampler& marks,
                                  RandomStream& rng);

/// Number of Levy-area series terms per step: `fixed_terms` when positive,
/// else ceil(1/h).
struct LevyPolicy {
  int fixed_terms = 0;
  int terms(double h) const;
};

/// Increments and second-order iterated Ito integrals over one step.
///
/// i2(a, b) is the integral of W_a (inner) against dW_b (outer), so the
/// Milstein correction for the pair (i, j) is Dg_i g_j * i2(j, i).
struct IteratedIntegrals {
  double h = 0.0;
  Vector dW;
  Matrix i2;

  /// Builds i2 from the increment and the antisymmetric Levy area
  /// A(a, b) = (i2(a, b) - i2(b, a)) / 2. Diagonal entries use
  /// (dW^2 - h)/2 directly.
  static IteratedIntegrals from_parts(double h, const Vector& dW, const Matrix& levy_area);

  Matrix levy_area() const;
};

/// Kloeden-Platen-Wright truncated Fourier series for the Levy areas of an
/// m-dimensional Brownian increment over a step of length h, with the
/// Gaussian tail correction on the mean-of-bridge coefficients.
Matrix sample_levy_area(double h, const Vector& dW, int terms, RandomStream& rng);

class PathConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class WienerMode { OnDemand, FineGridCoupled };

/// Brownian increments for one trajectory.
///
/// OnDemand draws fresh Gaussian increments for successive, non-overlapping
/// intervals. FineGridCoupled holds one Brownian path fixed on a grid of
/// spacing h_ref (increments and, when needed, Levy areas per cell). Any
/// interval can be queried; off-grid endpoints are inserted by Brownian-bridge
/// refinement and cached, so every query sees the same path.
class WienerSource {
 public:
  static WienerSource on_demand(int drivers, double horizon, RandomStream stream,
                                LevyPolicy levy = {});

  /// Path determined by (master_seed, path_index): the Wiener, Levy and
  /// Bridge streams of that path.
  static WienerSource fine_grid(int drivers, double horizon, double h_ref,
                                std::uint64_t master_seed, std::uint64_t path_index,
                                bool store_levy_area, LevyPolicy levy = {});

  /// Coupled source over caller-supplied cell increments, laid out
  /// cell-major (cell k, driver i at k * drivers + i). No Levy areas.
  static WienerSource from_fine_increments(int drivers, double horizon, double h_ref,
                                           std::vector<double> increments,
                                           std::uint64_t bridge_key);

  WienerSource(WienerSource&&) noexcept;
  WienerSource& operator=(WienerSource&&) noexcept;
  ~WienerSource();

  WienerMode mode() const noexcept;
  int drivers() const noexcept;
  double horizon() const noexcept;
  /// Fine grid spacing; 0 in OnDemand mode.
  double h_ref() const noexcept;
  std::size_t cells() const noexcept;
  /// k * h_ref, or the horizon for the last node.
  double grid_time(std::size_t k) const noexcept;
  bool on_grid(double t) const noexcept;

  /// Inserts u as a node of the coupled path (no-op if already a node).
  void refine_at(double u);

  /// W(t) - W(s).
  Vector increment(double s, double t);

  /// W(u) - W(cell_start) for a point inside a single fine cell, conditional
  /// on the stored cell increment. The split is cached.
  Vector bridge_increment(double cell_start, double cell_end, double u);

  /// Increments and iterated integrals over [s, t]. Off-diagonal terms are
  /// the symmetric split dW_i dW_j / 2 except for NonCommutative noise with
  /// m >= 2, where the Levy area is added.
  IteratedIntegrals sample_iterated(double s, double t, NoiseClass noise_class,
                                    int levy_terms = 0);

 private:
  struct Impl;
  explicit WienerSource(std::unique_ptr<Impl> impl);
  static std::unique_ptr<Impl> coupled_skeleton(int drivers, double horizon, double h_ref);
  std::unique_ptr<Impl> impl_;
};

}  // namespace jaam
