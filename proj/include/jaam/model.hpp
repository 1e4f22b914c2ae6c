#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jaam/rng.hpp"
#include "jaam/types.hpp"

namespace jaam {

enum class NoiseClass { Additive, Diagonal, Commutative, NonCommutative };

std::string_view to_string(NoiseClass c) noexcept;

using DriftFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;
/// Full diffusion matrix g(x), d x m; column i is g_i(x).
using DiffusionFn = std::function<Matrix(const Vector&)>;
/// Dg_i(x) g_j(x), the Milstein correction vector for the ordered pair (i, j).
using CorrectionFn = std::function<Vector(int i, int j, const Vector&)>;
using JumpCoeffFn = std::function<Vector(const Vector& mark, const Vector& x)>;
using MarkSampler = std::function<Vector(RandomStream&)>;

/// A jump-diffusion problem
///   dX = f(X) dt + sum_i g_i(X) dW_i + gamma(z, X-) dJ,
/// with jumps arriving at constant intensity and i.i.d. marks.
///
/// Instances are immutable once built and may be shared between threads.
struct SjdeProblem {
  std::string id;
  int dim = 1;
  int drivers = 1;
  DriftFn drift;
  /// Optional analytic Jacobian of the drift; implicit maps fall back to
  /// central differences when empty.
  JacobianFn drift_jacobian;
  DiffusionFn diffusion;
  CorrectionFn diffusion_correction;
  JumpCoeffFn jump_coeff;
  MarkSampler mark_sampler;
  double intensity = 0.0;
  Vector initial_state;
  double horizon = 1.0;
  NoiseClass noise_class = NoiseClass::NonCommutative;
  /// Polynomial degree of the drift. Only used to pick the projection exponent.
  int drift_poly_degree = 3;

  Vector diffusion_col(int i, const Vector& x) const { return diffusion(x).col(i); }

  /// Throws std::invalid_argument on inconsistent dimensions or parameters.
  void validate() const;
};

/// Central-difference stand-in for an analytic Dg_i g_j.
CorrectionFn finite_difference_correction(DiffusionFn diffusion, double step = 1e-6);

MarkSampler gaussian_marks(int mark_dim, double mean, double variance);

// Built-in test systems. Jump coefficient z*x, marks N(0, 0.01), T = 1.
SjdeProblem make_1d_additive(double sigma);
SjdeProblem make_1d_multiplicative(double sigma);

enum class Noise2d { G1, G2, G3 };
SjdeProblem make_2d(Noise2d noise, double sigma);

struct ProblemOverrides {
  std::optional<double> sigma;
  std::optional<double> intensity;
  std::optional<std::vector<double>> initial_state;
  std::optional<double> horizon;
};

/// Ids: "1d-add", "1d-mult", "2d-g1", "2d-g2", "2d-g3".
SjdeProblem make_builtin(std::string_view id, const ProblemOverrides& overrides = {});
const std::vector<std::string>& builtin_ids();

/// True iff max ||Dg_i g_j - Dg_j g_i|| <= tol over a grid of `samples`
/// cell-centred points per axis spanning [-2, 2]^d.
bool check_commutativity(const SjdeProblem& p, int samples, double tol);

}  // namespace jaam
