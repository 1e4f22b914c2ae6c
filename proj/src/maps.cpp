#include "jaam/maps.hpp"

#include <cmath>
#include <limits>
#include <Eigen/LU>

namespace jaam {

std::string_view map_id(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::Milstein: return "milstein";
    case MapKind::ProjectedMilstein: return "pmil";
    case MapKind::SplitStepBackward: return "ssbm";
    case MapKind::TamedMilstein: return "tmil";
  }
  return "unknown";
}

std::optional<MapKind> parse_map_id(std::string_view id) noexcept {
  if (id == "milstein") return MapKind::Milstein;
  if (id == "pmil") return MapKind::ProjectedMilstein;
  if (id == "ssbm") return MapKind::SplitStepBackward;
  if (id == "tmil") return MapKind::TamedMilstein;
  return std::nullopt;
}

std::string_view scheme_label(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::Milstein: return "JA-Mil";
    case MapKind::ProjectedMilstein: return "JA-PMil";
    case MapKind::SplitStepBackward: return "JA-SSBM";
    case MapKind::TamedMilstein: return "JA-TMil";
  }
  return "unknown";
}

namespace {

// sum_i g_i(x) dW_i + sum_{i,j} Dg_i(x) g_j(x) I_(j,i)
Vector stochastic_terms(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p) {
  Vector out = p.diffusion(x) * xi.dW;
  if (p.noise_class == NoiseClass::Additive) return out;
  for (int i = 0; i < p.drivers; ++i) {
    for (int j = 0; j < p.drivers; ++j) {
      out += p.diffusion_correction(i, j, x) * xi.i2(j, i);
    }
  }
  return out;
}

Matrix drift_jacobian(const SjdeProblem& p, const Vector& y) {
  if (p.drift_jacobian) return p.drift_jacobian(y);
  Matrix jac(p.dim, p.dim);
  for (int k = 0; k < p.dim; ++k) {
    const double step = 1e-7 * std::max(1.0, std::abs(y[k]));
    Vector plus = y, minus = y;
    plus[k] += step;
    minus[k] -= step;
    jac.col(k) = (p.drift(plus) - p.drift(minus)) / (2.0 * step);
  }
  return jac;
}

}  // namespace

Vector milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p) {
  return x + xi.h * p.drift(x) + stochastic_terms(x, xi, p);
}

double projection_radius(double h, const SjdeProblem& p, const MapParams& params) {
  if (!params.projection_exponent && p.drift_poly_degree <= 1)
    return std::numeric_limits<double>::infinity();
  const double alpha =
      params.projection_exponent.value_or(1.0 / (2.0 * (p.drift_poly_degree - 1)));
  return params.projection_scale * std::pow(h, -alpha);
}

Vector projected_milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p,
                          const MapParams& params) {
  const double radius = projection_radius(xi.h, p, params);
  const double norm = x.norm();
  if (norm <= radius) return milstein(x, xi, p);
  return milstein(Vector(x * (radius / norm)), xi, p);
}

Vector split_step_backward_milstein(const Vector& x, const IteratedIntegrals& xi,
                                    const SjdeProblem& p, const MapParams& params) {
  const double h = xi.h;
  const double tol = params.newton_tol * (1.0 + x.norm());
  auto residual = [&](const Vector& y) -> Vector { return y - x - h * p.drift(y); };

  Vector y = x;
  Vector r = residual(y);
  double r_norm = r.norm();
  int iter = 0;
  while (r_norm > tol) {
    if (iter++ >= params.newton_max_iter)
      throw MapFailure(MapKind::SplitStepBackward, "Newton solve did not converge");
    const Matrix jac = Matrix::Identity(p.dim, p.dim) - h * drift_jacobian(p, y);
    const Vector step = jac.partialPivLu().solve(r);
    // Halve the step while the residual grows.
    double damping = 1.0;
    Vector trial = y - step;
    Vector trial_r = residual(trial);
    for (int k = 0; k < 30 && !(trial_r.norm() < r_norm); ++k) {
      damping *= 0.5;
      trial = y - damping * step;
      trial_r = residual(trial);
    }
    if (!(trial_r.norm() <= r_norm) && !(trial_r.norm() <= tol))
      throw MapFailure(MapKind::SplitStepBackward, "Newton line search stalled");
    y = trial;
    r = trial_r;
    r_norm = r.norm();
  }
  return y + stochastic_terms(y, xi, p);
}

Vector tamed_milstein(const Vector& x, const IteratedIntegrals& xi, const SjdeProblem& p) {
  const Vector f = p.drift(x);
  const Vector increment = xi.h * f + stochastic_terms(x, xi, p);
  return x + increment / (1.0 + xi.h * f.norm());
}

Vector OneStepMap::operator()(const Vector& x, const IteratedIntegrals& xi,
                              const SjdeProblem& p) const {
  switch (kind) {
    case MapKind::Milstein: return milstein(x, xi, p);
    case MapKind::ProjectedMilstein: return projected_milstein(x, xi, p, params);
    case MapKind::SplitStepBackward: return split_step_backward_milstein(x, xi, p, params);
    case MapKind::TamedMilstein: return tamed_milstein(x, xi, p);
  }
  return x;
}

}  // namespace jaam
