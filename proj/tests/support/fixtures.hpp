#pragma once

#include <cmath>
#include <string>

#include "jaam/model.hpp"

namespace jaam::testing {

// dX = gamma(z, X-) dJ with gamma(z, x) = z x and no diffusion.
inline SjdeProblem pure_jump(int dim, double lambda, double horizon = 1.0, double x0 = 0.5) {
  SjdeProblem p;
  p.id = "pure-jump";
  p.dim = dim;
  p.drivers = 1;
  p.drift = [dim](const Vector&) { return Vector(Vector::Zero(dim)); };
  p.diffusion = [dim](const Vector&) { return Matrix(Matrix::Zero(dim, 1)); };
  p.diffusion_correction = [dim](int, int, const Vector&) { return Vector(Vector::Zero(dim)); };
  p.jump_coeff = [](const Vector& z, const Vector& x) { return Vector(z[0] * x); };
  p.mark_sampler = gaussian_marks(1, 0.0, 0.01);
  p.intensity = lambda;
  p.initial_state = Vector::Constant(dim, x0);
  p.horizon = horizon;
  p.noise_class = NoiseClass::Additive;
  p.drift_poly_degree = 1;
  return p;
}

// f = 0, g = 0, gamma = 0.
inline SjdeProblem inert(int dim, double x0 = 0.5) {
  SjdeProblem p = pure_jump(dim, 0.0, 1.0, x0);
  p.id = "inert";
  p.jump_coeff = [dim](const Vector&, const Vector&) { return Vector(Vector::Zero(dim)); };
  return p;
}

// Scalar f = 0, g(x) = x.
inline SjdeProblem geometric() {
  SjdeProblem p = inert(1);
  p.id = "geometric";
  p.diffusion = [](const Vector& x) { return Matrix(Matrix::Constant(1, 1, x[0])); };
  p.diffusion_correction = [](int, int, const Vector& x) { return Vector(x); };
  p.noise_class = NoiseClass::Diagonal;
  return p;
}

// Scalar f(x) = a x, no noise.
inline SjdeProblem linear_drift(double a) {
  SjdeProblem p = inert(1);
  p.id = "linear";
  p.drift = [a](const Vector& x) { return Vector(a * x); };
  return p;
}

// Scalar f = 0, g = sigma.
inline SjdeProblem driftless_additive(double sigma) {
  SjdeProblem p = inert(1);
  p.id = "driftless";
  p.diffusion = [sigma](const Vector&) { return Matrix(Matrix::Constant(1, 1, sigma)); };
  return p;
}

inline SjdeProblem builtin(const std::string& id, double lambda) {
  ProblemOverrides o;
  o.intensity = lambda;
  return make_builtin(id, o);
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace jaam::testing
