#include "jaam/model.hpp"

#include <cmath>
#include <stdexcept>

namespace jaam {

std::string_view to_string(NoiseClass c) noexcept {
  switch (c) {
    case NoiseClass::Additive: return "additive";
    case NoiseClass::Diagonal: return "diagonal";
    case NoiseClass::Commutative: return "commutative";
    case NoiseClass::NonCommutative: return "non-commutative";
  }
  return "unknown";
}

void SjdeProblem::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("problem dimension out of range");
  if (drivers < 1 || drivers > kMaxDim) throw std::invalid_argument("driver count out of range");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(intensity >= 0.0)) throw std::invalid_argument("jump intensity must be non-negative");
  if (initial_state.size() != dim) throw std::invalid_argument("initial state has wrong dimension");
  if (!drift || !diffusion || !diffusion_correction || !jump_coeff || !mark_sampler)
    throw std::invalid_argument("problem '" + id + "' has an unset coefficient");
}

CorrectionFn finite_difference_correction(DiffusionFn diffusion, double step) {
  return [diffusion = std::move(diffusion), step](int i, int j, const Vector& x) -> Vector {
    const Vector direction = diffusion(x).col(j);
    const Vector plus = diffusion(x + step * direction).col(i);
    const Vector minus = diffusion(x - step * direction).col(i);
    return (plus - minus) / (2.0 * step);
  };
}

MarkSampler gaussian_marks(int mark_dim, double mean, double variance) {
  if (variance < 0.0) throw std::invalid_argument("mark variance must be non-negative");
  const double sd = std::sqrt(variance);
  return [mark_dim, mean, sd](RandomStream& rng) {
    Vector z(mark_dim);
    for (int k = 0; k < mark_dim; ++k) z[k] = mean + sd * rng.normal();
    return z;
  };
}

namespace {

constexpr double kMarkVariance = 0.01;

Vector scalar_jump(const Vector& mark, const Vector& x) { return mark[0] * x; }

SjdeProblem scalar_base(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  SjdeProblem p;
  p.dim = 1;
  p.drivers = 1;
  p.drift = [](const Vector& x) {
    Vector out(1);
    out[0] = x[0] - 3.0 * x[0] * x[0] * x[0];
    return out;
  };
  p.drift_jacobian = [](const Vector& x) {
    Matrix out(1, 1);
    out(0, 0) = 1.0 - 9.0 * x[0] * x[0];
    return out;
  };
  p.jump_coeff = scalar_jump;
  p.mark_sampler = gaussian_marks(1, 0.0, kMarkVariance);
  p.intensity = 2.0;
  p.initial_state = Vector::Constant(1, 0.5);
  p.horizon = 1.0;
  p.drift_poly_degree = 3;
  return p;
}

}  // namespace

SjdeProblem make_1d_additive(double sigma) {
  SjdeProblem p = scalar_base(sigma);
  p.id = "1d-add";
  p.noise_class = NoiseClass::Additive;
  p.diffusion = [sigma](const Vector&) { return Matrix::Constant(1, 1, sigma); };
  p.diffusion_correction = [](int, int, const Vector&) { return Vector::Zero(1); };
  return p;
}

SjdeProblem make_1d_multiplicative(double sigma) {
  SjdeProblem p = scalar_base(sigma);
  p.id = "1d-mult";
  p.noise_class = NoiseClass::Diagonal;
  p.diffusion = [sigma](const Vector& x) {
    return Matrix::Constant(1, 1, sigma * (1.0 - x[0] * x[0]));
  };
  p.diffusion_correction = [sigma](int, int, const Vector& x) {
    return Vector::Constant(1, (-2.0 * sigma * x[0]) * (sigma * (1.0 - x[0] * x[0])));
  };
  return p;
}

SjdeProblem make_2d(Noise2d noise, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  SjdeProblem p;
  p.dim = 2;
  p.drivers = 2;
  p.drift = [](const Vector& x) {
    Vector out(2);
    out << x[1] - 3.0 * x[0] * x[0] * x[0], x[0] - 3.0 * x[1] * x[1] * x[1];
    return out;
  };
  p.drift_jacobian = [](const Vector& x) {
    Matrix out(2, 2);
    out << -9.0 * x[0] * x[0], 1.0, 1.0, -9.0 * x[1] * x[1];
    return out;
  };
  p.jump_coeff = scalar_jump;
  p.mark_sampler = gaussian_marks(1, 0.0, kMarkVariance);
  p.intensity = 2.5;
  p.initial_state = Vector(2);
  p.initial_state << 0.5, 0.7;
  p.horizon = 1.0;
  p.drift_poly_degree = 3;

  const double s2 = sigma * sigma;
  switch (noise) {
    case Noise2d::G1:
      p.id = "2d-g1";
      p.noise_class = NoiseClass::Diagonal;
      p.diffusion = [sigma](const Vector& x) {
        Matrix g(2, 2);
        g << sigma * x[0] * x[0], 0.0, 0.0, sigma * x[1] * x[1];
        return g;
      };
      // Dg_1 = sigma diag(2x1, 0), Dg_2 = sigma diag(0, 2x2).
      p.diffusion_correction = [s2](int i, int j, const Vector& x) {
        Vector out = Vector::Zero(2);
        if (i == j) out[i] = 2.0 * s2 * x[i] * x[i] * x[i];
        return out;
      };
      break;
    case Noise2d::G2:
      p.id = "2d-g2";
      p.noise_class = NoiseClass::Commutative;
      p.diffusion = [sigma](const Vector& x) {
        Matrix g(2, 2);
        g << sigma * x[1] * x[1], sigma * x[1] * x[1], sigma * x[0] * x[0], sigma * x[0] * x[0];
        return g;
      };
      // Both columns equal sigma [x2^2, x1^2]; Dg = sigma [[0, 2x2], [2x1, 0]].
      p.diffusion_correction = [s2](int, int, const Vector& x) {
        Vector out(2);
        out << 2.0 * s2 * x[1] * x[0] * x[0], 2.0 * s2 * x[0] * x[1] * x[1];
        return out;
      };
      break;
    case Noise2d::G3:
      p.id = "2d-g3";
      p.noise_class = NoiseClass::NonCommutative;
      p.diffusion = [sigma](const Vector& x) {
        Matrix g(2, 2);
        g << sigma * 1.5 * x[0] * x[0], sigma * x[1], sigma * x[1] * x[1], sigma * 1.5 * x[0];
        return g;
      };
      // Dg_1 = sigma [[3x1, 0], [0, 2x2]], Dg_2 = sigma [[0, 1], [1.5, 0]].
      p.diffusion_correction = [s2](int i, int j, const Vector& x) {
        Vector out(2);
        if (i == 0 && j == 0) {
          out << 4.5 * x[0] * x[0] * x[0], 2.0 * x[1] * x[1] * x[1];
        } else if (i == 0) {
          out << 3.0 * x[0] * x[1], 3.0 * x[0] * x[1];
        } else if (j == 0) {
          out << x[1] * x[1], 2.25 * x[0] * x[0];
        } else {
          out << 1.5 * x[0], 1.5 * x[1];
        }
        return Vector(s2 * out);
      };
      break;
  }
  return p;
}

const std::vector<std::string>& builtin_ids() {
  static const std::vector<std::string> ids{"1d-add", "1d-mult", "2d-g1", "2d-g2", "2d-g3"};
  return ids;
}

SjdeProblem make_builtin(std::string_view id, const ProblemOverrides& overrides) {
  const double sigma = overrides.sigma.value_or(0.2);
  SjdeProblem p;
  if (id == "1d-add") {
    p = make_1d_additive(sigma);
  } else if (id == "1d-mult") {
    p = make_1d_multiplicative(sigma);
  } else if (id == "2d-g1") {
    p = make_2d(Noise2d::G1, sigma);
  } else if (id == "2d-g2") {
    p = make_2d(Noise2d::G2, sigma);
  } else if (id == "2d-g3") {
    p = make_2d(Noise2d::G3, sigma);
  } else {
    throw std::invalid_argument("unknown problem id '" + std::string(id) + "'");
  }
  if (overrides.intensity) p.intensity = *overrides.intensity;
  if (overrides.horizon) p.horizon = *overrides.horizon;
  if (overrides.initial_state) {
    const auto& x0 = *overrides.initial_state;
    if (static_cast<int>(x0.size()) != p.dim)
      throw std::invalid_argument("initial state override has wrong dimension for " + p.id);
    for (int k = 0; k < p.dim; ++k) p.initial_state[k] = x0[k];
  }
  p.validate();
  return p;
}

bool check_commutativity(const SjdeProblem& p, int samples, double tol) {
  if (samples < 1) throw std::invalid_argument("samples must be at least 1");
  if (p.drivers == 1) return true;

  long total = 1;
  for (int k = 0; k < p.dim; ++k) total *= samples;
  Vector x(p.dim);
  for (long flat = 0; flat < total; ++flat) {
    long rest = flat;
    for (int k = 0; k < p.dim; ++k) {
      const long idx = rest % samples;
      rest /= samples;
      x[k] = -2.0 + 4.0 * (static_cast<double>(idx) + 0.5) / samples;
    }
    for (int i = 0; i < p.drivers; ++i) {
      for (int j = i + 1; j < p.drivers; ++j) {
        const Vector gap = p.diffusion_correction(i, j, x) - p.diffusion_correction(j, i, x);
        if (gap.norm() > tol) return false;
      }
    }
  }
  return true;
}

}  // namespace jaam
