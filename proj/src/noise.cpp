#include "jaam/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace jaam {

// ---------------------------------------------------------------- schedule

std::size_t JumpSchedule::count(double t) const noexcept {
  return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

std::optional<double> JumpSchedule::next_after(double t) const noexcept {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.end()) return std::nullopt;
  return *it;
}

std::optional<std::size_t> JumpSchedule::index_at(double t) const noexcept {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

JumpSchedule sample_jump_schedule(double lambda, double horizon, const MarkSampler& marks,
                                  RandomStream& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("jump schedule horizon must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("jump intensity must be non-negative");
  JumpSchedule schedule;
  schedule.horizon = horizon;
  if (lambda == 0.0) return schedule;
  double t = 0.0;
  for (;;) {
    double next = t + rng.exponential(lambda);
    if (next > horizon) break;
    // Two jumps can only coincide through rounding; keep times strictly increasing.
    if (next <= t) next = std::nextafter(t, horizon + 1.0);
    t = next;
    schedule.times.push_back(t);
    schedule.marks.push_back(marks(rng));
  }
  return schedule;
}

// ---------------------------------------------------------------- iterated integrals

int LevyPolicy::terms(double h) const {
  if (fixed_terms > 0) return fixed_terms;
  return std::max(1, static_cast<int>(std::ceil(1.0 / h - 1e-9)));
}

IteratedIntegrals IteratedIntegrals::from_parts(double h, const Vector& dW,
                                                const Matrix& levy_area) {
  const int m = static_cast<int>(dW.size());
  IteratedIntegrals xi;
  xi.h = h;
  xi.dW = dW;
  xi.i2.resize(m, m);
  for (int a = 0; a < m; ++a) {
    xi.i2(a, a) = 0.5 * (dW[a] * dW[a] - h);
    for (int b = a + 1; b < m; ++b) {
      const double sym = 0.5 * dW[a] * dW[b];
      const double area = levy_area.size() == 0 ? 0.0 : levy_area(a, b);
      xi.i2(a, b) = sym + area;
      xi.i2(b, a) = sym - area;
    }
  }
  return xi;
}

Matrix IteratedIntegrals::levy_area() const {
  return Matrix(0.5 * (i2 - i2.transpose()));
}

Matrix sample_levy_area(double h, const Vector& dW, int terms, RandomStream& rng) {
  if (terms < 1) throw std::invalid_argument("Levy area needs at least one series term");
  const int m = static_cast<int>(dW.size());
  const double pi = std::numbers::pi;

  Matrix area = Matrix::Zero(m, m);
  Vector a0 = Vector::Zero(m);
  Vector xi(m), eta(m);
  double partial = 0.0;
  for (int r = 1; r <= terms; ++r) {
    for (int j = 0; j < m; ++j) {
      xi[j] = rng.normal();
      eta[j] = rng.normal();
    }
    const double inv_r = 1.0 / r;
    partial += inv_r * inv_r;
    for (int a = 0; a < m; ++a) {
      a0[a] += xi[a] * inv_r;
      for (int b = a + 1; b < m; ++b) area(a, b) += inv_r * (xi[a] * eta[b] - eta[a] * xi[b]);
    }
  }
  // Tail of the mean-of-bridge coefficient: variance h/3 in total.
  const double tail = std::max(0.0, 1.0 / 12.0 - partial / (2.0 * pi * pi));
  for (int j = 0; j < m; ++j) {
    a0[j] = -(std::sqrt(2.0 * h) / pi) * a0[j] - 2.0 * std::sqrt(h * tail) * rng.normal();
  }
  const double scale = h / (2.0 * pi);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const double v = scale * area(a, b) + 0.5 * (a0[b] * dW[a] - a0[a] * dW[b]);
      area(a, b) = v;
      area(b, a) = -v;
    }
  }
  return area;
}

// ---------------------------------------------------------------- Wiener source

namespace {

struct Piece {
  double end;
  Vector dW;
  Matrix area;  // empty when areas are not tracked
};

}  // namespace

struct WienerSource::Impl {
  WienerMode mode = WienerMode::OnDemand;
  int m = 1;
  double horizon = 1.0;
  LevyPolicy levy;

  // OnDemand
  std::optional<RandomStream> stream;
  double consumed = 0.0;

  // FineGridCoupled
  double h_ref = 0.0;
  std::size_t n = 0;
  std::vector<double> dw;  // n * m, cell-major
  std::vector<Matrix> areas;
  std::uint64_t bridge_key = 0;
  std::unordered_map<std::size_t, std::vector<Piece>> splits;

  bool with_area() const { return !areas.empty(); }

  double grid_time(std::size_t k) const {
    return k >= n ? horizon : static_cast<double>(k) * h_ref;
  }

  std::optional<std::size_t> node_index(double t) const {
    const double q = t / h_ref;
    if (q < -0.5 || q > static_cast<double>(n) + 0.5) return std::nullopt;
    const auto k = static_cast<std::size_t>(std::llround(q));
    if (grid_time(std::min(k, n)) == t) return std::min(k, n);
    if (t == horizon) return n;
    return std::nullopt;
  }

  std::size_t cell_containing(double u) const {
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(u / h_ref)));
    if (k >= n) k = n - 1;
    while (k > 0 && grid_time(k) > u) --k;
    while (k + 1 < n && grid_time(k + 1) <= u) ++k;
    return k;
  }

  Vector cell_dw(std::size_t k) const {
    Vector v(m);
    for (int i = 0; i < m; ++i) v[i] = dw[k * m + i];
    return v;
  }

  std::vector<Piece>& pieces(std::size_t k) {
    auto [it, inserted] = splits.try_emplace(k);
    if (inserted) {
      it->second.push_back(
          Piece{grid_time(k + 1), cell_dw(k), with_area() ? areas[k] : Matrix()});
    }
    return it->second;
  }

  void ensure_node(double u) {
    if (node_index(u)) return;
    const std::size_t k = cell_containing(u);
    auto& list = pieces(k);
    double start = grid_time(k);
    for (std::size_t p = 0; p < list.size(); ++p) {
      if (list[p].end == u) return;
      if (u < list[p].end) {
        split(k, list, p, start, u);
        return;
      }
      start = list[p].end;
    }
    throw std::logic_error("bridge point outside its cell");
  }

  void split(std::size_t k, std::vector<Piece>& list, std::size_t p, double start, double u) {
    Piece& whole = list[p];
    const double end = whole.end;
    const double len = end - start;
    const double frac = (u - start) / len;
    const double sd = std::sqrt((u - start) * (end - u) / len);
    RandomStream rng(bridge_key, (static_cast<std::uint64_t>(k) << 20) | list.size());

    Vector first(m);
    for (int i = 0; i < m; ++i) first[i] = frac * whole.dW[i] + sd * rng.normal();
    Vector second = whole.dW - first;

    Matrix first_area, second_area;
    if (with_area()) {
      first_area = sample_levy_area(u - start, first, levy.terms(h_ref), rng);
      // Chen: A = A1 + A2 + (dW1 dW2^T - dW2 dW1^T) / 2.
      second_area = whole.area - first_area -
                    0.5 * (first * second.transpose() - second * first.transpose());
    }
    Piece head{u, std::move(first), std::move(first_area)};
    whole.dW = std::move(second);
    whole.area = std::move(second_area);
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(p), std::move(head));
  }

  // Chen-accumulated increment and (optionally) Levy area over [s, t].
  void accumulate(double s, double t, bool need_area, Vector& total, Matrix& area) {
    if (!(t > s)) throw std::invalid_argument("increment interval must have t > s");
    if (s < 0.0 || t > horizon) throw std::invalid_argument("increment interval outside [0, T]");
    need_area = need_area && with_area();
    ensure_node(s);
    ensure_node(t);

    total = Vector::Zero(m);
    area = need_area ? Matrix::Zero(m, m) : Matrix();
    auto add = [&](const Vector& d, const Matrix& a) {
      if (need_area) area += a + 0.5 * (total * d.transpose() - d * total.transpose());
      total += d;
    };

    std::size_t k = node_index(s).value_or(cell_containing(s));
    double cur = s;
    while (cur < t && k < n) {
      auto it = splits.find(k);
      const bool whole_cell = cur == grid_time(k) && grid_time(k + 1) <= t;
      if (it == splits.end() || whole_cell) {
        if (need_area) {
          add(cell_dw(k), areas[k]);
        } else {
          for (int i = 0; i < m; ++i) total[i] += dw[k * m + i];
        }
        cur = grid_time(k + 1);
      } else {
        for (const Piece& piece : it->second) {
          if (piece.end <= cur) continue;
          if (cur >= t) break;
          add(piece.dW, piece.area);
          cur = piece.end;
        }
      }
      ++k;
    }
  }
};

WienerSource::WienerSource(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
WienerSource::WienerSource(WienerSource&&) noexcept = default;
WienerSource& WienerSource::operator=(WienerSource&&) noexcept = default;
WienerSource::~WienerSource() = default;

WienerSource WienerSource::on_demand(int drivers, double horizon, RandomStream stream,
                                     LevyPolicy levy) {
  if (drivers < 1 || drivers > kMaxDim) throw std::invalid_argument("bad driver count");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  auto impl = std::make_unique<Impl>();
  impl->mode = WienerMode::OnDemand;
  impl->m = drivers;
  impl->horizon = horizon;
  impl->levy = levy;
  impl->stream.emplace(stream);
  return WienerSource(std::move(impl));
}

std::unique_ptr<WienerSource::Impl> WienerSource::coupled_skeleton(int drivers, double horizon,
                                                                   double h_ref) {
  if (drivers < 1 || drivers > kMaxDim) throw std::invalid_argument("bad driver count");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(h_ref > 0.0) || h_ref > horizon) throw std::invalid_argument("bad reference spacing");
  auto impl = std::make_unique<WienerSource::Impl>();
  impl->mode = WienerMode::FineGridCoupled;
  impl->m = drivers;
  impl->horizon = horizon;
  impl->h_ref = h_ref;
  impl->n = static_cast<std::size_t>(std::ceil(horizon / h_ref - 1e-9));
  return impl;
}

WienerSource WienerSource::fine_grid(int drivers, double horizon, double h_ref,
                                     std::uint64_t master_seed, std::uint64_t path_index,
                                     bool store_levy_area, LevyPolicy levy) {
  auto impl = coupled_skeleton(drivers, horizon, h_ref);
  impl->levy = levy;
  impl->bridge_key = derive_key(master_seed, path_index, static_cast<std::uint64_t>(StreamTag::Bridge));

  RandomStream wiener = RandomStream::for_path(master_seed, path_index, StreamTag::Wiener);
  impl->dw.resize(impl->n * drivers);
  for (std::size_t k = 0; k < impl->n; ++k) {
    const double sd = std::sqrt(impl->grid_time(k + 1) - impl->grid_time(k));
    for (int i = 0; i < drivers; ++i) impl->dw[k * drivers + i] = sd * wiener.normal();
  }
  if (store_levy_area && drivers >= 2) {
    RandomStream levy_rng = RandomStream::for_path(master_seed, path_index, StreamTag::Levy);
    const int terms = levy.terms(h_ref);
    impl->areas.reserve(impl->n);
    for (std::size_t k = 0; k < impl->n; ++k) {
      const double len = impl->grid_time(k + 1) - impl->grid_time(k);
      impl->areas.push_back(sample_levy_area(len, impl->cell_dw(k), terms, levy_rng));
    }
  }
  return WienerSource(std::move(impl));
}

WienerSource WienerSource::from_fine_increments(int drivers, double horizon, double h_ref,
                                                std::vector<double> increments,
                                                std::uint64_t bridge_key) {
  auto impl = coupled_skeleton(drivers, horizon, h_ref);
  if (increments.size() != impl->n * static_cast<std::size_t>(drivers))
    throw std::invalid_argument("increment count does not match grid");
  impl->dw = std::move(increments);
  impl->bridge_key = bridge_key;
  return WienerSource(std::move(impl));
}

WienerMode WienerSource::mode() const noexcept { return impl_->mode; }
int WienerSource::drivers() const noexcept { return impl_->m; }
double WienerSource::horizon() const noexcept { return impl_->horizon; }
double WienerSource::h_ref() const noexcept { return impl_->h_ref; }
std::size_t WienerSource::cells() const noexcept { return impl_->n; }

double WienerSource::grid_time(std::size_t k) const noexcept { return impl_->grid_time(k); }

bool WienerSource::on_grid(double t) const noexcept {
  return impl_->mode == WienerMode::FineGridCoupled && impl_->node_index(t).has_value();
}

void WienerSource::refine_at(double u) {
  if (impl_->mode != WienerMode::FineGridCoupled)
    throw std::logic_error("refine_at needs a fine-grid source");
  if (!(u > 0.0 && u < impl_->horizon)) throw std::invalid_argument("refinement point outside (0, T)");
  impl_->ensure_node(u);
}

Vector WienerSource::increment(double s, double t) {
  Impl& w = *impl_;
  if (w.mode == WienerMode::OnDemand) {
    if (!(t > s)) throw std::invalid_argument("increment interval must have t > s");
    if (s < w.consumed) {
      throw PathConsistencyError("on-demand Wiener query re-enters an already consumed interval");
    }
    w.consumed = t;
    const double sd = std::sqrt(t - s);
    Vector d(w.m);
    for (int i = 0; i < w.m; ++i) d[i] = sd * w.stream->normal();
    return d;
  }
  Vector total;
  Matrix area;
  w.accumulate(s, t, false, total, area);
  return total;
}

Vector WienerSource::bridge_increment(double cell_start, double cell_end, double u) {
  Impl& w = *impl_;
  if (w.mode != WienerMode::FineGridCoupled)
    throw std::logic_error("bridge_increment needs a fine-grid source");
  const auto k = w.node_index(cell_start);
  if (!k || *k >= w.n || w.grid_time(*k + 1) != cell_end)
    throw std::invalid_argument("bridge cell endpoints must be adjacent grid nodes");
  if (!(u > cell_start && u < cell_end))
    throw std::invalid_argument("bridge point must lie strictly inside the cell");
  return increment(cell_start, u);
}

IteratedIntegrals WienerSource::sample_iterated(double s, double t, NoiseClass noise_class,
                                                int levy_terms) {
  if (!(t > s)) throw std::invalid_argument("iterated integrals need t > s");
  Impl& w = *impl_;
  const double h = t - s;
  const bool need_area = noise_class == NoiseClass::NonCommutative && w.m >= 2;

  if (w.mode == WienerMode::OnDemand) {
    Vector d = increment(s, t);
    if (!need_area) return IteratedIntegrals::from_parts(h, d, Matrix());
    const int terms = levy_terms > 0 ? levy_terms : w.levy.terms(h);
    return IteratedIntegrals::from_parts(h, d, sample_levy_area(h, d, terms, *w.stream));
  }

  if (need_area && !w.with_area())
    throw std::logic_error("fine-grid source was built without Levy areas");
  Vector total;
  Matrix area;
  w.accumulate(s, t, need_area, total, area);
  return IteratedIntegrals::from_parts(h, total, area);
}

}  // namespace jaam
