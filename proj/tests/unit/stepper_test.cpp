#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "jaam/stepper.hpp"

using namespace jaam;
using jaam::testing::vec;

namespace {

StepParams params(double h_max, double rho = 128.0, double kappa = 1.0) {
  StepParams p;
  p.h_max = h_max;
  p.rho = rho;
  p.kappa = kappa;
  return p;
}

JumpSchedule schedule_of(std::vector<double> times, std::vector<double> marks, double T) {
  JumpSchedule s;
  s.times = std::move(times);
  for (double z : marks) s.marks.push_back(vec({z}));
  s.horizon = T;
  return s;
}

}  // namespace

TEST_SUITE("stepper") {

TEST_CASE("step parameters") {
  const StepParams p = params(0.5, 128.0, 1.0);
  CHECK(p.h_min() == 0.5 / 128);
  CHECK(p.path_bound() == 128.0);
  CHECK(params(0.5, 8.0, 2.0).path_bound() == 64.0);
  CHECK_THROWS_AS(params(0.5, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(0.5, 2.0, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(0.0).validate(), std::invalid_argument);
  CHECK(step_budget(1.0, 0.01, 3) == 100 + 6 + 2);
}

TEST_CASE("step proposals") {
  const double h_max = 1.0 / 64;
  const StepParams p = params(h_max);

  SUBCASE("unit norm gives h_max on the main map") {
    const StepProposal s = propose_step(vec({1.0}), 0.0, p, std::nullopt, 1.0);
    CHECK(s.h == h_max);
    CHECK_FALSE(s.use_backstop);
    CHECK_FALSE(s.truncated);
  }
  SUBCASE("norm beyond the path bound collapses to h_min on the backstop") {
    const StepProposal s = propose_step(vec({256.0}), 0.0, p, std::nullopt, 1.0);
    CHECK(s.h == p.h_min());
    CHECK(s.use_backstop);
    CHECK(s.norm_clamped);
  }
  SUBCASE("intermediate norm scales the step") {
    const StepProposal s = propose_step(vec({4.0}), 0.0, p, std::nullopt, 1.0);
    CHECK(s.h == h_max / 4);
    CHECK_FALSE(s.use_backstop);
    const StepProposal k2 = propose_step(vec({4.0}), 0.0, params(h_max, 128, 2.0), std::nullopt, 1.0);
    CHECK(k2.h == h_max / 2);
  }
  SUBCASE("a nearby jump truncates the step") {
    const double t = 0.25;
    const StepProposal s = propose_step(vec({0.5}), t, p, t + h_max / 4, 1.0);
    CHECK(s.t_next == t + h_max / 4);
    CHECK_FALSE(s.use_backstop);
    CHECK(s.truncated);
  }
  SUBCASE("the final step lands on T exactly") {
    const StepProposal s = propose_step(vec({0.5}), 1.0 - h_max / 3, p, std::nullopt, 1.0);
    CHECK(s.t_next == 1.0);
    CHECK(s.truncated);
  }
  SUBCASE("sub-h_min truncation and the backstop rule") {
    const double t = 0.5;
    const double tau = t + p.h_min() / 2;
    const StepProposal literal = propose_step(vec({0.5}), t, p, tau, 1.0);
    CHECK(literal.t_next == tau);
    CHECK(literal.use_backstop);
    CHECK_FALSE(literal.norm_clamped);
    StepParams norm_only = p;
    norm_only.rule = BackstopRule::NormOnly;
    CHECK_FALSE(propose_step(vec({0.5}), t, norm_only, tau, 1.0).use_backstop);
    CHECK(propose_step(vec({500.0}), t, norm_only, std::nullopt, 1.0).use_backstop);
  }
  SUBCASE("zero state") {
    CHECK(propose_step(vec({0.0}), 0.0, p, std::nullopt, 1.0).h == h_max);
  }
  SUBCASE("quantized candidates round down onto the grid") {
    StepParams q = p;
    q.quantum = 1.0 / 1024;
    const StepProposal s = propose_step(vec({1.3}), 3.0 / 1024, q, std::nullopt, 1.0);
    const double cells = s.t_next * 1024;
    CHECK(cells == std::floor(cells));
    CHECK(s.h <= h_max / 1.3);
    CHECK(s.h > h_max / 1.3 - q.quantum);
    // When rounding would leave h_min or less, the raw candidate is kept.
    const StepProposal raw = propose_step(vec({100.0}), 3.0 / 1024, q, std::nullopt, 1.0);
    CHECK(raw.h == doctest::Approx(h_max / 100));
  }
}

TEST_CASE("advance") {
  const MapPair maps;
  SUBCASE("no jump coefficient means no jump") {
    SjdeProblem p = make_1d_additive(0.2);
    p.jump_coeff = [](const Vector&, const Vector& x) { return Vector(Vector::Zero(x.size())); };
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
    const JumpSchedule s = schedule_of({0.1}, {0.3}, 1.0);
    StepProposal step;
    step.t_next = 0.1;
    step.h = 0.1;
    const StepOutcome out = advance(p, vec({0.5}), 0.0, step, w, s, maps);
    CHECK(out.jump_applied);
    CHECK(out.state_after_jump == out.state_before_jump);
  }
  SUBCASE("pure jump action") {
    const SjdeProblem p = jaam::testing::pure_jump(1, 0.0);
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
    const JumpSchedule s = schedule_of({0.1}, {0.3}, 1.0);
    StepProposal step;
    step.t_next = 0.1;
    step.h = 0.1;
    const StepOutcome out = advance(p, vec({2.0}), 0.0, step, w, s, maps);
    CHECK(out.state_before_jump[0] == 2.0);
    CHECK(out.state_after_jump[0] == doctest::Approx(2.6).epsilon(1e-15));
    CHECK(out.h_used == 0.1);
  }
  SUBCASE("map failures name the map") {
    const SjdeProblem p = make_1d_additive(0.2);
    MapParams bad;
    bad.newton_max_iter = 0;
    const MapPair ssbm{OneStepMap{MapKind::SplitStepBackward, bad}, OneStepMap{}};
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
    StepProposal step;
    step.t_next = 0.1;
    step.h = 0.1;
    try {
      advance(p, vec({3.0}), 0.0, step, w, JumpSchedule{}, ssbm);
      FAIL("expected a step error");
    } catch (const StepError& e) {
      CHECK(e.kind() == MapKind::SplitStepBackward);
      CHECK(e.time() == 0.0);
    }
  }
}

TEST_CASE("inert path") {
  const SjdeProblem p = jaam::testing::inert(2);
  WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
  const PathRecord rec = simulate_path(p, params(1.0 / 8), w, JumpSchedule{}, MapPair{});
  CHECK(rec.endpoint == p.initial_state);
  CHECK(rec.steps == 8);
  CHECK(rec.nodes.back().t_next == 1.0);
}

TEST_CASE("pure jump path is the exact product") {
  const SjdeProblem p = jaam::testing::pure_jump(1, 5.0);
  for (std::uint64_t m = 0; m < 50; ++m) {
    RandomStream jr = RandomStream::for_path(3, m, StreamTag::Jumps);
    const JumpSchedule s = sample_jump_schedule(p.intensity, 1.0, p.mark_sampler, jr);
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream::for_path(3, m, StreamTag::Wiener));
    const PathRecord rec = simulate_path(p, params(1.0 / 16), w, s, MapPair{});
    double product = p.initial_state[0];
    for (const auto& z : s.marks) product *= 1.0 + z[0];
    CHECK(rec.endpoint[0] == doctest::Approx(product).epsilon(1e-12));
    CHECK(rec.jumps == s.size());
  }
}

TEST_CASE("mesh invariants and the main-map gate") {
  const SjdeProblem p = jaam::testing::builtin("1d-mult", 20.0);
  const StepParams sp = params(1.0 / 32, 8.0);
  for (std::uint64_t m = 0; m < 50; ++m) {
    RandomStream jr = RandomStream::for_path(9, m, StreamTag::Jumps);
    const JumpSchedule s = sample_jump_schedule(p.intensity, 1.0, p.mark_sampler, jr);
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream::for_path(9, m, StreamTag::Wiener));
    const PathRecord rec = simulate_path(p, sp, w, s, MapPair{});
    double t = 0, sum = 0;
    Vector y = p.initial_state;
    for (const auto& n : rec.nodes) {
      CHECK(n.t_next > t);
      CHECK(n.h_used <= sp.h_max);
      CHECK(n.h_used > 0.0);
      if (!n.used_backstop) CHECK(y.norm() < sp.path_bound());
      if (!n.jump_applied) CHECK(n.state_after_jump == n.state_before_jump);
      sum += n.h_used;
      t = n.t_next;
      y = n.state_after_jump;
    }
    CHECK(t == 1.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (double tau : s.times)
      CHECK(std::any_of(rec.nodes.begin(), rec.nodes.end(),
                        [&](const StepOutcome& n) { return n.t_next == tau && n.jump_applied; }));
    CHECK(rec.backstop_steps == rec.backstop_norm + rec.backstop_truncated);
  }
}

TEST_CASE("runaway paths abort") {
  // Explicit steps of dX = X^3 dt from X0 = 2 overflow long before T.
  SjdeProblem p = jaam::testing::inert(1, 2.0);
  p.drift = [](const Vector& x) { return Vector(x.array().cube()); };
  WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
  const MapPair explicit_maps{OneStepMap{MapKind::Milstein, {}}, OneStepMap{MapKind::Milstein, {}}};
  CHECK_THROWS_AS(simulate_path(p, params(0.5, 64.0), w, JumpSchedule{}, explicit_maps, false),
                  PathAborted);
}

TEST_CASE("fixed-step mesh") {
  const SjdeProblem p = jaam::testing::pure_jump(1, 0.0);
  const JumpSchedule s = schedule_of({0.3, 0.61}, {0.1, -0.2}, 1.0);
  SUBCASE("standalone") {
    WienerSource w = WienerSource::on_demand(1, 1.0, RandomStream(1, 0));
    const PathRecord rec =
        simulate_fixed_step(p, FixedMesh{0.125, 0.0}, w, s, OneStepMap{}, {}, true);
    CHECK(rec.steps == 8 + 2);
    CHECK(rec.jumps == 2);
    CHECK(rec.endpoint[0] == doctest::Approx(0.5 * 1.1 * 0.8).epsilon(1e-15));
    CHECK(rec.nodes.back().t_next == 1.0);
  }
  SUBCASE("quantized nodes land on the grid") {
    WienerSource w = WienerSource::fine_grid(1, 1.0, 1.0 / 256, 1, 0, false);
    const PathRecord rec =
        simulate_fixed_step(p, FixedMesh{0.0313, 1.0 / 256}, w, s, OneStepMap{}, {}, true);
    for (const auto& n : rec.nodes) {
      if (n.jump_applied) continue;
      CHECK(w.on_grid(n.t_next));
    }
    CHECK(rec.steps == 32 + 2);
  }
}

}
