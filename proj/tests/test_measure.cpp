#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bohmsim/bohm.hpp"
#include "bohmsim/grid.hpp"
#include "bohmsim/measure.hpp"
#include "bohmsim/tdse.hpp"

using namespace bohmsim;
using constants::default_mass;
using constants::hbar;

namespace {

Trajectory2D synthetic_run(double x1, double x2) {
  Trajectory2D tr;
  tr.times = {0.0, 100.0};
  tr.x1 = {x1, x1};
  tr.x2 = {x2, x2};
  tr.v1 = {0.0, 0.0};
  tr.v2 = {0.0, 0.0};
  return tr;
}

struct DetectorRun {
  Grid2D grid;
  Potential1D barrier;
  DetectorCoupling coupling{0.1, 40.0, 5.0};
  double mass2 = 75000.0 * default_mass;
  double dt = 0.1;
  std::size_t steps = 2200;
  ComplexField2D final_field;
  std::vector<Trajectory2D> trajs;
  std::vector<std::size_t> frame_steps;
  std::vector<ComplexField2D> frames;  // sparse stored frames

  DetectorRun(double pointer_sigma, std::size_t n_traj, std::uint64_t seed,
              std::size_t frame_stride = 25) {
    Grid1D g1(-120.0, 200.0, 640);
    Grid1D g2(-11.0, 26.0, 296);
    grid = {g1, g2};
    barrier = Potential1D(g1);
    for (std::size_t i = 0; i < g1.n; ++i)
      if (std::abs(g1.x(i)) <= 1.0) barrier.real[i] = 0.28;

    auto sys = make_gaussian(g1, {-60.0, 10.0, 0.5});
    auto ptr = make_gaussian(g2, {0.0, pointer_sigma, 0.0});
    auto field = product_state(sys, ptr);

    EnsembleSpec es{n_traj, seed, 1e-12};
    auto starts = sample_positions_2d(field, es);

    Adi2D adi(grid, barrier, coupling, default_mass, mass2, dt);
    IntegrationOptions opts;
    opts.mass = default_mass;
    opts.mass2 = mass2;
    opts.coupling = &coupling;
    opts.record_stride = frame_stride;
    opts.seed = seed;

    trajs = integrate_trajectories_2d(
        starts, field, [&](std::size_t, ComplexField2D& f) { adi.step(f); }, dt, steps, opts,
        [&](std::size_t step, double, const ComplexField2D& f, auto) {
          if (step % (frame_stride * 8) == 0 || step == steps) {
            frame_steps.push_back(step);
            frames.push_back(f);
          }
          if (step == steps) final_field = f;
        });
  }

  double t_end() const { return dt * static_cast<double>(steps); }
};

}  // namespace

TEST_CASE("slice of a product state is proportional to the system factor") {
  Grid1D g1(-50.0, 50.0, 300);
  Grid1D g2(-8.0, 8.0, 96);
  auto a = make_gaussian(g1, {0.0, 6.0, 0.3});
  auto b = make_gaussian(g2, {1.0, 1.0, 0.0});
  auto prod = product_state(a, b);

  for (double x2 : {-0.5, 0.7, 2.0}) {
    auto slice = slice_conditional(prod, x2);
    const double scale = std::sqrt(norm2(slice) / norm2(a));
    double worst = 0.0;
    for (std::size_t i = 0; i < g1.n; ++i)
      worst = std::max(worst, std::abs(slice[i] - scale * a[i]));
    CHECK(worst < 1e-8);
  }
  CHECK_THROWS(slice_conditional(prod, 9.0));
}

TEST_CASE("classification thresholds") {
  const double barrier_x = -50.0, threshold = 7.5;
  CHECK(classify(synthetic_run(-120.0, 0.002), barrier_x, threshold, 50.0).kind ==
        OutcomeKind::Reflected);
  CHECK(classify(synthetic_run(90.0, 14.8), barrier_x, threshold, 50.0).kind ==
        OutcomeKind::Transmitted);
  CHECK(classify(synthetic_run(-10.0, 3.0), barrier_x, threshold, 50.0).kind ==
        OutcomeKind::Undecided);
}

TEST_CASE("collapse purity: split, collapsed, and zero-slice error") {
  Grid1D g(-100.0, 100.0, 512);
  auto left = make_gaussian(g, {-40.0, 8.0, -0.4});
  auto right = make_gaussian(g, {40.0, 8.0, 0.4});

  ConditionalFrame split;
  split.field = ComplexField1D(g);
  for (std::size_t i = 0; i < g.n; ++i)
    split.field[i] = (left[i] + right[i]) / std::sqrt(2.0);
  CHECK(collapse_purity(split, 0.0) == doctest::Approx(0.5).epsilon(1e-6));

  ConditionalFrame reflected;
  reflected.field = left;
  CHECK(collapse_purity(reflected, 0.0) > 0.99);

  ConditionalFrame zero;
  zero.field = ComplexField1D(g);
  CHECK_THROWS(collapse_purity(zero, 0.0));
}

TEST_CASE("two-time consistency on synthetic runs") {
  std::vector<Trajectory2D> runs;
  runs.push_back(synthetic_run(90.0, 14.0));   // transmitted at both times
  runs.push_back(synthetic_run(-120.0, 0.0));  // reflected at both times
  CHECK(two_time_consistency(runs, -50.0, 7.5, 10.0, 90.0) == 1.0);

  std::vector<Trajectory2D> lone{synthetic_run(90.0, 14.0)};
  CHECK(two_time_consistency(lone, -50.0, 7.5, 10.0, 90.0) == 1.0);

  std::vector<Trajectory2D> undecided{synthetic_run(-10.0, 3.0)};
  CHECK_THROWS(two_time_consistency(undecided, -50.0, 7.5, 10.0, 90.0));
  CHECK_THROWS(two_time_consistency(runs, -50.0, 7.5, 90.0, 10.0));
}

TEST_CASE("detector run: collapse, pointer readout, and the velocity identity") {
  DetectorRun run(1.0, 60, 2025);
  const double t_end = run.t_end();
  const double lambda = run.coupling.lambda;
  const double enter_x = run.coupling.q_onset + run.coupling.q_width;

  // Sort outcomes by the pointer threshold defaulted to half the ideal
  // displacement of a ballistic crossing.
  const double v_ballistic = hbar * 0.5 / default_mass;
  const double tau_design = t_end - (enter_x + 60.0) / v_ballistic;
  const double threshold = 0.5 * lambda * tau_design;

  std::size_t transmitted = 0, reflected = 0;
  double mean_shift = 0.0;
  for (const auto& tr : run.trajs) {
    const auto outcome = classify(tr, -20.0, threshold, t_end);
    if (outcome.kind == OutcomeKind::Transmitted) {
      ++transmitted;
      mean_shift += tr.x2.back() - tr.x2.front();
      // Per-run pointer displacement ≈ λ·(time past onset+width).
      double t_cross = t_end;
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (tr.x1[k] > enter_x) {
          t_cross = tr.times[k];
          break;
        }
      }
      const double ideal = lambda * (t_end - t_cross);
      CHECK(tr.x2.back() - tr.x2.front() == doctest::Approx(ideal).epsilon(0.20));
    } else if (outcome.kind == OutcomeKind::Reflected) {
      ++reflected;
    }
  }
  REQUIRE(transmitted > 10);
  REQUIRE(reflected > 10);
  mean_shift /= static_cast<double>(transmitted);

  // Reflected pointers do not move.
  for (const auto& tr : run.trajs) {
    const auto outcome = classify(tr, -20.0, threshold, t_end);
    if (outcome.kind == OutcomeKind::Reflected)
      CHECK(std::abs(tr.x2.back() - tr.x2.front()) < 0.1 * mean_shift);
  }

  // Conditional slices at the actual pointer positions are collapsed.
  for (const auto& tr : run.trajs) {
    const auto outcome = classify(tr, -20.0, threshold, t_end);
    if (outcome.kind == OutcomeKind::Undecided) continue;
    ConditionalFrame frame;
    frame.time = t_end;
    frame.field = slice_conditional(run.final_field, tr.x2.back());
    frame.pointer_position = tr.x2.back();
    frame.alpha = tr.alpha;
    CHECK(collapse_purity(frame, 0.0) > 0.99);
    const double p_right = probability_in_region(frame.field, 1.0, 200.0) / norm2(frame.field);
    if (outcome.kind == OutcomeKind::Reflected) CHECK(p_right < 0.01);
    if (outcome.kind == OutcomeKind::Transmitted) CHECK(1.0 - p_right < 0.01);
  }

  // Exact identity: the x1 guidance velocity of the 2D field equals the 1D
  // guidance velocity of the conditional slice, frame by frame.
  for (std::size_t f = 0; f < run.frames.size(); ++f) {
    VelocityField2D v2d(run.frames[f], 1e-12, default_mass, run.mass2, &run.coupling);
    const double t_frame = run.dt * static_cast<double>(run.frame_steps[f]);
    for (std::size_t a = 0; a < run.trajs.size(); a += 7) {
      const auto [x1, x2] = run.trajs[a].position_at(t_frame);
      auto slice = slice_conditional(run.frames[f], x2);
      const double v_slice = bohm_velocity_1d(slice, x1, 1e-12);
      const double v_full = v2d(x1, x2).first;
      CHECK(std::abs(v_full - v_slice) <=
            1e-6 * std::max({std::abs(v_full), std::abs(v_slice), 1e-9}));
    }
  }

  // Once decided, always decided: perfect two-time agreement.
  CHECK(two_time_consistency(run.trajs, -20.0, threshold, 150.0, t_end) == 1.0);

  // Collapse purity is non-decreasing along single runs late in the
  // interaction (1e-3 ripple allowance).
  for (std::size_t a = 0; a < run.trajs.size(); a += 11) {
    double prev = 0.0;
    bool first = true;
    for (std::size_t f = 0; f < run.frames.size(); ++f) {
      const double t_frame = run.dt * static_cast<double>(run.frame_steps[f]);
      if (t_frame < 160.0) continue;
      const auto [x1, x2] = run.trajs[a].position_at(t_frame);
      ConditionalFrame frame;
      frame.field = slice_conditional(run.frames[f], x2);
      const double purity = collapse_purity(frame, 0.0);
      if (!first) CHECK(purity >= prev - 1e-3);
      prev = purity;
      first = false;
    }
  }
}

TEST_CASE("pointer width does not change the conclusions (sigma2 in [0.5, 2])") {
  for (double sigma2 : {0.5, 2.0}) {
    DetectorRun run(sigma2, 24, 91);
    const double t_end = run.t_end();
    const double enter_x = run.coupling.q_onset + run.coupling.q_width;
    std::size_t transmitted = 0;
    for (const auto& tr : run.trajs) {
      if (tr.x1.back() <= enter_x) continue;
      ++transmitted;
      double t_cross = t_end;
      for (std::size_t k = 0; k < tr.times.size(); ++k) {
        if (tr.x1[k] > enter_x) {
          t_cross = tr.times[k];
          break;
        }
      }
      const double ideal = run.coupling.lambda * (t_end - t_cross);
      CHECK(tr.x2.back() - tr.x2.front() == doctest::Approx(ideal).epsilon(0.25));
      ConditionalFrame frame;
      frame.field = slice_conditional(run.final_field, tr.x2.back());
      CHECK(collapse_purity(frame, 0.0) > 0.95);
    }
    CHECK(transmitted > 4);
  }
}
