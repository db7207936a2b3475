#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bohmsim/bohm.hpp"
#include "bohmsim/constants.hpp"
#include "bohmsim/field_io.hpp"
#include "bohmsim/grid.hpp"
#include "bohmsim/manybody.hpp"
#include "bohmsim/measure.hpp"
#include "bohmsim/noise.hpp"
#include "bohmsim/stats.hpp"
#include "bohmsim/tdse.hpp"
#include "bohmsim/transport.hpp"
#include "scenario_impl.hpp"

namespace bohmsim::detail {

namespace fs = std::filesystem;
using constants::electron_mass;
using constants::hbar;

namespace {

// ---------------------------------------------------------------------------
// Config section parsers

Grid1D parse_grid(const json& cfg, const std::string& path) {
  return Grid1D(require_num(cfg, path + ".x_min"), require_num(cfg, path + ".x_max"),
                static_cast<std::size_t>(require_num(cfg, path + ".n")));
}

GaussianSpec parse_packet(const json& cfg, const std::string& path) {
  GaussianSpec spec;
  spec.center = require_num(cfg, path + ".center");
  spec.sigma = require_num(cfg, path + ".sigma");
  spec.k0 = num_or(cfg, path + ".k0", 0.0);
  return spec;
}

double parse_mass(const json& cfg) {
  return num_or(cfg, "mass_ratio", constants::default_mass_ratio) * electron_mass;
}

std::uint64_t seed_of(const json& cfg, const std::string& which) {
  return static_cast<std::uint64_t>(require_num(cfg, "seeds." + which));
}

Potential1D parse_barrier_potential(const json& cfg, const Grid1D& grid) {
  Potential1D pot(grid);
  if (const json* node = find(cfg, "barrier")) {
    const double height = require_num(cfg, "barrier.height");
    const double from = require_num(cfg, "barrier.from");
    const double to = require_num(cfg, "barrier.to");
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = grid.x(i);
      if (x >= from && x <= to) pot.real[i] += height;
    }
    (void)node;
  }
  return pot;
}

DeviceSpec parse_device(const json& cfg) {
  DeviceSpec dev;
  dev.grid = parse_grid(cfg, "device.grid");
  if (const json* rtd = find(cfg, "device.rtd")) {
    dev.segments = rtd_segments(num_or(*rtd, "barrier_height", 0.3),
                                num_or(*rtd, "barrier_width", 2.0),
                                num_or(*rtd, "well_width", 5.0), num_or(*rtd, "center", 0.0));
  }
  if (const json* segs = find(cfg, "device.segments")) {
    for (const auto& seg : *segs) {
      dev.segments.push_back({require_num(seg, "offset"), require_num(seg, "from"),
                              require_num(seg, "to")});
    }
  }
  const json& active = require(cfg, "device.active");
  dev.x_left = active.at(0).get<double>();
  dev.x_right = active.at(1).get<double>();
  if (const json* bias = find(cfg, "device.bias")) {
    for (const auto& point : *bias)
      dev.bias_schedule.push_back({require_num(point, "t"), require_num(point, "v")});
  }
  dev.absorb_fraction = num_or(cfg, "device.absorb.fraction", 0.1);
  dev.absorb_strength = num_or(cfg, "device.absorb.strength", 0.3);
  return dev;
}

InjectionSpec parse_injection(const json& cfg) {
  InjectionSpec spec;
  const std::string mode = str_or(cfg, "injection.mode", "thermal");
  if (mode == "regular") {
    spec.mode = InjectionMode::Regular;
  } else if (mode == "poisson") {
    spec.mode = InjectionMode::Poisson;
  } else if (mode == "thermal") {
    spec.mode = InjectionMode::Thermal;
  } else {
    throw std::invalid_argument("config: injection.mode must be regular|poisson|thermal");
  }
  spec.rate = require_num(cfg, "injection.rate");
  spec.temperature = num_or(cfg, "injection.temperature", 0.0);
  spec.fermi_level = num_or(cfg, "injection.fermi_level", 0.1);
  spec.side = str_or(cfg, "injection.side", "left") == "right" ? ContactSide::Right
                                                               : ContactSide::Left;
  spec.center = require_num(cfg, "injection.center");
  spec.sigma = require_num(cfg, "injection.sigma");
  spec.k0 = num_or(cfg, "injection.k0", 0.0);
  return spec;
}

CoulombSpec parse_coulomb(const json& cfg, bool* enabled) {
  CoulombSpec spec;
  const double permittivity =
      num_or(cfg, "coulomb.relative_permittivity", constants::default_permittivity);
  spec.prefactor = constants::coulomb_constant / permittivity;
  spec.softening = num_or(cfg, "coulomb.softening", 0.5);
  if (enabled != nullptr) *enabled = flag_or(cfg, "coulomb.enabled", false);
  return spec;
}

RealizationConfig parse_realization(const json& cfg) {
  RealizationConfig rc;
  rc.device = parse_device(cfg);
  rc.injection = parse_injection(cfg);
  rc.injection.seed = seed_of(cfg, "h");
  rc.duration = require_num(cfg, "run.duration");
  rc.dt = require_num(cfg, "run.dt");
  rc.dt_sample = num_or(cfg, "run.dt_sample", 1.0);
  rc.coulomb = parse_coulomb(cfg, &rc.coulomb_enabled);
  rc.epsilon = num_or(cfg, "ensemble.epsilon", 1e-12);
  rc.mass = parse_mass(cfg);
  rc.charge = num_or(cfg, "charge", 1.0);
  rc.alpha_seed = seed_of(cfg, "alpha");
  rc.h_seed = seed_of(cfg, "h");
  return rc;
}

RealizationConfig realization_for_index(RealizationConfig base, std::size_t index) {
  base.alpha_seed += 1000003ULL * index;
  base.h_seed += 999983ULL * index;
  base.injection.seed = base.h_seed;
  return base;
}

// ---------------------------------------------------------------------------
// Output helpers

void write_trajectories_csv(const fs::path& path, std::span<const Trajectory> trajs,
                            std::size_t cap) {
  std::ofstream out(path);
  out << "t,x,v,alpha,seed\n";
  char line[128];
  const std::size_t count = std::min(cap, trajs.size());
  for (std::size_t a = 0; a < count; ++a) {
    const auto& tr = trajs[a];
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%llu,%llu\n", tr.times[k],
                    tr.positions[k], tr.velocities[k],
                    static_cast<unsigned long long>(tr.alpha),
                    static_cast<unsigned long long>(tr.seed));
      out << line;
    }
  }
}

void write_trajectories2d_csv(const fs::path& path, std::span<const Trajectory2D> trajs,
                              std::size_t cap) {
  std::ofstream out(path);
  out << "t,x1,x2,v1,v2,alpha,seed\n";
  char line[192];
  const std::size_t count = std::min(cap, trajs.size());
  for (std::size_t a = 0; a < count; ++a) {
    const auto& tr = trajs[a];
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%llu\n",
                    tr.times[k], tr.x1[k], tr.x2[k], tr.v1[k], tr.v2[k],
                    static_cast<unsigned long long>(tr.alpha),
                    static_cast<unsigned long long>(tr.seed));
      out << line;
    }
  }
}

void write_sidecar(const fs::path& path, const json& cfg) {
  std::ofstream out(path);
  json sidecar;
  sidecar["ensemble"] = cfg.contains("ensemble") ? cfg["ensemble"] : json::object();
  sidecar["seeds"] = cfg["seeds"];
  out << sidecar.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// barrier-1d: single packet against a rectangular barrier, field vs
// trajectory transmission, frame dumps.

json scenario_barrier_1d(const json& cfg, const fs::path& out, int) {
  const Grid1D grid = parse_grid(cfg, "grid");
  const GaussianSpec packet = parse_packet(cfg, "packet");
  const double mass = parse_mass(cfg);
  const Potential1D pot = parse_barrier_potential(cfg, grid);
  const double barrier_right = num_or(cfg, "barrier.to", 0.0);

  const double dt = require_num(cfg, "propagation.dt");
  const double t_end = require_num(cfg, "propagation.t_end");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  const auto frame_stride =
      static_cast<std::size_t>(num_or(cfg, "propagation.frame_stride", 0.0));

  auto psi = make_gaussian(grid, packet);
  const double norm0 = norm2(psi);

  EnsembleSpec es;
  es.size = static_cast<std::size_t>(num_or(cfg, "ensemble.size", 2000.0));
  es.seed = seed_of(cfg, "alpha");
  es.epsilon = num_or(cfg, "ensemble.epsilon", 1e-12);
  auto starts = sample_positions(psi, es);

  CrankNicolson1D cn(pot, mass, dt);
  IntegrationOptions opts;
  opts.epsilon = es.epsilon;
  opts.mass = mass;
  opts.seed = es.seed;
  opts.record_stride = std::max<std::size_t>(1, frame_stride);

  const auto frame_cap = static_cast<std::size_t>(num_or(cfg, "output.frames", 5.0));
  std::size_t frames_written = 0;
  auto work = psi;
  auto trajs = integrate_trajectories(
      starts, psi,
      [&](std::size_t k, ComplexField1D& f) {
        cn.step(f);
        const std::size_t dump_every =
            std::max<std::size_t>(1, steps / std::max<std::size_t>(frame_cap, 1));
        if (frame_stride > 0 && (k + 1) % dump_every == 0 && frames_written < frame_cap) {
          char name[64];
          std::snprintf(name, sizeof name, "frame_%03zu.csv", frames_written);
          write_field_csv(f, (out / name).string());
          std::snprintf(name, sizeof name, "frame_%03zu.bsf", frames_written);
          write_field_binary(f, (out / name).string());
          ++frames_written;
        }
      },
      dt, steps, opts);
  for (std::size_t s = 0; s < steps; ++s) cn.step(work);
  write_field_csv(work, (out / "frame_final.csv").string());

  const double norm_end = norm2(work);
  const double t_field = probability_in_region(work, barrier_right, grid.x_max) / norm_end;

  std::size_t transmitted = 0, reflected = 0, undecided = 0;
  const double barrier_left = num_or(cfg, "barrier.from", 0.0);
  for (const auto& tr : trajs) {
    const double x = tr.positions.back();
    if (x > barrier_right) {
      ++transmitted;
    } else if (x < barrier_left) {
      ++reflected;
    } else {
      ++undecided;
    }
  }
  const double m_total = static_cast<double>(trajs.size());

  write_trajectories_csv(out / "trajectories.csv", trajs,
                         static_cast<std::size_t>(num_or(cfg, "output.trajectories", 64.0)));
  write_sidecar(out / "trajectories.json", cfg);

  json summary;
  summary["transmission"] = {{"field", t_field},
                             {"trajectory", static_cast<double>(transmitted) / m_total},
                             {"undecided", static_cast<double>(undecided) / m_total}};
  summary["counts"] = {{"transmitted", transmitted},
                       {"reflected", reflected},
                       {"undecided", undecided},
                       {"ensemble", trajs.size()}};
  summary["norm_drift"] = std::abs(norm_end - norm0);
  summary["t_end"] = dt * static_cast<double>(steps);
  return summary;
}

// ---------------------------------------------------------------------------
// detector-2d: system + pointer, conditional collapse and outcome readout.

json scenario_detector_2d(const json& cfg, const fs::path& out, int) {
  const Grid1D g1 = parse_grid(cfg, "grid");
  const Grid1D g2 = parse_grid(cfg, "detector.pointer_grid");
  const double mass = parse_mass(cfg);
  const double pointer_mass = num_or(cfg, "detector.pointer_mass_ratio", 75000.0) * mass;

  DetectorCoupling coupling;
  coupling.lambda = require_num(cfg, "detector.lambda");
  coupling.q_onset = require_num(cfg, "detector.onset");
  coupling.q_width = num_or(cfg, "detector.width", 5.0);

  const GaussianSpec packet = parse_packet(cfg, "packet");
  const GaussianSpec pointer{0.0, num_or(cfg, "detector.pointer_sigma", 1.0), 0.0};
  const Potential1D pot = parse_barrier_potential(cfg, g1);

  const double dt = require_num(cfg, "propagation.dt");
  const double t_end = require_num(cfg, "propagation.t_end");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  const auto frame_stride =
      static_cast<std::size_t>(num_or(cfg, "propagation.frame_stride", 20.0));

  auto field = product_state(make_gaussian(g1, packet), make_gaussian(g2, pointer));
  const double norm0 = norm2(field);

  EnsembleSpec es;
  es.size = static_cast<std::size_t>(num_or(cfg, "ensemble.size", 500.0));
  es.seed = seed_of(cfg, "alpha");
  es.epsilon = num_or(cfg, "ensemble.epsilon", 1e-12);
  auto starts = sample_positions_2d(field, es);

  Adi2D adi(Grid2D{g1, g2}, pot, coupling, mass, pointer_mass, dt);
  IntegrationOptions opts;
  opts.epsilon = es.epsilon;
  opts.mass = mass;
  opts.mass2 = pointer_mass;
  opts.coupling = &coupling;
  opts.record_stride = frame_stride;
  opts.seed = es.seed;

  // Classification parameters: the pointer threshold defaults to half the
  // ideal displacement of a ballistic transit.
  const double barrier_x = num_or(cfg, "classify.barrier_x", -50.0);
  const double v_ballistic = hbar * packet.k0 / mass;
  const double enter_time =
      (coupling.q_onset + coupling.q_width - packet.center) / std::max(v_ballistic, 1e-9);
  const double tau_design = t_end - enter_time;
  const double pointer_threshold =
      num_or(cfg, "classify.pointer_threshold", 0.5 * coupling.lambda * tau_design);
  const double t1 = num_or(cfg, "classify.t1", 0.75 * t_end);
  const double t2 = num_or(cfg, "classify.t2", t_end);

  // Frame observer: velocity-identity residual over every run, purity
  // series for a small tracked set, sparse conditional dumps.
  const auto purity_track =
      static_cast<std::size_t>(num_or(cfg, "output.purity_tracked", 8.0));
  const auto dump_frames = static_cast<std::size_t>(num_or(cfg, "output.frames", 4.0));
  const std::size_t dump_every = std::max<std::size_t>(1, steps / std::max<std::size_t>(
                                                                dump_frames, 1));
  double identity_worst = 0.0;
  double norm_end = norm0;
  ComplexField2D final_field;
  std::ofstream purity_csv(out / "purity_series.csv");
  purity_csv << "t,alpha,purity,p_right\n";
  std::size_t dumped = 0;

  auto observer = [&](std::size_t step, double t, const ComplexField2D& f,
                      std::span<const Trajectory2D> trajs) {
    VelocityField2D v2d(f, es.epsilon, mass, pointer_mass, &coupling);
    for (const auto& tr : trajs) {
      if (tr.absorbed) continue;
      const double x1 = tr.x1.back();
      const double x2 = tr.x2.back();
      auto slice = slice_conditional(f, x2);
      const double v_slice = bohm_velocity_1d(slice, x1, es.epsilon, mass);
      const double v_full = v2d(x1, x2).first;
      const double scale = std::max({std::abs(v_full), std::abs(v_slice), 1e-9});
      identity_worst = std::max(identity_worst, std::abs(v_full - v_slice) / scale);

      if (tr.alpha < purity_track) {
        ConditionalFrame frame;
        frame.time = t;
        frame.field = slice;
        frame.pointer_position = x2;
        frame.alpha = tr.alpha;
        const double total = norm2(slice);
        if (total > 0.0) {
          const double p_right =
              probability_in_region(slice, 0.5 * (num_or(cfg, "barrier.from", -1.0) +
                                                  num_or(cfg, "barrier.to", 1.0)),
                                    g1.x_max) /
              total;
          char line[96];
          std::snprintf(line, sizeof line, "%.17g,%llu,%.17g,%.17g\n", t,
                        static_cast<unsigned long long>(tr.alpha),
                        std::max(p_right, 1.0 - p_right), p_right);
          purity_csv << line;
        }
        if (tr.alpha < 2 && step > 0 && step % dump_every == 0 && dumped < 2 * dump_frames) {
          char name[64];
          std::snprintf(name, sizeof name, "conditional_a%llu_%05zu.csv",
                        static_cast<unsigned long long>(tr.alpha), step);
          write_field_csv(slice, (out / name).string());
          ++dumped;
        }
      }
    }
    if (step == steps) {
      norm_end = norm2(f);
      final_field = f;
    }
  };

  auto trajs = integrate_trajectories_2d(starts, field,
                                         [&](std::size_t, ComplexField2D& f) { adi.step(f); },
                                         dt, steps, opts, observer);

  // Outcomes and pointer statistics.
  const double t_final = dt * static_cast<double>(steps);
  auto outcomes = classify_ensemble(trajs, barrier_x, pointer_threshold, t_final);
  write_outcomes_csv(outcomes, (out / "outcomes.csv").string());
  write_trajectories2d_csv(out / "trajectories.csv", trajs,
                           static_cast<std::size_t>(num_or(cfg, "output.trajectories", 64.0)));
  write_sidecar(out / "trajectories.json", cfg);

  std::size_t n_trans = 0, n_refl = 0, n_und = 0;
  double mean_disp = 0.0;
  double worst_disp_rel = 0.0;
  const double enter_x = coupling.q_onset + coupling.q_width;
  for (std::size_t a = 0; a < trajs.size(); ++a) {
    const auto& tr = trajs[a];
    switch (outcomes[a].kind) {
      case OutcomeKind::Transmitted: {
        ++n_trans;
        const double disp = tr.x2.back() - tr.x2.front();
        mean_disp += disp;
        double t_cross = t_final;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
          if (tr.x1[k] > enter_x) {
            t_cross = tr.times[k];
            break;
          }
        }
        const double ideal = coupling.lambda * (t_final - t_cross);
        if (ideal > 0.0)
          worst_disp_rel = std::max(worst_disp_rel, std::abs(disp - ideal) / ideal);
        break;
      }
      case OutcomeKind::Reflected: ++n_refl; break;
      case OutcomeKind::Undecided: ++n_und; break;
    }
  }
  if (n_trans > 0) mean_disp /= static_cast<double>(n_trans);

  // Final-frame collapse purity across every decided run.
  double worst_reflected_disp = 0.0;
  double min_purity = 1.0;
  const double barrier_mid =
      0.5 * (num_or(cfg, "barrier.from", -1.0) + num_or(cfg, "barrier.to", 1.0));
  for (std::size_t a = 0; a < trajs.size(); ++a) {
    const auto& tr = trajs[a];
    if (outcomes[a].kind == OutcomeKind::Reflected)
      worst_reflected_disp = std::max(worst_reflected_disp,
                                      std::abs(tr.x2.back() - tr.x2.front()));
    if (outcomes[a].kind == OutcomeKind::Undecided || final_field.amplitudes.empty()) continue;
    ConditionalFrame frame;
    frame.time = t_final;
    frame.field = slice_conditional(final_field, tr.x2.back());
    frame.pointer_position = tr.x2.back();
    frame.alpha = tr.alpha;
    min_purity = std::min(min_purity, collapse_purity(frame, barrier_mid));
  }

  double consistency = 0.0;
  bool consistency_ok = true;
  try {
    consistency = two_time_consistency(trajs, barrier_x, pointer_threshold, t1, t2);
  } catch (const std::exception&) {
    consistency_ok = false;
  }

  json summary;
  summary["counts"] = {{"transmitted", n_trans},
                       {"reflected", n_refl},
                       {"undecided", n_und},
                       {"ensemble", trajs.size()}};
  summary["pointer"] = {{"mean_displacement", mean_disp},
                        {"ideal_displacement", coupling.lambda * tau_design},
                        {"worst_transmitted_rel_error", worst_disp_rel},
                        {"worst_reflected_displacement", worst_reflected_disp},
                        {"threshold", pointer_threshold}};
  summary["velocity_identity_max_rel_error"] = identity_worst;
  summary["two_time_consistency"] = consistency_ok ? json(consistency) : json();
  summary["norm_drift"] = std::abs(norm_end - norm0);
  summary["min_purity_final"] = min_purity;
  summary["t_end"] = t_final;
  return summary;
}

// ---------------------------------------------------------------------------
// manybody: fixed conditional-wave-function ensemble with Coulomb coupling.

json scenario_manybody(const json& cfg, const fs::path& out, int) {
  const Grid1D grid = parse_grid(cfg, "grid");
  const double mass = parse_mass(cfg);

  Potential1D device(grid);
  if (const json* segs = find(cfg, "device.segments")) {
    for (const auto& seg : *segs) {
      const double height = require_num(seg, "offset");
      const double from = require_num(seg, "from");
      const double to = require_num(seg, "to");
      for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        if (x >= from && x <= to) device.real[i] += height;
      }
    }
  }
  if (const json* absorb = find(cfg, "device.absorb")) {
    add_absorbing_layers(device, num_or(*absorb, "fraction", 0.1),
                         num_or(*absorb, "strength", 0.3));
  }

  ManybodyConfig mb;
  mb.device = device;
  mb.coulomb = parse_coulomb(cfg, &mb.coulomb_enabled);
  mb.dt = require_num(cfg, "propagation.dt");
  mb.epsilon = num_or(cfg, "ensemble.epsilon", 1e-12);
  const double t_end = require_num(cfg, "propagation.t_end");
  const auto stride = static_cast<std::size_t>(num_or(cfg, "propagation.frame_stride", 10.0));

  std::vector<ParticleState> initial;
  const json& particles = require(cfg, "particles");
  std::uint64_t index = 0;
  for (const auto& node : particles) {
    ParticleState p;
    p.id = index;
    GaussianSpec g;
    g.center = require_num(node, "center");
    g.sigma = num_or(node, "sigma", 6.0);
    g.k0 = num_or(node, "k0", 0.0);
    p.field = make_gaussian(grid, g);
    if (const json* pos = find(node, "position"); pos != nullptr && pos->is_number()) {
      p.position = pos->get<double>();
    } else {
      RandomStream rng(seed_of(cfg, "alpha"), index);
      p.position = sample_position(p.field, rng);
    }
    p.charge = num_or(node, "charge", 1.0);
    p.mass = mass;
    initial.push_back(std::move(p));
    ++index;
  }

  double min_pair_distance = std::numeric_limits<double>::infinity();
  auto result = run_manybody(initial, mb, t_end, stride, [&](double, const ManybodyEngine& e) {
    const auto& active = e.particles();
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j)
        min_pair_distance =
            std::min(min_pair_distance, std::abs(active[i].position - active[j].position));
  });

  write_trajectories_csv(out / "trajectories.csv", result.trajectories,
                         result.trajectories.size());
  write_sidecar(out / "trajectories.json", cfg);
  write_exits_csv(result.exits, (out / "exits.csv").string());

  json summary;
  summary["particles"] = initial.size();
  summary["exits"] = result.exits.size();
  if (std::isfinite(min_pair_distance)) summary["min_pair_distance"] = min_pair_distance;
  json finals = json::array();
  for (const auto& p : result.final_states) {
    finals.push_back({{"id", p.id},
                      {"position", p.position},
                      {"velocity", p.velocity},
                      {"norm2", norm2(p.field)}});
  }
  summary["final_states"] = finals;
  summary["t_end"] = t_end;
  return summary;
}

// ---------------------------------------------------------------------------
// transport-rtd: realization ensemble through a device, pooled noise.

json scenario_transport(const json& cfg, const fs::path& out, int workers) {
  RealizationConfig base = parse_realization(cfg);
  const auto realizations = static_cast<std::size_t>(num_or(cfg, "realizations", 8.0));
  const auto segment_length =
      static_cast<std::size_t>(num_or(cfg, "noise.segment_length", 0.0));

  std::vector<RealizationResult> results(realizations);
  parallel_indexed(realizations, workers, [&](std::size_t r) {
    results[r] = run_realization(realization_for_index(base, r));
  });

  // Pooled spectrum: bin-averaged Welch over the realizations.
  NoiseSpectrum pooled;
  std::vector<double> fanos, dcs;
  std::size_t exits_left = 0, exits_right = 0, injected = 0;
  for (std::size_t r = 0; r < realizations; ++r) {
    auto sp = psd(results[r].trace, SpectralWindow::Hann, segment_length);
    if (r == 0) {
      pooled = sp;
    } else {
      for (std::size_t k = 0; k < pooled.s.size(); ++k) pooled.s[k] += sp.s[k];
    }
    if (!std::isnan(sp.fano)) fanos.push_back(sp.fano);
    dcs.push_back(sp.dc);
    exits_left += results[r].exited_left;
    exits_right += results[r].exited_right;
    injected += results[r].injected;
    if (r < static_cast<std::size_t>(num_or(cfg, "output.traces", 2.0))) {
      char name[32];
      std::snprintf(name, sizeof name, "trace_%03zu.csv", r);
      write_trace_csv(results[r].trace, (out / name).string());
    }
  }
  for (auto& v : pooled.s) v /= static_cast<double>(realizations);
  pooled.dc = mean(dcs);
  pooled.total_noise = 0.0;
  for (const auto& r : results) pooled.total_noise += total_noise(r.trace);
  pooled.total_noise /= static_cast<double>(realizations);
  write_spectrum_csv(pooled, (out / "spectrum.csv").string());

  json summary;
  summary["dc"] = {{"mean", pooled.dc},
                   {"se", dcs.size() > 1 ? standard_error(dcs) : 0.0}};
  summary["fano"] = {{"pooled", pooled.dc != 0.0 ? fano(pooled)
                                                 : std::numeric_limits<double>::quiet_NaN()},
                     {"per_realization", fanos},
                     {"se", fanos.size() > 1 ? standard_error(fanos) : 0.0}};
  summary["s0_plateau"] = pooled.s0_plateau();
  summary["total_noise"] = pooled.total_noise;
  summary["counts"] = {{"injected", injected},
                       {"exited_left", exits_left},
                       {"exited_right", exits_right},
                       {"realizations", realizations}};
  return summary;
}

// ---------------------------------------------------------------------------
// transient: step-bias response of the realization ensemble.

json scenario_transient(const json& cfg, const fs::path& out, int) {
  TransientConfig tc;
  tc.base = parse_realization(cfg);
  tc.realizations = static_cast<std::size_t>(num_or(cfg, "realizations", 8.0));
  tc.smoothing_window = num_or(cfg, "transient.smoothing_window", 50.0);

  auto result = transient_response(tc);

  {
    std::ofstream csv(out / "transient.csv");
    csv << "t,mean,smoothed,i_tran\n";
    char line[128];
    for (std::size_t i = 0; i < result.times.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", result.times[i],
                    result.mean_current[i], result.smoothed[i], result.i_tran[i]);
      csv << line;
    }
  }
  {
    std::ofstream csv(out / "transform.csv");
    csv << "f,magnitude\n";
    char line[64];
    for (std::size_t i = 0; i < result.freq.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%.17g\n", result.freq[i],
                    result.transform_mag[i]);
      csv << line;
    }
  }

  // Single-pole characterization of the transform: low-frequency plateau,
  // -3 dB crossing, and the decade roll-off past it.
  double plateau = 0.0;
  for (std::size_t k = 1; k <= 4 && k < result.transform_mag.size(); ++k)
    plateau += result.transform_mag[k];
  plateau /= 4.0;
  double f_c = 0.0;
  std::size_t k_c = 0;
  for (std::size_t k = 1; k < result.transform_mag.size(); ++k) {
    if (result.transform_mag[k] < plateau / std::sqrt(2.0)) {
      f_c = result.freq[k];
      k_c = k;
      break;
    }
  }
  double rolloff_ratio = 0.0;
  if (k_c > 0 && 4 * k_c < result.transform_mag.size())
    rolloff_ratio = result.transform_mag[4 * k_c] / result.transform_mag[k_c];

  json summary;
  summary["i_pre"] = result.i_pre;
  summary["i_post"] = result.i_post;
  summary["delay"] = result.delay;
  summary["tau_fit"] = result.tau_fit;
  summary["plateaus_converged"] = result.plateaus_converged;
  summary["t_switch"] = result.t_switch;
  summary["transform"] = {{"plateau", plateau}, {"f_c", f_c}, {"rolloff_ratio", rolloff_ratio}};
  return summary;
}

// ---------------------------------------------------------------------------
// noise-suite: the full estimator pipeline over simulated traces.

json scenario_noise_suite(const json& cfg, const fs::path& out, int workers) {
  RealizationConfig base = parse_realization(cfg);
  const auto realizations =
      static_cast<std::size_t>(std::max(2.0, num_or(cfg, "realizations", 8.0)));
  const auto segment_length =
      static_cast<std::size_t>(num_or(cfg, "noise.segment_length", 0.0));
  const auto max_lag = static_cast<std::size_t>(num_or(cfg, "noise.max_lag", 256.0));

  std::vector<RealizationResult> results(realizations);
  parallel_indexed(realizations, workers, [&](std::size_t r) {
    results[r] = run_realization(realization_for_index(base, r));
  });

  const CurrentTrace& trace = results[0].trace;
  write_trace_csv(trace, (out / "trace.csv").string());

  const double dc_t = dc_time_average(trace);
  const double di2 = total_noise(trace);
  auto ac = autocorrelation(trace.current, max_lag);
  {
    std::ofstream csv(out / "autocorr.csv");
    csv << "tau,delta_r,r\n";
    char line[96];
    for (std::size_t lag = 0; lag < ac.delta_r.size(); ++lag) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n",
                    static_cast<double>(lag) * trace.dt_sample(), ac.delta_r[lag], ac.r[lag]);
      csv << line;
    }
  }

  auto welch = psd(trace, SpectralWindow::Hann, segment_length);
  write_spectrum_csv(welch, (out / "spectrum_welch.csv").string());
  const std::size_t seg_used =
      segment_length != 0 ? segment_length : 2 * (welch.s.size() - 1);
  auto wk = psd_from_autocorrelation(ac.delta_r, ac.dc, trace.dt_sample(), seg_used);
  write_spectrum_csv(wk.spectrum, (out / "spectrum_wk.csv").string());

  // Ensemble estimators at two fixed measurement times.
  const double duration = trace.times.back();
  const double t1 = num_or(cfg, "analysis.t1", 0.6 * duration);
  const double t2 = num_or(cfg, "analysis.t2",
                           std::min(duration, t1 + 0.25 * duration));
  std::vector<double> at_t1;
  std::vector<CurrentTrace> traces;
  for (const auto& r : results) {
    const auto idx = static_cast<std::size_t>(std::llround(t1 / trace.dt_sample()));
    at_t1.push_back(r.trace.current[std::min(idx, r.trace.current.size() - 1)]);
    traces.push_back(r.trace);
  }
  const double dc_e = ensemble_dc(at_t1);
  const double noise_e = ensemble_total_noise(at_t1);
  const double r_two_time = two_time_correlation(traces, t1, t2);
  const auto lag_bins = static_cast<std::size_t>(std::llround((t2 - t1) / trace.dt_sample()));
  const double r_from_acf =
      (lag_bins < ac.r.size()) ? ac.r[lag_bins] : std::numeric_limits<double>::quiet_NaN();

  auto ergodic = ergodic_crosscheck(trace, at_t1);

  json summary;
  summary["time_average"] = {{"dc", dc_t}, {"total_noise", di2}};
  summary["autocovariance"] = {{"delta_r0", ac.delta_r[0]},
                               {"identity_gap", std::abs(ac.delta_r[0] - di2)}};
  summary["spectrum"] = {{"integrated", welch.integrated_power()},
                         {"parseval_ratio", welch.integrated_power() / di2},
                         {"s0_plateau", welch.s0_plateau()},
                         {"fano", welch.fano},
                         {"wk_plateau_ratio", wk.spectrum.s0_plateau() / welch.s0_plateau()},
                         {"wk_imag_residue", wk.max_imag_residue}};
  summary["ensemble"] = {{"dc", dc_e},
                         {"total_noise", noise_e},
                         {"samples", at_t1.size()},
                         {"t1", t1}};
  summary["two_time"] = {{"t1", t1}, {"t2", t2}, {"r", r_two_time}, {"r_from_acf", r_from_acf}};
  summary["ergodic"] = {{"stationary_found", ergodic.stationary_found},
                        {"stationary_start", ergodic.stationary_start},
                        {"dc_time", ergodic.dc_time},
                        {"se_time", ergodic.se_time},
                        {"dc_ensemble", ergodic.dc_ensemble},
                        {"se_ensemble", ergodic.se_ensemble},
                        {"z_score", ergodic.z_score},
                        {"agree_3sigma", ergodic.agree_3sigma}};
  return summary;
}

struct ScenarioEntry {
  const char* name;
  ScenarioFn fn;
};

constexpr ScenarioEntry kScenarios[] = {
    {"barrier-1d", scenario_barrier_1d},   {"detector-2d", scenario_detector_2d},
    {"manybody", scenario_manybody},       {"transport-rtd", scenario_transport},
    {"transient", scenario_transient},     {"noise-suite", scenario_noise_suite},
};

}  // namespace

ScenarioFn find_scenario(const std::string& name) {
  for (const auto& entry : kScenarios)
    if (name == entry.name) return entry.fn;
  return nullptr;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& entry : kScenarios) names.emplace_back(entry.name);
  return names;
}

void verify_scenario_config(const json& config, VerifyReport& report) {
  auto fatal = [&](const std::string& msg) { report.issues.push_back({true, msg}); };
  auto warn = [&](const std::string& msg) { report.issues.push_back({false, msg}); };
  const std::string scenario = config["scenario"].get<std::string>();

  try {
    const double mass = parse_mass(config);

    auto check_packet_fits = [&](const Grid1D& grid, const GaussianSpec& packet) {
      if (packet.center - 5.0 * packet.sigma < grid.x_min ||
          packet.center + 5.0 * packet.sigma > grid.x_max)
        fatal("packet support (center ± 5σ) leaves the grid");
    };
    auto check_dt = [&](double dt, double energy_scale) {
      if (dt * energy_scale / hbar > 0.2)
        warn("dt-accuracy: dt·E/ħ = " + std::to_string(dt * energy_scale / hbar) +
             " exceeds 0.2; expect phase errors");
    };

    if (scenario == "barrier-1d" || scenario == "detector-2d") {
      const Grid1D grid = parse_grid(config, "grid");
      const GaussianSpec packet = parse_packet(config, "packet");
      check_packet_fits(grid, packet);
      const double barrier = num_or(config, "barrier.height", 0.0);
      const double kinetic = hbar * hbar * packet.k0 * packet.k0 / (2.0 * mass);
      check_dt(require_num(config, "propagation.dt"), std::max(barrier, kinetic));
      if (scenario == "detector-2d") {
        const double onset = require_num(config, "detector.onset");
        if (onset < grid.x_min || onset > grid.x_max)
          fatal("detector.onset lies outside the grid");
        parse_grid(config, "detector.pointer_grid");
      }
    } else if (scenario == "manybody") {
      const Grid1D grid = parse_grid(config, "grid");
      const json& particles = require(config, "particles");
      if (!particles.is_array() || particles.empty())
        fatal("particles must be a non-empty array");
      else
        for (const auto& node : particles) {
          GaussianSpec g;
          g.center = require_num(node, "center");
          g.sigma = num_or(node, "sigma", 6.0);
          g.k0 = num_or(node, "k0", 0.0);
          check_packet_fits(grid, g);
        }
      check_dt(require_num(config, "propagation.dt"), 0.3);
    } else {  // transport-rtd, transient, noise-suite
      RealizationConfig rc = parse_realization(config);
      rc.validate();
      GaussianSpec packet{rc.injection.center, rc.injection.sigma,
                          std::max(rc.injection.k0,
                                   std::sqrt(2.0 * mass * rc.injection.fermi_level) / hbar)};
      check_packet_fits(rc.device.grid, packet);
      const double kinetic = hbar * hbar * packet.k0 * packet.k0 / (2.0 * mass);
      double vmax = 0.0;
      for (const auto& seg : rc.device.segments) vmax = std::max(vmax, std::abs(seg.offset));
      check_dt(rc.dt, std::max(kinetic, vmax));
      // Absorbing layers should clear the injection packet's support.
      const double depth = rc.device.absorb_fraction *
                           (rc.device.grid.x_max - rc.device.grid.x_min);
      const double inner_left = rc.device.grid.x_min + depth;
      if (rc.injection.side == ContactSide::Left &&
          rc.injection.center - 4.0 * rc.injection.sigma < inner_left)
        warn("injection packet overlaps the left absorbing layer by more than 4σ-support");
      if (scenario == "transient") {
        std::size_t switches = 0;
        for (const auto& b : rc.device.bias_schedule)
          if (b.time > 0.0) ++switches;
        if (switches != 1) fatal("transient scenario needs exactly one bias switch");
      }
    }
  } catch (const std::exception& e) {
    fatal(e.what());
  }
}

}  // namespace bohmsim::detail
