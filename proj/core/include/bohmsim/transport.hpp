#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bohmsim/grid.hpp"
#include "bohmsim/manybody.hpp"
#include "bohmsim/tdse.hpp"

namespace bohmsim {

struct PotentialSegment {
  double offset = 0.0;  // eV
  double from = 0.0;    // nm
  double to = 0.0;      // nm
};

struct BiasPoint {
  double time = 0.0;     // fs; piecewise-constant from here on
  double voltage = 0.0;  // V, dropped linearly across the active window
};

// Device geometry: piecewise-constant profile, active window [x_left,
// x_right] for current counting, a bias schedule, and absorbing contacts.
struct DeviceSpec {
  Grid1D grid;
  std::vector<PotentialSegment> segments;
  double x_left = 0.0;
  double x_right = 0.0;
  std::vector<BiasPoint> bias_schedule;
  double absorb_fraction = 0.1;
  double absorb_strength = 0.3;  // eV

  void validate() const;
  double active_length() const { return x_right - x_left; }
};

// Double barrier flanking a well, centered at `center`.
std::vector<PotentialSegment> rtd_segments(double barrier_height = 0.3,
                                           double barrier_width = 2.0, double well_width = 5.0,
                                           double center = 0.0);

// Samples the profile (closed intervals) plus the bias ramp active at time t
// and the absorbing layers.  Electron potential energy drops by V toward the
// right contact for positive bias.
Potential1D build_device(const DeviceSpec& spec, double t = 0.0);

enum class InjectionMode { Regular, Poisson, Thermal };
enum class ContactSide { Left, Right };

struct InjectionSpec {
  InjectionMode mode = InjectionMode::Thermal;
  double rate = 0.0;         // electrons/fs (mean attempt rate; 0 = no injection)
  double temperature = 0.0;  // K
  double fermi_level = 0.1;  // eV above the contact band bottom
  ContactSide side = ContactSide::Left;
  double center = 0.0;       // packet center, nm
  double sigma = 5.0;        // packet width, nm
  double k0 = 0.0;           // fixed wave number for regular/poisson modes, nm⁻¹
  std::uint64_t seed = 0;

  void validate() const;
};

struct InjectionEvent {
  double time = 0.0;
  GaussianSpec packet;
};

// Injection law:
//  - regular: one electron every 1/rate, wave number k0 (zero-temperature
//    deterministic source);
//  - poisson: exponential inter-arrival times at `rate`, wave number k0;
//  - thermal: binomial attempts (one per 0.5/rate cell, success 1/2; mean
//    count = rate·window) with k drawn from the flux-weighted Fermi–Dirac
//    distribution P(k) ∝ k·f((ħk)²/2m − E_F) of the contact.
// Right-contact injection mirrors the sign of k.
std::vector<InjectionEvent> draw_injection(const InjectionSpec& spec, double t_begin,
                                           double t_end,
                                           double mass = constants::default_mass);

// Uniformly sampled total current of one realization, e/fs.
struct CurrentTrace {
  std::vector<double> times;
  std::vector<double> current;
  std::uint64_t alpha_seed = 0;
  std::uint64_t h_seed = 0;
  std::string config_digest;

  double dt_sample() const;
};

// 1D Ramo–Shockley reduction: I = Σ q_i·v_i/L_active over particles inside
// the active window.  Equal to conduction+displacement current through any
// cross-section of a uniform dielectric, hence independent of x_surface;
// the surface argument is only validated.
double compute_current(std::span<const ParticleState> particles, const DeviceSpec& device,
                       double x_surface);

struct RealizationConfig {
  DeviceSpec device;
  InjectionSpec injection;
  double duration = 0.0;    // fs
  double dt = 0.0;          // engine step
  double dt_sample = 1.0;   // trace sampling interval (multiple of dt)
  CoulombSpec coulomb;
  bool coulomb_enabled = false;
  double epsilon = 1e-12;
  double mass = constants::default_mass;
  double charge = 1.0;
  std::uint64_t alpha_seed = 1;
  std::uint64_t h_seed = 2;

  void validate() const;
};

struct RealizationResult {
  CurrentTrace trace;
  std::vector<ExitEvent> exits;
  std::size_t injected = 0;
  std::size_t exited_left = 0;
  std::size_t exited_right = 0;
};

// Drives the conditional-ensemble engine with stochastic injection and
// absorbing contacts; samples the Ramo current every dt_sample.  The pair
// (alpha_seed, h_seed) fully determines the trace.
RealizationResult run_realization(const RealizationConfig& cfg);

struct TransientConfig {
  RealizationConfig base;        // bias schedule must contain exactly one switch
  std::size_t realizations = 8;
  double smoothing_window = 50;  // fs, moving average for the onset detection
};

struct TransientResult {
  std::vector<double> times;
  std::vector<double> mean_current;   // ensemble mean
  std::vector<double> smoothed;       // moving-average of the mean
  std::vector<double> i_tran;         // mean minus the stationary plateaus
  double t_switch = 0.0;
  double i_pre = 0.0;   // plateau before the switch
  double i_post = 0.0;  // plateau after settling
  double delay = 0.0;   // onset delay past the switch (30% crossing)
  double tau_fit = 0.0; // exponential settling constant
  bool plateaus_converged = true;
  std::vector<double> freq;           // fs⁻¹
  std::vector<double> transform_mag;  // |FFT of i_tran past the switch|
};

TransientResult transient_response(const TransientConfig& cfg);

void write_trace_csv(const CurrentTrace& trace, const std::string& path);

}  // namespace bohmsim
