#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bohmsim/bohm.hpp"
#include "bohmsim/constants.hpp"
#include "bohmsim/grid.hpp"
#include "bohmsim/tdse.hpp"

namespace bohmsim {

// Softened pairwise Coulomb term: prefactor/√((x-X)² + s²) per other charge.
struct CoulombSpec {
  double prefactor = constants::coulomb_constant / constants::default_permittivity;  // eV·nm
  double softening = 0.5;  // nm, keeps the on-grid kernel finite

  void validate() const;
};

// One particle of the conditional-wave-function ensemble: its own 1D wave
// function ψ_i plus the actual position the others see.
struct ParticleState {
  std::uint64_t id = 0;
  ComplexField1D field;
  double position = 0.0;  // nm
  double velocity = 0.0;  // nm/fs
  double charge = 1.0;    // units of e
  double mass = constants::default_mass;
  double entry_time = 0.0;
};

struct ExitEvent {
  double time = 0.0;
  std::uint64_t particle = 0;
  int direction = 0;  // -1 left contact, +1 right contact
  double charge = 0.0;
};

// Device potential plus the softened Coulomb field of the other particles,
// each weighted by charge·charge_i.  The position-independent energy of the
// others only shifts the global phase of ψ_i and is dropped.
Potential1D conditional_potential(const Potential1D& device,
                                  std::span<const double> other_positions,
                                  std::span<const double> other_charges, double charge_i,
                                  const CoulombSpec& spec);

struct ManybodyConfig {
  Potential1D device;
  CoulombSpec coulomb;
  bool coulomb_enabled = true;
  double dt = 0.0;
  double epsilon = 1e-12;
};

// Co-propagates the per-particle conditional wave equations, coupled only
// through the actual trajectory positions (the unknown kinetic coupling
// terms of the exact conditional equation are set to zero — the simplest
// closure — which makes each equation a 1D Schrödinger equation with a
// trajectory-dependent potential).  One step() is a full cycle: freeze all
// positions, rebuild each conditional potential, advance every ψ_i by one
// Crank–Nicolson step, evaluate the guidance velocity of the fresh ψ_i at
// the frozen position, then move every position synchronously.
class ManybodyEngine {
 public:
  explicit ManybodyEngine(ManybodyConfig cfg);

  void add_particle(ParticleState state);
  void step();

  // Swaps in a new device potential (e.g. a bias switch); cached
  // factorizations are rebuilt on demand.
  void set_device(Potential1D device);

  double time() const { return time_; }
  const Grid1D& grid() const { return cfg_.device.grid; }
  const std::vector<ParticleState>& particles() const { return active_; }
  const std::vector<ExitEvent>& exits() const { return exits_; }
  const ManybodyConfig& config() const { return cfg_; }

 private:
  CrankNicolson1D& device_stepper_for(double mass);
  CrankNicolson1D& coulomb_stepper_for(double mass);

  ManybodyConfig cfg_;
  double time_ = 0.0;
  std::vector<ParticleState> active_;
  std::vector<ExitEvent> exits_;

  // Cached factorizations of the bare device potential, keyed by mass, used
  // whenever the Coulomb coupling is inactive; a second pool is re-potentialed
  // every step for the coupled case so the device cache never goes stale.
  std::vector<std::pair<double, CrankNicolson1D>> device_steppers_;
  std::vector<std::pair<double, CrankNicolson1D>> coulomb_steppers_;
  std::vector<double> scratch_total_;
  Potential1D scratch_pot_;
  std::vector<double> snapshot_positions_;
  std::vector<double> snapshot_charges_;
};

struct ManybodyRunResult {
  std::vector<Trajectory> trajectories;  // index-aligned with the initial states
  std::vector<ExitEvent> exits;
  std::vector<ParticleState> final_states;
};

using ManybodyObserver = std::function<void(double t, const ManybodyEngine& engine)>;

// Fixed initial ensemble, no injection; records each particle's trajectory
// at every `record_stride`-th step and calls `observer` on the same frames.
ManybodyRunResult run_manybody(std::vector<ParticleState> initial, const ManybodyConfig& cfg,
                               double t_end, std::size_t record_stride = 1,
                               const ManybodyObserver& observer = {});

void write_exits_csv(std::span<const ExitEvent> exits, const std::string& path);

}  // namespace bohmsim
