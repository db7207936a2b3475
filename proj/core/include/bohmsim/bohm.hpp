#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "bohmsim/constants.hpp"
#include "bohmsim/grid.hpp"
#include "bohmsim/rng.hpp"
#include "bohmsim/tdse.hpp"

namespace bohmsim {

// One ensemble member's history.  `alpha` is the ensemble index that, with
// the seed, fully determines the member's random stream.
struct Trajectory {
  std::vector<double> times;      // fs, strictly increasing
  std::vector<double> positions;  // nm
  std::vector<double> velocities; // nm/fs
  std::uint64_t seed = 0;
  std::uint64_t alpha = 0;
  bool absorbed = false;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  int exit_direction = 0;  // -1 exited left, +1 exited right

  double position_at(double t) const;  // linear interpolation between samples
};

struct Trajectory2D {
  std::vector<double> times;
  std::vector<double> x1, x2;
  std::vector<double> v1, v2;
  std::uint64_t seed = 0;
  std::uint64_t alpha = 0;
  bool absorbed = false;
  double exit_time = std::numeric_limits<double>::quiet_NaN();

  std::pair<double, double> position_at(double t) const;
};

struct EnsembleSpec {
  std::size_t size = 1;      // M_α
  std::uint64_t seed = 0;
  double epsilon = 1e-12;    // relative node guard for velocities

  void validate() const;
};

// Guidance velocity v = (ħ/m)·Im[ψ'/ψ]: ψ by cubic interpolation, ψ' by
// cubic interpolation of centered differences.  Near nodes the denominator
// is floored at ε·max|ψ|² (J/(|ψ|²+ε·max) is bounded and sign-preserving;
// nodes carry no probability weight, so statistics are unaffected).
class VelocityField1D {
 public:
  VelocityField1D(const ComplexField1D& field, double epsilon,
                  double mass = constants::default_mass);

  double operator()(double x) const;

 private:
  const ComplexField1D* field_;
  std::vector<Complex> deriv_;
  double floor_;
  double hbar_over_m_;
};

// 2D guidance velocities for the system+pointer Hamiltonian.  The x2
// component carries the coupling drift λQ(x1) on top of (ħ/M)Im[∂₂Ψ/Ψ]:
// the probability current of the -iħλQ(x1)∂₂ term is λQ(x1)|Ψ|², as the
// continuity equation for that Hamiltonian requires.  Component evaluation
// interpolates the orthogonal axis first, then applies the 1D stencils, so
// v1 here is bit-for-bit the 1D guidance velocity of the conditional slice.
class VelocityField2D {
 public:
  VelocityField2D(const ComplexField2D& field, double epsilon, double mass1, double mass2,
                  const DetectorCoupling* coupling = nullptr);

  std::pair<double, double> operator()(double x1, double x2) const;

 private:
  const ComplexField2D* field_;
  double floor_;
  double hbar_over_m1_;
  double hbar_over_m2_;
  const DetectorCoupling* coupling_;
};

double bohm_velocity_1d(const ComplexField1D& field, double x, double epsilon,
                        double mass = constants::default_mass);

// Same velocity from local stencils only (O(1) per call); floor_rho is the
// absolute density floor ε·max|ψ|², supplied by the caller.
double bohm_velocity_local(const ComplexField1D& field, double x, double floor_rho,
                           double mass = constants::default_mass);

std::pair<double, double> bohm_velocity_2d(const ComplexField2D& field, double x1, double x2,
                                           double epsilon,
                                           const DetectorCoupling* coupling = nullptr,
                                           double mass1 = constants::default_mass,
                                           double mass2 = constants::default_mass);

// Quantum-equilibrium sampling: i.i.d. draws from |ψ|²/norm² by inverting
// the trapezoid cumulative; sample α uses stream (seed, α).
std::vector<double> sample_positions(const ComplexField1D& field, const EnsembleSpec& spec);

// Single draw from |ψ|²/norm² consuming one uniform from the given stream.
double sample_position(const ComplexField1D& field, RandomStream& rng);

std::vector<std::pair<double, double>> sample_positions_2d(const ComplexField2D& field,
                                                           const EnsembleSpec& spec);

struct IntegrationOptions {
  double epsilon = 1e-12;
  double mass = constants::default_mass;
  double mass2 = constants::default_mass;  // pointer mass (2D)
  double v_cap_factor = 2.0;               // cap |v| at factor·dx/dt
  std::size_t record_stride = 1;           // keep every k-th step in the history
  const DetectorCoupling* coupling = nullptr;  // 2D only
  std::uint64_t seed = 0;                  // stamped into trajectories
};

// Advances `field` in place from step k to k+1 (t = k·dt to (k+1)·dt).
using FieldEvolution1D = std::function<void(std::size_t step_index, ComplexField1D& field)>;
using FieldEvolution2D = std::function<void(std::size_t step_index, ComplexField2D& field)>;

// Called after every recorded step with the freshly advanced field.
using FrameObserver2D = std::function<void(std::size_t step_index, double t,
                                           const ComplexField2D& field,
                                           std::span<const Trajectory2D> trajectories)>;

// Explicit-midpoint (RK2) integration synchronized with the propagator:
// velocities are linearly interpolated in time between consecutive frames.
// Trajectories leaving the grid are marked absorbed with their exit time.
std::vector<Trajectory> integrate_trajectories(std::span<const double> initial_positions,
                                               const ComplexField1D& initial_field,
                                               const FieldEvolution1D& evolve, double dt,
                                               std::size_t steps,
                                               const IntegrationOptions& opts = {});

std::vector<Trajectory2D> integrate_trajectories_2d(
    std::span<const std::pair<double, double>> initial_positions,
    const ComplexField2D& initial_field, const FieldEvolution2D& evolve, double dt,
    std::size_t steps, const IntegrationOptions& opts = {},
    const FrameObserver2D& observer = {});

// Ensemble mean of a local observable at time t (Bohmian expectation value).
double bohmian_expectation(std::span<const Trajectory> ensemble,
                           const std::function<double(double)>& local_fn, double t);

}  // namespace bohmsim
