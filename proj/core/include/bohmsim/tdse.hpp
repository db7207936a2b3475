#pragma once

#include <vector>

#include "bohmsim/constants.hpp"
#include "bohmsim/grid.hpp"

namespace bohmsim {

// Node-sampled potential: real part in eV, plus an optional imaginary part
// (≤ 0 everywhere) acting as a complex absorbing layer at open contacts.
struct Potential1D {
  Grid1D grid;
  std::vector<double> real;
  std::vector<double> imag;  // empty means no absorbing layer

  Potential1D() = default;
  explicit Potential1D(const Grid1D& g) : grid(g), real(g.n, 0.0) {}

  bool has_absorber() const { return !imag.empty(); }
  void validate() const;
};

// Adds a quadratic-ramp absorbing profile over the outer `fraction` of each
// side: imag -= strength·s², s ∈ [0,1] rising toward the boundary.
void add_absorbing_layers(Potential1D& pot, double fraction, double strength);

// System–pointer interaction: velocity-type coupling λ·Q(x1)·P_x2 with a soft
// C¹ turn-on of Q between onset and onset+width.
struct DetectorCoupling {
  double lambda = 0.0;   // nm/fs
  double q_onset = 0.0;  // nm
  double q_width = 5.0;  // nm
};

// Smoothstep: 0 below onset, 1 above onset+width, t²(3-2t) in between.
double q_profile(const DetectorCoupling& coupling, double x1);

enum class Scheme { CrankNicolson1D, Adi2D };

struct PropagatorConfig {
  double dt = 0.0;  // fs; accuracy wants dt·E_max/ħ ≪ 1 (CN/ADI are unconditionally stable)
  Scheme scheme = Scheme::CrankNicolson1D;
  int steps_per_frame = 1;
};

// Accuracy-motivated default step: 0.1·(2m·dx²/ħ).
double default_dt(const Grid1D& grid, double mass = constants::default_mass);

// Crank–Nicolson stepper with a cached Thomas factorization; the matrix is
// rebuilt only when the potential changes.
class CrankNicolson1D {
 public:
  CrankNicolson1D(const Potential1D& pot, double mass, double dt);

  void set_potential(const Potential1D& pot);
  void step(ComplexField1D& field);

  const Grid1D& grid() const { return grid_; }
  double dt() const { return dt_; }
  double mass() const { return mass_; }

 private:
  void factorize(const Potential1D& pot);

  Grid1D grid_;
  double mass_;
  double dt_;
  Complex off_a_;                 // sub/super-diagonal of (1 + rH)
  Complex off_b_;                 // sub/super-diagonal of (1 - rH)
  std::vector<Complex> diag_b_;   // diagonal of (1 - rH)
  std::vector<Complex> cprime_;   // cached elimination coefficients
  std::vector<Complex> invden_;
  std::vector<Complex> rhs_;
};

// Peaceman–Rachford ADI stepper for the system+pointer Hamiltonian
//   H = -ħ²/(2m)∂₁² + U(x1) - ħ²/(2M)∂₂² - iħλQ(x1)∂₂.
// The coupling term is folded into the x2 half-step, where it is tridiagonal
// with an x1-dependent coefficient; both half-operators are Cayley-unitary.
class Adi2D {
 public:
  Adi2D(const Grid2D& grid, const Potential1D& pot_axis1, const DetectorCoupling& coupling,
        double mass1, double mass2, double dt);

  void step(ComplexField2D& field);

  const Grid2D& grid() const { return grid_; }
  double dt() const { return dt_; }
  const DetectorCoupling& coupling() const { return coupling_; }

 private:
  Grid2D grid_;
  DetectorCoupling coupling_;
  double dt_;

  // axis1 operator (shared by every x2 column)
  Complex a1_off_;  // off-diagonal of (1 + rH₁)
  Complex b1_off_;  // off-diagonal of (1 - rH₁)
  std::vector<Complex> b1_diag_;
  std::vector<Complex> a1_cprime_;
  std::vector<Complex> a1_invden_;

  // axis2 operators, one tridiagonal system per x1 node
  Complex a2_diag_;  // 1 + r·2c2 (same for all)
  Complex b2_diag_;
  std::vector<Complex> a2_lower_, a2_upper_;  // per x1 node
  std::vector<Complex> b2_lower_, b2_upper_;
  std::vector<Complex> a2_cprime_, a2_invden_;  // n1 × n2, row-major

  std::vector<Complex> row_prev_, row_tmp_;
};

// Contract-level single-step entry points.
ComplexField1D step_1d(const ComplexField1D& field, const Potential1D& pot,
                       const PropagatorConfig& cfg, double mass = constants::default_mass);

ComplexField2D step_2d(const ComplexField2D& field, const Potential1D& pot_axis1,
                       const DetectorCoupling& coupling, double mass2,
                       const PropagatorConfig& cfg, double mass1 = constants::default_mass);

}  // namespace bohmsim
