#include "bohmsim/tdse.hpp"

#include <cmath>
#include <stdexcept>

namespace bohmsim {

using constants::hbar;

void Potential1D::validate() const {
  if (real.size() != grid.n) throw std::invalid_argument("Potential1D: size mismatch with grid");
  for (double v : real)
    if (!std::isfinite(v)) throw std::invalid_argument("Potential1D: non-finite value");
  if (!imag.empty()) {
    if (imag.size() != grid.n)
      throw std::invalid_argument("Potential1D: absorbing profile size mismatch");
    for (double w : imag)
      if (!(w <= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("Potential1D: absorbing part must be finite and <= 0");
  }
}

void add_absorbing_layers(Potential1D& pot, double fraction, double strength) {
  if (fraction <= 0.0 || fraction >= 0.5)
    throw std::invalid_argument("add_absorbing_layers: fraction must be in (0, 0.5)");
  if (strength < 0.0) throw std::invalid_argument("add_absorbing_layers: strength must be >= 0");
  const Grid1D& g = pot.grid;
  if (pot.imag.empty()) pot.imag.assign(g.n, 0.0);
  const double depth = fraction * (g.x_max - g.x_min);
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    double s = 0.0;
    if (x < g.x_min + depth) s = (g.x_min + depth - x) / depth;
    if (x > g.x_max - depth) s = (x - (g.x_max - depth)) / depth;
    if (s > 0.0) pot.imag[i] -= strength * s * s;
  }
}

double q_profile(const DetectorCoupling& coupling, double x1) {
  if (coupling.q_width <= 0.0) throw std::invalid_argument("q_profile: width must be positive");
  const double t = (x1 - coupling.q_onset) / coupling.q_width;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

double default_dt(const Grid1D& grid, double mass) {
  const double dx = grid.dx();
  return 0.1 * (2.0 * mass * dx * dx / hbar);
}

// ---------------------------------------------------------------------------
// CrankNicolson1D

CrankNicolson1D::CrankNicolson1D(const Potential1D& pot, double mass, double dt)
    : grid_(pot.grid), mass_(mass), dt_(dt) {
  if (mass <= 0.0) throw std::invalid_argument("CrankNicolson1D: mass must be positive");
  if (dt == 0.0) throw std::invalid_argument("CrankNicolson1D: dt must be nonzero");
  pot.validate();
  factorize(pot);
}

void CrankNicolson1D::set_potential(const Potential1D& pot) {
  if (!(pot.grid == grid_)) throw std::invalid_argument("CrankNicolson1D: grid mismatch");
  pot.validate();
  factorize(pot);
}

void CrankNicolson1D::factorize(const Potential1D& pot) {
  const std::size_t n = grid_.n;
  const double dx = grid_.dx();
  const double c = hbar * hbar / (2.0 * mass_ * dx * dx);
  const Complex r{0.0, dt_ / (2.0 * hbar)};

  off_a_ = -r * c;
  off_b_ = r * c;
  diag_b_.resize(n);
  cprime_.resize(n);
  invden_.resize(n);
  rhs_.resize(n);

  Complex prev_cprime{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    Complex v{pot.real[i], pot.imag.empty() ? 0.0 : pot.imag[i]};
    const Complex h_diag = 2.0 * c + v;
    const Complex a_diag = 1.0 + r * h_diag;
    diag_b_[i] = 1.0 - r * h_diag;

    const Complex den = (i == 0) ? a_diag : a_diag - off_a_ * prev_cprime;
    invden_[i] = 1.0 / den;
    cprime_[i] = off_a_ * invden_[i];
    prev_cprime = cprime_[i];
  }
}

void CrankNicolson1D::step(ComplexField1D& field) {
  if (!(field.grid == grid_)) throw std::invalid_argument("step_1d: field/potential grid mismatch");
  const std::size_t n = grid_.n;
  const auto& psi = field.amplitudes;

  rhs_[0] = diag_b_[0] * psi[0] + off_b_ * psi[1];
  for (std::size_t i = 1; i + 1 < n; ++i)
    rhs_[i] = diag_b_[i] * psi[i] + off_b_ * (psi[i - 1] + psi[i + 1]);
  rhs_[n - 1] = diag_b_[n - 1] * psi[n - 1] + off_b_ * psi[n - 2];

  // Thomas solve with cached elimination coefficients.
  rhs_[0] *= invden_[0];
  for (std::size_t i = 1; i < n; ++i) rhs_[i] = (rhs_[i] - off_a_ * rhs_[i - 1]) * invden_[i];
  field.amplitudes[n - 1] = rhs_[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    field.amplitudes[i] = rhs_[i] - cprime_[i] * field.amplitudes[i + 1];
}

// ---------------------------------------------------------------------------
// Adi2D

Adi2D::Adi2D(const Grid2D& grid, const Potential1D& pot_axis1, const DetectorCoupling& coupling,
             double mass1, double mass2, double dt)
    : grid_(grid), coupling_(coupling), dt_(dt) {
  if (!(pot_axis1.grid == grid.axis1))
    throw std::invalid_argument("Adi2D: potential grid does not match axis1");
  pot_axis1.validate();
  if (mass1 <= 0.0 || mass2 <= 0.0) throw std::invalid_argument("Adi2D: masses must be positive");
  if (dt == 0.0) throw std::invalid_argument("Adi2D: dt must be nonzero");
  if (coupling.lambda != 0.0 &&
      (coupling.q_onset < grid.axis1.x_min || coupling.q_onset > grid.axis1.x_max))
    throw std::invalid_argument("Adi2D: coupling onset outside axis1 range");
  if (coupling.q_width <= 0.0) throw std::invalid_argument("Adi2D: coupling width must be positive");

  const std::size_t n1 = grid.axis1.n;
  const std::size_t n2 = grid.axis2.n;
  const double dx1 = grid.axis1.dx();
  const double dx2 = grid.axis2.dx();
  const double c1 = hbar * hbar / (2.0 * mass1 * dx1 * dx1);
  const double c2 = hbar * hbar / (2.0 * mass2 * dx2 * dx2);
  const Complex r{0.0, dt / (2.0 * hbar)};

  // axis1 operator
  a1_off_ = -r * c1;
  b1_off_ = r * c1;
  b1_diag_.resize(n1);
  a1_cprime_.resize(n1);
  a1_invden_.resize(n1);
  Complex prev{0.0, 0.0};
  for (std::size_t i = 0; i < n1; ++i) {
    Complex v{pot_axis1.real[i], pot_axis1.imag.empty() ? 0.0 : pot_axis1.imag[i]};
    const Complex h_diag = 2.0 * c1 + v;
    const Complex a_diag = 1.0 + r * h_diag;
    b1_diag_[i] = 1.0 - r * h_diag;
    const Complex den = (i == 0) ? a_diag : a_diag - a1_off_ * prev;
    a1_invden_[i] = 1.0 / den;
    a1_cprime_[i] = a1_off_ * a1_invden_[i];
    prev = a1_cprime_[i];
  }

  // axis2 operators: H₂ψ|_j = -c2(ψ_{j+1}-2ψ_j+ψ_{j-1}) - i·g(x1)·(ψ_{j+1}-ψ_{j-1}),
  // g = ħλQ(x1)/(2dx2).  Hermitian for every x1, so the Cayley step is unitary.
  a2_diag_ = 1.0 + r * (2.0 * c2);
  b2_diag_ = 1.0 - r * (2.0 * c2);
  a2_lower_.resize(n1);
  a2_upper_.resize(n1);
  b2_lower_.resize(n1);
  b2_upper_.resize(n1);
  a2_cprime_.resize(n1 * n2);
  a2_invden_.resize(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    const double g = hbar * coupling.lambda * q_profile(coupling, grid.axis1.x(i)) / (2.0 * dx2);
    const Complex h_up{-c2, -g};  // coefficient of ψ_{j+1}
    const Complex h_dn{-c2, +g};  // coefficient of ψ_{j-1}
    a2_upper_[i] = r * h_up;
    a2_lower_[i] = r * h_dn;
    b2_upper_[i] = -r * h_up;
    b2_lower_[i] = -r * h_dn;

    Complex pc{0.0, 0.0};
    for (std::size_t j = 0; j < n2; ++j) {
      const Complex den = (j == 0) ? a2_diag_ : a2_diag_ - a2_lower_[i] * pc;
      a2_invden_[i * n2 + j] = 1.0 / den;
      a2_cprime_[i * n2 + j] = a2_upper_[i] * a2_invden_[i * n2 + j];
      pc = a2_cprime_[i * n2 + j];
    }
  }

  row_prev_.resize(n2);
  row_tmp_.resize(n2);
}

void Adi2D::step(ComplexField2D& field) {
  if (!(field.grid == grid_)) throw std::invalid_argument("step_2d: field grid mismatch");
  const std::size_t n1 = grid_.axis1.n;
  const std::size_t n2 = grid_.axis2.n;
  Complex* f = field.amplitudes.data();

  // Half-step A: rhs = (1 - rH₂)ψ, in place row by row.
  for (std::size_t i = 0; i < n1; ++i) {
    Complex* row = f + i * n2;
    const Complex up = b2_upper_[i];
    const Complex dn = b2_lower_[i];
    Complex prev{0.0, 0.0};
    for (std::size_t j = 0; j < n2; ++j) {
      const Complex cur = row[j];
      const Complex nxt = (j + 1 < n2) ? row[j + 1] : Complex{0.0, 0.0};
      row[j] = b2_diag_ * cur + dn * prev + up * nxt;
      prev = cur;
    }
  }

  // Solve (1 + rH₁)ψ* = rhs along axis1; all columns share the factorization,
  // so sweep row-wise with the column index as the contiguous inner loop.
  {
    Complex* row0 = f;
    const Complex inv0 = a1_invden_[0];
    for (std::size_t j = 0; j < n2; ++j) row0[j] *= inv0;
    for (std::size_t i = 1; i < n1; ++i) {
      Complex* row = f + i * n2;
      const Complex* prev = f + (i - 1) * n2;
      const Complex a = a1_off_;
      const Complex inv = a1_invden_[i];
      for (std::size_t j = 0; j < n2; ++j) row[j] = (row[j] - a * prev[j]) * inv;
    }
    for (std::size_t i = n1 - 1; i-- > 0;) {
      Complex* row = f + i * n2;
      const Complex* nxt = f + (i + 1) * n2;
      const Complex cp = a1_cprime_[i];
      for (std::size_t j = 0; j < n2; ++j) row[j] -= cp * nxt[j];
    }
  }

  // Half-step B: rhs = (1 - rH₁)ψ*, in place with one saved row.
  {
    for (std::size_t j = 0; j < n2; ++j) row_prev_[j] = Complex{0.0, 0.0};
    for (std::size_t i = 0; i < n1; ++i) {
      Complex* row = f + i * n2;
      const Complex* nxt = (i + 1 < n1) ? f + (i + 1) * n2 : nullptr;
      const Complex bd = b1_diag_[i];
      for (std::size_t j = 0; j < n2; ++j) {
        const Complex cur = row[j];
        const Complex up = nxt ? nxt[j] : Complex{0.0, 0.0};
        row_tmp_[j] = bd * cur + b1_off_ * (row_prev_[j] + up);
        row_prev_[j] = cur;
      }
      for (std::size_t j = 0; j < n2; ++j) row[j] = row_tmp_[j];
    }
  }

  // Solve (1 + rH₂)ψ^{n+1} = rhs per row (contiguous, cached factorization).
  for (std::size_t i = 0; i < n1; ++i) {
    Complex* row = f + i * n2;
    const Complex a = a2_lower_[i];
    const Complex* inv = a2_invden_.data() + i * n2;
    const Complex* cp = a2_cprime_.data() + i * n2;
    row[0] *= inv[0];
    for (std::size_t j = 1; j < n2; ++j) row[j] = (row[j] - a * row[j - 1]) * inv[j];
    for (std::size_t j = n2 - 1; j-- > 0;) row[j] -= cp[j] * row[j + 1];
  }
}

// ---------------------------------------------------------------------------

ComplexField1D step_1d(const ComplexField1D& field, const Potential1D& pot,
                       const PropagatorConfig& cfg, double mass) {
  CrankNicolson1D stepper(pot, mass, cfg.dt);
  ComplexField1D out = field;
  stepper.step(out);
  return out;
}

ComplexField2D step_2d(const ComplexField2D& field, const Potential1D& pot_axis1,
                       const DetectorCoupling& coupling, double mass2,
                       const PropagatorConfig& cfg, double mass1) {
  Adi2D stepper(field.grid, pot_axis1, coupling, mass1, mass2, cfg.dt);
  ComplexField2D out = field;
  stepper.step(out);
  return out;
}

}  // namespace bohmsim
