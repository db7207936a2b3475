#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace bohmsim {

using Complex = std::complex<double>;

// Uniform 1D grid over [x_min, x_max] with n nodes, spacing dx = span/(n-1).
struct Grid1D {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n = 0;

  Grid1D() = default;
  Grid1D(double x_min_, double x_max_, std::size_t n_);

  double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
  bool contains(double x) const { return x >= x_min && x <= x_max; }

  bool operator==(const Grid1D&) const = default;
};

// Product grid: axis1 is the system coordinate x1, axis2 the pointer x2.
struct Grid2D {
  Grid1D axis1;
  Grid1D axis2;

  bool operator==(const Grid2D&) const = default;
};

// Wave function samples on a Grid1D; amplitudes carry nm^(-1/2).
struct ComplexField1D {
  Grid1D grid;
  std::vector<Complex> amplitudes;

  ComplexField1D() = default;
  explicit ComplexField1D(const Grid1D& g) : grid(g), amplitudes(g.n, Complex{0.0, 0.0}) {}

  Complex& operator[](std::size_t i) { return amplitudes[i]; }
  const Complex& operator[](std::size_t i) const { return amplitudes[i]; }
};

// Wave function samples on a Grid2D, axis1-major: index = i1*n2 + i2.
struct ComplexField2D {
  Grid2D grid;
  std::vector<Complex> amplitudes;

  ComplexField2D() = default;
  explicit ComplexField2D(const Grid2D& g)
      : grid(g), amplitudes(g.axis1.n * g.axis2.n, Complex{0.0, 0.0}) {}

  Complex& at(std::size_t i1, std::size_t i2) { return amplitudes[i1 * grid.axis2.n + i2]; }
  const Complex& at(std::size_t i1, std::size_t i2) const {
    return amplitudes[i1 * grid.axis2.n + i2];
  }
};

// Gaussian packet ∝ exp(-(x-center)²/(4σ²))·exp(i k0 x).
struct GaussianSpec {
  double center = 0.0;  // nm
  double sigma = 1.0;   // nm
  double k0 = 0.0;      // nm⁻¹
};

// Normalized Gaussian packet; throws if the ±5σ support leaves the grid.
ComplexField1D make_gaussian(const Grid1D& grid, const GaussianSpec& spec);

// Product of two 1D fields, Ψ(x1,x2) = ψ(x1)·φ(x2).
ComplexField2D product_state(const ComplexField1D& psi1, const ComplexField1D& psi2);

// Trapezoid-rule ∫|ψ|² dx.
double norm2(const ComplexField1D& field);
double norm2(const ComplexField2D& field);

// ∫_a^b |ψ|² dx with |ψ|² treated as piecewise linear between nodes, so
// adjacent regions add exactly.  Throws if [a,b] leaves the grid or a >= b.
double probability_in_region(const ComplexField1D& field, double a, double b);

// Trapezoid ⟨x⟩ (normalized by the field's own norm²).
double mean_position(const ComplexField1D& field);

// Spectral ⟨p⟩ = Σ ħk |ψ̃_k|² / Σ |ψ̃_k|², eV·fs/nm.
double mean_momentum(const ComplexField1D& field);

// Cubic (Catmull–Rom) interpolation of the amplitudes at x; linear in the
// first/last cell.  Throws if x is outside the grid.
Complex interpolate(const ComplexField1D& field, double x);

// Same interpolation applied to an arbitrary node array on the grid.
Complex interpolate_nodes(const Grid1D& grid, std::vector<Complex> const& nodes, double x);

// Centered-difference derivative samples: 6th-order stencil in the
// interior, 2nd-order within 3 nodes of an edge, one-sided at the ends.
std::vector<Complex> centered_derivative(const ComplexField1D& field);

// One node of the same derivative rule (shared by the local evaluators).
Complex derivative_node(const Grid1D& grid, std::vector<Complex> const& nodes, std::size_t i);

double max_abs2(const ComplexField1D& field);

}  // namespace bohmsim
