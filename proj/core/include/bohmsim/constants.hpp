#pragma once

// Unit system used throughout: length in nm, time in fs, energy in eV.
// Charge is carried in units of the elementary charge e; currents are e/fs.
// Masses are in eV·fs²/nm² so that E = p²/2m works with p = ħk, [k] = nm⁻¹.

namespace bohmsim::constants {

// Reduced Planck constant, eV·fs.
inline constexpr double hbar = 0.6582119569;

// Speed of light, nm/fs.
inline constexpr double c_light = 299.792458;

// Free electron rest mass m_e = (m_e c²)/c², eV·fs²/nm².
inline constexpr double electron_mass = 510998.95 / (c_light * c_light);

// GaAs-style effective-mass ratio used as the device default.
inline constexpr double default_mass_ratio = 0.067;

inline constexpr double default_mass = default_mass_ratio * electron_mass;

// e²/(4πε₀), eV·nm.  Divide by a relative permittivity for screened Coulomb.
inline constexpr double coulomb_constant = 1.439964548;

// Default relative permittivity (GaAs).
inline constexpr double default_permittivity = 12.9;

// 1 e/fs expressed in ampere, for readers converting traces to SI.
inline constexpr double efs_to_ampere = 1.602176634e-4;

// Boltzmann constant, eV/K.
inline constexpr double k_boltzmann = 8.617333262e-5;

}  // namespace bohmsim::constants
