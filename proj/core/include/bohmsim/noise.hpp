#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bohmsim/transport.hpp"

namespace bohmsim {

// Time-average DC of a uniformly sampled trace (Riemann mean).
double dc_time_average(std::span<const double> trace);
double dc_time_average(const CurrentTrace& trace);

// Total noise ΔI²: population variance of the samples.
double total_noise(std::span<const double> trace);
double total_noise(const CurrentTrace& trace);

// Biased (1/N) autocovariance estimator; delta_r[0] equals total_noise
// exactly.  The raw autocorrelation is exposed through the identity
// r(τ) = delta_r(τ) + dc², which then holds exactly on the estimator.
struct AutocorrelationResult {
  std::vector<double> delta_r;
  std::vector<double> r;
  double dc = 0.0;
};

AutocorrelationResult autocorrelation(std::span<const double> trace, std::size_t max_lag);

enum class SpectralWindow { Hann, Rectangular };

// One-sided power spectral density plus the derived scalars.  The measured
// symmetric two-sided density is folded: S(f) here carries both ±f halves,
// so ∫₀^∞ S df recovers the total noise.
struct NoiseSpectrum {
  std::vector<double> frequencies;  // fs⁻¹, uniform from 0
  std::vector<double> s;            // (e/fs)²·fs
  double dc = 0.0;                  // e/fs
  double total_noise = 0.0;         // (e/fs)²
  double fano = 0.0;                // NaN when dc == 0

  double df() const;
  // Low-frequency plateau: mean of bins 1..4 (bin 0 is the removed DC).
  double s0_plateau() const;
  double integrated_power() const;  // Σ S·df
};

// Welch-averaged periodogram of the mean-removed trace: 50% overlap,
// default Hann window; segment_length = 0 picks the largest power of two
// giving at least 8 segments.
NoiseSpectrum psd(std::span<const double> trace, double dt_sample,
                  SpectralWindow window = SpectralWindow::Hann, std::size_t segment_length = 0);
NoiseSpectrum psd(const CurrentTrace& trace, SpectralWindow window = SpectralWindow::Hann,
                  std::size_t segment_length = 0);

// Direct Wiener–Khinchine path: one-sided transform of the autocovariance,
// evaluated on the same frequency grid a segment_length-point Welch run
// would use.  max_imag_residue reports |Im| of the complex transform
// relative to max|S| (the symmetric sum is real up to rounding).
struct AutocorrTransform {
  NoiseSpectrum spectrum;
  double max_imag_residue = 0.0;
};

AutocorrTransform psd_from_autocorrelation(std::span<const double> delta_r, double dc,
                                           double dt_sample, std::size_t segment_length);

// Ensemble estimators at fixed measurement time (one value per device).
double ensemble_dc(std::span<const double> samples);
double ensemble_total_noise(std::span<const double> samples);

// Ensemble mean of I(t1)·I(t2) across realizations.
double two_time_correlation(std::span<const CurrentTrace> ensemble, double t1, double t2);

// Fano factor F = S(0)/(2q·|⟨I⟩|) from the low-frequency plateau; q = 1 e.
double fano(const NoiseSpectrum& spectrum);

// Side-by-side time-average vs ensemble-average DC comparison on the
// detected stationary segment.  A missing stationary segment or a >3σ
// disagreement is reported, not thrown: the ergodic connection is an
// approximation for driven devices.
struct ErgodicReport {
  bool stationary_found = false;
  double stationary_start = 0.0;  // fs
  double dc_time = 0.0;
  double se_time = 0.0;
  double dc_ensemble = 0.0;
  double se_ensemble = 0.0;
  double z_score = 0.0;
  bool agree_3sigma = false;
};

ErgodicReport ergodic_crosscheck(const CurrentTrace& trace,
                                 std::span<const double> ensemble_samples);

void write_spectrum_csv(const NoiseSpectrum& spectrum, const std::string& path);

}  // namespace bohmsim
