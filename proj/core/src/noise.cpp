#include "bohmsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "bohmsim/fft.hpp"
#include "bohmsim/stats.hpp"

namespace bohmsim {

namespace {
constexpr double kTwoPi = 6.283185307179586477;
}

double dc_time_average(std::span<const double> trace) {
  if (trace.size() < 2) throw std::invalid_argument("dc_time_average: trace too short");
  return mean(trace);
}

double dc_time_average(const CurrentTrace& trace) { return dc_time_average(std::span(trace.current)); }

double total_noise(std::span<const double> trace) {
  if (trace.size() < 2) throw std::invalid_argument("total_noise: trace too short");
  return variance(trace);
}

double total_noise(const CurrentTrace& trace) { return total_noise(std::span(trace.current)); }

AutocorrelationResult autocorrelation(std::span<const double> trace, std::size_t max_lag) {
  const std::size_t n = trace.size();
  if (n < 4) throw std::invalid_argument("autocorrelation: trace too short");
  if (max_lag >= n / 2) throw std::invalid_argument("autocorrelation: max_lag must be < length/2");

  AutocorrelationResult out;
  out.dc = mean(trace);
  out.delta_r.resize(max_lag + 1);
  out.r.resize(max_lag + 1);

  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = trace[i] - out.dc;

  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += centered[i] * centered[i + lag];
    out.delta_r[lag] = acc / static_cast<double>(n);
    out.r[lag] = out.delta_r[lag] + out.dc * out.dc;
  }
  return out;
}

double NoiseSpectrum::df() const {
  if (frequencies.size() < 2) throw std::invalid_argument("NoiseSpectrum: too few bins");
  return frequencies[1] - frequencies[0];
}

double NoiseSpectrum::s0_plateau() const {
  if (s.size() < 6) throw std::invalid_argument("NoiseSpectrum: too few bins for a plateau");
  return 0.25 * (s[1] + s[2] + s[3] + s[4]);
}

double NoiseSpectrum::integrated_power() const {
  double acc = 0.0;
  for (double v : s) acc += v;
  return acc * df();
}

NoiseSpectrum psd(std::span<const double> trace, double dt_sample, SpectralWindow window,
                  std::size_t segment_length) {
  const std::size_t n = trace.size();
  if (n < 16) throw std::invalid_argument("psd: trace too short");
  if (!(dt_sample > 0.0)) throw std::invalid_argument("psd: dt_sample must be positive");

  if (segment_length == 0) {
    // Largest power of two giving at least 8 half-overlapped segments.
    std::size_t len = 1;
    while (len * 2 <= (2 * n) / 9) len <<= 1;
    segment_length = len;
  }
  if (segment_length > n) throw std::invalid_argument("psd: segment_length exceeds trace length");
  if (segment_length < 8) throw std::invalid_argument("psd: segment_length too small");

  const std::size_t len = segment_length;
  const std::size_t hop = len / 2;
  const double dc = mean(trace);

  std::vector<double> win(len, 1.0);
  if (window == SpectralWindow::Hann) {
    for (std::size_t i = 0; i < len; ++i)
      win[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(len)));
  }
  double w2 = 0.0;
  for (double w : win) w2 += w * w;

  const std::size_t half = len / 2;
  std::vector<double> acc(half + 1, 0.0);
  std::size_t segments = 0;
  std::vector<Complex> buf(len);
  for (std::size_t start = 0; start + len <= n; start += hop) {
    for (std::size_t i = 0; i < len; ++i)
      buf[i] = Complex{(trace[start + i] - dc) * win[i], 0.0};
    fft(buf, false);
    for (std::size_t k = 0; k <= half; ++k) acc[k] += std::norm(buf[k]);
    ++segments;
  }
  if (segments == 0) throw std::invalid_argument("psd: no full segment fits the trace");

  NoiseSpectrum out;
  out.dc = dc;
  out.total_noise = variance(trace);
  out.frequencies.resize(half + 1);
  out.s.resize(half + 1);
  const double scale = dt_sample / (w2 * static_cast<double>(segments));
  for (std::size_t k = 0; k <= half; ++k) {
    out.frequencies[k] = static_cast<double>(k) / (static_cast<double>(len) * dt_sample);
    const double two_sided = acc[k] * scale;
    const bool interior = (k != 0) && !(len % 2 == 0 && k == half);
    out.s[k] = interior ? 2.0 * two_sided : two_sided;
  }
  out.fano = (dc != 0.0) ? out.s0_plateau() / (2.0 * std::abs(dc))
                         : std::numeric_limits<double>::quiet_NaN();
  return out;
}

NoiseSpectrum psd(const CurrentTrace& trace, SpectralWindow window, std::size_t segment_length) {
  return psd(std::span(trace.current), trace.dt_sample(), window, segment_length);
}

AutocorrTransform psd_from_autocorrelation(std::span<const double> delta_r, double dc,
                                           double dt_sample, std::size_t segment_length) {
  if (delta_r.empty()) throw std::invalid_argument("psd_from_autocorrelation: empty input");
  if (segment_length < 8) throw std::invalid_argument("psd_from_autocorrelation: segment too small");

  const std::size_t half = segment_length / 2;
  AutocorrTransform out;
  out.spectrum.dc = dc;
  out.spectrum.total_noise = delta_r[0];
  out.spectrum.frequencies.resize(half + 1);
  out.spectrum.s.resize(half + 1);

  double max_abs = 0.0;
  double max_im = 0.0;
  for (std::size_t k = 0; k <= half; ++k) {
    const double f = static_cast<double>(k) / (static_cast<double>(segment_length) * dt_sample);
    std::complex<double> sum{delta_r[0], 0.0};
    for (std::size_t lag = 1; lag < delta_r.size(); ++lag) {
      const double phase = kTwoPi * f * static_cast<double>(lag) * dt_sample;
      // symmetric pair ±lag
      sum += delta_r[lag] * (std::complex<double>{std::cos(phase), -std::sin(phase)} +
                             std::complex<double>{std::cos(phase), std::sin(phase)});
    }
    const double two_sided = sum.real() * dt_sample;
    const bool interior = (k != 0) && !(segment_length % 2 == 0 && k == half);
    out.spectrum.frequencies[k] = f;
    out.spectrum.s[k] = interior ? 2.0 * two_sided : two_sided;
    max_abs = std::max(max_abs, std::abs(out.spectrum.s[k]));
    max_im = std::max(max_im, std::abs(sum.imag()) * dt_sample);
  }
  out.max_imag_residue = (max_abs > 0.0) ? max_im / max_abs : 0.0;
  out.spectrum.fano = (dc != 0.0) ? out.spectrum.s0_plateau() / (2.0 * std::abs(dc))
                                  : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double ensemble_dc(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("ensemble_dc: empty ensemble");
  return mean(samples);
}

double ensemble_total_noise(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("ensemble_total_noise: empty ensemble");
  return variance(samples);
}

namespace {

double trace_value_at(const CurrentTrace& trace, double t) {
  const double dt = trace.dt_sample();
  const double pos = (t - trace.times.front()) / dt;
  const auto idx = static_cast<std::ptrdiff_t>(std::llround(pos));
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(trace.times.size()))
    throw std::invalid_argument("two_time_correlation: time outside trace");
  return trace.current[static_cast<std::size_t>(idx)];
}

}  // namespace

double two_time_correlation(std::span<const CurrentTrace> ensemble, double t1, double t2) {
  if (ensemble.empty()) throw std::invalid_argument("two_time_correlation: empty ensemble");
  double acc = 0.0;
  for (const auto& trace : ensemble) acc += trace_value_at(trace, t1) * trace_value_at(trace, t2);
  return acc / static_cast<double>(ensemble.size());
}

double fano(const NoiseSpectrum& spectrum) {
  if (spectrum.dc == 0.0) throw std::invalid_argument("fano: dc is zero");
  return spectrum.s0_plateau() / (2.0 * std::abs(spectrum.dc));
}

ErgodicReport ergodic_crosscheck(const CurrentTrace& trace,
                                 std::span<const double> ensemble_samples) {
  if (trace.current.size() < 64) throw std::invalid_argument("ergodic_crosscheck: trace too short");
  if (ensemble_samples.size() < 2)
    throw std::invalid_argument("ergodic_crosscheck: need at least 2 ensemble samples");

  ErgodicReport report;
  report.dc_ensemble = mean(ensemble_samples);
  report.se_ensemble = standard_error(ensemble_samples);

  // Batch-means stationarity scan.  The batch-mean noise floor comes from
  // adjacent-batch differences (robust for correlated traces: a slow trend
  // inflates deviations from the segment mean much faster than it inflates
  // the differences); earliest start whose batch means all sit within 4 of
  // those sigmas is accepted.
  const std::size_t n = trace.current.size();
  constexpr std::size_t kBatches = 8;
  for (double frac : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const auto start = static_cast<std::size_t>(frac * static_cast<double>(n));
    const std::size_t len = n - start;
    if (len < kBatches * 4) break;
    const std::size_t batch = len / kBatches;
    std::vector<double> batch_means(kBatches);
    for (std::size_t b = 0; b < kBatches; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < batch; ++i) acc += trace.current[start + b * batch + i];
      batch_means[b] = acc / static_cast<double>(batch);
    }
    double diff2 = 0.0;
    for (std::size_t b = 1; b < kBatches; ++b) {
      const double d = batch_means[b] - batch_means[b - 1];
      diff2 += d * d;
    }
    const double sigma_bm =
        std::sqrt(diff2 / (2.0 * static_cast<double>(kBatches - 1))) + 1e-300;
    const double seg_mean = mean(batch_means);
    bool ok = true;
    for (double bm : batch_means)
      if (std::abs(bm - seg_mean) > 4.0 * sigma_bm) ok = false;
    if (ok) {
      report.stationary_found = true;
      report.stationary_start = trace.times[start];
      report.dc_time = seg_mean;
      report.se_time = standard_error(batch_means);
      break;
    }
  }

  if (report.stationary_found) {
    const double combined =
        std::sqrt(report.se_time * report.se_time + report.se_ensemble * report.se_ensemble);
    report.z_score = (combined > 0.0)
                         ? std::abs(report.dc_time - report.dc_ensemble) / combined
                         : std::numeric_limits<double>::infinity();
    report.agree_3sigma = report.z_score <= 3.0;
  }
  return report;
}

void write_spectrum_csv(const NoiseSpectrum& spectrum, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_spectrum_csv: cannot open " + path);
  out << "f,s\n";
  char line[64];
  for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", spectrum.frequencies[i], spectrum.s[i]);
    out << line;
  }
}

}  // namespace bohmsim
