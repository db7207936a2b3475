#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bohmsim/noise.hpp"
#include "bohmsim/rng.hpp"
#include "bohmsim/stats.hpp"
#include "support/oracles.hpp"

using namespace bohmsim;

namespace {

std::vector<double> sinusoid(double amplitude, double offset, std::size_t periods,
                             std::size_t samples_per_period) {
  std::vector<double> xs(periods * samples_per_period);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = offset + amplitude * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                          static_cast<double>(samples_per_period));
  return xs;
}

std::vector<double> white_noise(double sigma, std::size_t n, std::uint64_t seed) {
  std::vector<double> xs(n);
  RandomStream rng(seed, 0);
  for (auto& x : xs) x = sigma * rng.normal();
  return xs;
}

CurrentTrace as_trace(std::vector<double> samples, double dt) {
  CurrentTrace tr;
  tr.current = std::move(samples);
  tr.times.resize(tr.current.size());
  for (std::size_t i = 0; i < tr.times.size(); ++i) tr.times[i] = dt * static_cast<double>(i);
  return tr;
}

}  // namespace

TEST_CASE("dc and total noise basics") {
  std::vector<double> constant(64, 3.25);
  CHECK(dc_time_average(constant) == 3.25);
  CHECK(total_noise(constant) == 0.0);

  auto wave = sinusoid(0.5, 2.0, 4, 256);
  CHECK(dc_time_average(wave) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(total_noise(wave) == doctest::Approx(0.5 * 0.5 / 2.0).epsilon(1e-8));

  CHECK_THROWS(dc_time_average(std::span<const double>{}));
}

TEST_CASE("poisson pulse train: Campbell mean") {
  const double rate = 0.01, width = 20.0, dt = 1.0;
  auto train = oracles::poisson_pulse_train(rate, width, dt, 1 << 17, 99);
  const double dc = dc_time_average(train);
  // Each pulse carries unit charge; expected mean = rate·q.
  const std::size_t pulses = static_cast<std::size_t>(std::round(
      dc * static_cast<double>(train.size()) * dt));
  const double sd = std::sqrt(rate * static_cast<double>(train.size()) * dt);
  CHECK(std::abs(static_cast<double>(pulses) - rate * static_cast<double>(train.size()) * dt) <
        3.0 * sd);
  CHECK(dc == doctest::Approx(rate).epsilon(3.0 * sd / (rate * static_cast<double>(train.size()))));
}

TEST_CASE("autocorrelation: definitional identity and closed forms") {
  auto wave = sinusoid(1.0, 0.5, 8, 128);
  const std::size_t n = wave.size();
  auto ac = autocorrelation(wave, 256);

  CHECK(ac.delta_r[0] == total_noise(wave));                 // exact
  CHECK(ac.r[0] == ac.delta_r[0] + ac.dc * ac.dc);            // estimator identity
  for (std::size_t lag : {std::size_t{64}, std::size_t{128}, std::size_t{192}}) {
    // Biased (1/N) estimator of a pure tone over whole periods.
    const double bias = static_cast<double>(n - lag) / static_cast<double>(n);
    const double want = 0.5 * bias * std::cos(2.0 * M_PI * static_cast<double>(lag) / 128.0);
    CHECK(ac.delta_r[lag] == doctest::Approx(want).epsilon(1e-6));
  }

  auto noise = white_noise(1.0, 1 << 16, 4);
  auto acn = autocorrelation(noise, 64);
  const double bound = 3.0 / std::sqrt(static_cast<double>(noise.size()));
  std::size_t outliers = 0;
  for (std::size_t lag = 1; lag <= 64; ++lag)
    if (std::abs(acn.delta_r[lag]) > bound) ++outliers;
  CHECK(outliers <= 2);  // ~0.3% expected beyond 3σ

  CHECK_THROWS(autocorrelation(noise, noise.size()));
}

TEST_CASE("psd: constant and pure tone") {
  std::vector<double> constant(4096, 1.5);
  auto s0 = psd(constant, 1.0, SpectralWindow::Hann, 512);
  for (double v : s0.s) CHECK(std::abs(v) < 1e-20);

  // Tone at bin 16 of a 512-point segment; the peak neighborhood carries
  // A²/2 of integrated power.
  auto tone = sinusoid(2.0, 0.0, 64, 32);  // period 32 samples
  auto sp = psd(tone, 1.0, SpectralWindow::Hann, 512);
  const double f0 = 1.0 / 32.0;
  std::size_t peak = 0;
  for (std::size_t k = 1; k < sp.s.size(); ++k)
    if (sp.s[k] > sp.s[peak]) peak = k;
  CHECK(sp.frequencies[peak] == doctest::Approx(f0).epsilon(0.01));
  double power = 0.0;
  for (std::size_t k = (peak >= 3 ? peak - 3 : 0); k <= peak + 3 && k < sp.s.size(); ++k)
    power += sp.s[k];
  power *= sp.df();
  CHECK(power == doctest::Approx(2.0 * 2.0 / 2.0).epsilon(0.05));
}

TEST_CASE("psd: Schottky plateau of a Poisson pulse train") {
  const double rate = 0.01, width = 20.0, dt = 1.0;
  auto train = oracles::poisson_pulse_train(rate, width, dt, 1 << 18, 12345);
  auto sp = psd(train, dt, SpectralWindow::Hann, 8192);
  const double dc = sp.dc;
  CHECK(sp.s0_plateau() == doctest::Approx(2.0 * dc).epsilon(0.10));
  CHECK(fano(sp) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("fano: binomial partition and deterministic train") {
  const double dt = 1.0;
  for (double t_prob : {0.5, 0.8}) {
    auto train = oracles::binomial_pulse_train(50.0, t_prob, 20.0, dt, 1 << 18, 777);
    auto sp = psd(train, dt, SpectralWindow::Hann, 8192);
    CHECK(fano(sp) == doctest::Approx(1.0 - t_prob).epsilon(0.12));
  }

  auto regular = oracles::periodic_pulse_train(50.0, 20.0, dt, 1 << 17);
  auto sp = psd(regular, dt, SpectralWindow::Hann, 8192);
  CHECK(fano(sp) < 0.05);

  NoiseSpectrum zero_dc;
  zero_dc.dc = 0.0;
  zero_dc.s.assign(16, 1.0);
  zero_dc.frequencies.assign(16, 0.0);
  CHECK_THROWS(fano(zero_dc));
}

TEST_CASE("parseval: integrated psd equals the total noise within 5%") {
  auto noise = white_noise(0.7, 1 << 16, 2024);
  auto sp = psd(noise, 1.0);
  CHECK(sp.integrated_power() == doctest::Approx(total_noise(noise)).epsilon(0.05));

  auto train = oracles::poisson_pulse_train(0.01, 20.0, 1.0, 1 << 17, 5);
  auto sp2 = psd(train, 1.0);
  CHECK(sp2.integrated_power() == doctest::Approx(total_noise(train)).epsilon(0.05));

  auto tone = sinusoid(1.0, 0.0, 256, 32);
  auto sp3 = psd(tone, 1.0, SpectralWindow::Hann, 1024);
  CHECK(sp3.integrated_power() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("wiener-khinchine: welch and transform-of-autocovariance paths agree") {
  auto noise = white_noise(1.0, 1 << 16, 31415);
  const std::size_t seg = 512;
  auto welch = psd(noise, 1.0, SpectralWindow::Hann, seg);
  auto ac = autocorrelation(noise, seg / 2);
  auto direct = psd_from_autocorrelation(ac.delta_r, ac.dc, 1.0, seg);

  CHECK(direct.max_imag_residue < 1e-10);

  // Per-bin agreement within 2 combined estimator deviations on ≥ 92% of
  // bins (the estimators are noisy; ~5% beyond 2σ is expected statistics).
  const double n_seg = std::floor((static_cast<double>(noise.size()) - seg) / (seg / 2)) + 1.0;
  const double var_welch = 1.0 / n_seg;           // relative, chi²-like
  const double var_direct = 2.0 * static_cast<double>(seg / 2) /
                            static_cast<double>(noise.size());
  const double sigma_rel = std::sqrt(var_welch + var_direct);
  const double s_level = 1.0;  // white noise with sigma=1, dt=1: S ≈ 1
  std::size_t ok = 0;
  for (std::size_t k = 1; k + 1 < welch.s.size(); ++k) {
    if (std::abs(welch.s[k] - direct.spectrum.s[k]) < 2.0 * sigma_rel * 2.0 * s_level) ++ok;
  }
  CHECK(static_cast<double>(ok) / static_cast<double>(welch.s.size() - 2) > 0.92);
}

TEST_CASE("ensemble estimators: exact small cases and the wss cross-check") {
  std::vector<double> constant(12, 2.5);
  CHECK(ensemble_dc(constant) == 2.5);
  CHECK(ensemble_total_noise(constant) == 0.0);

  // Two-valued ensemble {0, I0} with empirical frequency p.
  std::vector<double> two;
  const double i0 = 3.0;
  for (int i = 0; i < 30; ++i) two.push_back(i < 12 ? i0 : 0.0);  // p = 0.4
  CHECK(ensemble_dc(two) == doctest::Approx(0.4 * i0).epsilon(1e-12));
  CHECK(ensemble_total_noise(two) == doctest::Approx(0.4 * 0.6 * i0 * i0).epsilon(1e-12));

  // Ensemble at fixed t vs the time average of one member (white noise is
  // stationary and ergodic).
  std::vector<CurrentTrace> traces;
  std::vector<double> at_t1;
  for (std::uint64_t r = 0; r < 64; ++r) {
    auto tr = as_trace(white_noise(0.5, 4096, 600 + r), 1.0);
    for (auto& v : tr.current) v += 1.0;
    at_t1.push_back(tr.current[2048]);
    traces.push_back(std::move(tr));
  }
  const double dc_t = dc_time_average(traces[0]);
  const double se_t = 0.5 / std::sqrt(4096.0);
  const double dc_e = ensemble_dc(at_t1);
  const double se_e = standard_error(at_t1);
  CHECK(std::abs(dc_t - dc_e) < 3.0 * std::sqrt(se_t * se_t + se_e * se_e));
}

TEST_CASE("two-time correlation: identities and independence") {
  std::vector<CurrentTrace> constant_ens;
  for (int i = 0; i < 8; ++i) constant_ens.push_back(as_trace(std::vector<double>(256, 2.0), 1.0));
  CHECK(two_time_correlation(constant_ens, 10.0, 200.0) == doctest::Approx(4.0));

  std::vector<CurrentTrace> ens;
  std::vector<double> at_t1;
  for (std::uint64_t r = 0; r < 256; ++r) {
    auto tr = as_trace(white_noise(1.0, 1024, 900 + r), 1.0);
    for (auto& v : tr.current) v += 2.0;
    at_t1.push_back(tr.current[100]);
    ens.push_back(std::move(tr));
  }
  // t1 = t2: mean of I² = variance + mean² on the same samples, exactly.
  const double r_same = two_time_correlation(ens, 100.0, 100.0);
  CHECK(r_same ==
        doctest::Approx(ensemble_total_noise(at_t1) + std::pow(ensemble_dc(at_t1), 2))
            .epsilon(1e-12));
  // Independent samples at distinct times: R → ⟨I⟩².
  const double r_far = two_time_correlation(ens, 100.0, 700.0);
  const double se = 1.0 * 2.0 / std::sqrt(256.0);  // var(I(t1)I(t2)) ≈ σ²(μ²+σ²)+...
  CHECK(std::abs(r_far - 4.0) < 3.0 * se);

  CHECK_THROWS(two_time_correlation(std::span<const CurrentTrace>{}, 0.0, 1.0));
  CHECK_THROWS(two_time_correlation(ens, 0.0, 5000.0));
}

TEST_CASE("ergodic crosscheck: stationary trace agrees, trend is reported") {
  auto tr = as_trace(white_noise(0.5, 8192, 77), 1.0);
  for (auto& v : tr.current) v += 1.0;
  std::vector<double> ens;
  RandomStream rng(78, 0);
  for (int i = 0; i < 48; ++i) ens.push_back(1.0 + 0.5 * rng.normal() / std::sqrt(8192.0) * 90.0);

  auto report = ergodic_crosscheck(tr, ens);
  CHECK(report.stationary_found);
  CHECK(report.agree_3sigma);
  CHECK(report.dc_time == doctest::Approx(1.0).epsilon(0.05));

  // A strong drift that never settles is reported, not thrown.
  auto drift = as_trace(std::vector<double>(8192, 0.0), 1.0);
  for (std::size_t i = 0; i < drift.current.size(); ++i)
    drift.current[i] = static_cast<double>(i) * 1e-3;
  auto report2 = ergodic_crosscheck(drift, ens);
  CHECK(!report2.stationary_found);
}

TEST_CASE("estimator scaling: s(0) standard error scales as 1/sqrt(segments)") {
  auto se_of = [&](std::size_t seg, std::uint64_t seed_base) {
    std::vector<double> values;
    for (std::uint64_t r = 0; r < 24; ++r) {
      auto noise = white_noise(1.0, 1 << 14, seed_base + r);
      auto sp = psd(noise, 1.0, SpectralWindow::Hann, seg);
      values.push_back(sp.s0_plateau());
    }
    double m = mean(values);
    return std::sqrt(variance(values)) / m;
  };
  // 16x fewer segments when the segment is 16x longer.
  const double se_long = se_of(8192, 50);
  const double se_short = se_of(512, 150);
  CHECK(se_long / se_short == doctest::Approx(4.0).epsilon(0.5));
}
