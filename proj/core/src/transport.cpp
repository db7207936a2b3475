#include "bohmsim/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "bohmsim/fft.hpp"
#include "bohmsim/rng.hpp"

namespace bohmsim {

using constants::hbar;
using constants::k_boltzmann;

void DeviceSpec::validate() const {
  if (grid.n < 8) throw std::invalid_argument("DeviceSpec: invalid grid");
  if (!(x_left < x_right)) throw std::invalid_argument("DeviceSpec: need x_left < x_right");
  if (x_left < grid.x_min || x_right > grid.x_max)
    throw std::invalid_argument("DeviceSpec: active window outside grid");
  for (const auto& seg : segments) {
    if (!(seg.from < seg.to)) throw std::invalid_argument("DeviceSpec: empty segment");
    if (seg.from < grid.x_min || seg.to > grid.x_max)
      throw std::invalid_argument("DeviceSpec: segment outside grid");
  }
  for (std::size_t i = 0; i < segments.size(); ++i)
    for (std::size_t j = i + 1; j < segments.size(); ++j) {
      const auto& a = segments[i];
      const auto& b = segments[j];
      if (a.from < b.to && b.from < a.to)
        throw std::invalid_argument("DeviceSpec: overlapping segments");
    }
  for (std::size_t i = 1; i < bias_schedule.size(); ++i)
    if (!(bias_schedule[i].time > bias_schedule[i - 1].time))
      throw std::invalid_argument("DeviceSpec: bias schedule times must increase");
  if (absorb_fraction < 0.0 || absorb_fraction >= 0.5)
    throw std::invalid_argument("DeviceSpec: absorb_fraction must be in [0, 0.5)");
}

std::vector<PotentialSegment> rtd_segments(double barrier_height, double barrier_width,
                                           double well_width, double center) {
  const double half_well = 0.5 * well_width;
  return {
      {barrier_height, center - half_well - barrier_width, center - half_well},
      {barrier_height, center + half_well, center + half_well + barrier_width},
  };
}

Potential1D build_device(const DeviceSpec& spec, double t) {
  spec.validate();
  Potential1D pot(spec.grid);
  for (const auto& seg : spec.segments) {
    for (std::size_t i = 0; i < spec.grid.n; ++i) {
      const double x = spec.grid.x(i);
      if (x >= seg.from && x <= seg.to) pot.real[i] += seg.offset;
    }
  }

  double voltage = 0.0;
  for (const auto& b : spec.bias_schedule)
    if (b.time <= t) voltage = b.voltage;
  if (voltage != 0.0) {
    const double span = spec.active_length();
    for (std::size_t i = 0; i < spec.grid.n; ++i) {
      const double x = spec.grid.x(i);
      const double ramp = std::clamp((x - spec.x_left) / span, 0.0, 1.0);
      pot.real[i] -= voltage * ramp;
    }
  }

  if (spec.absorb_fraction > 0.0 && spec.absorb_strength > 0.0)
    add_absorbing_layers(pot, spec.absorb_fraction, spec.absorb_strength);
  return pot;
}

void InjectionSpec::validate() const {
  if (rate < 0.0) throw std::invalid_argument("InjectionSpec: rate must be >= 0");
  if (temperature < 0.0) throw std::invalid_argument("InjectionSpec: temperature must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("InjectionSpec: sigma must be positive");
}

namespace {

// Inverse-CDF table of the flux-weighted Fermi–Dirac wave-number law.
class ThermalKSampler {
 public:
  ThermalKSampler(double temperature, double fermi_level, double mass) {
    const double kt = k_boltzmann * temperature;
    const double e_top = fermi_level + std::max(10.0 * kt, 1e-6);
    k_max_ = std::sqrt(2.0 * mass * e_top) / hbar;
    const std::size_t n = 2048;
    cdf_.resize(n + 1, 0.0);
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const double k = k_max_ * static_cast<double>(i) / static_cast<double>(n);
      const double e = hbar * hbar * k * k / (2.0 * mass);
      double f;
      if (kt > 0.0) {
        f = 1.0 / (1.0 + std::exp((e - fermi_level) / kt));
      } else {
        f = (e <= fermi_level) ? 1.0 : 0.0;
      }
      const double w = k * f;
      acc += 0.5 * (prev + w);
      cdf_[i] = acc;
      prev = w;
    }
    if (!(cdf_.back() > 0.0))
      throw std::invalid_argument("draw_injection: empty thermal wave-number window");
  }

  double sample(double u) const {
    const double target = u * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
    if (hi == 0) hi = 1;
    if (hi >= cdf_.size()) hi = cdf_.size() - 1;
    const double lo_val = cdf_[hi - 1];
    const double w = (target - lo_val) / std::max(cdf_[hi] - lo_val, 1e-300);
    const double n = static_cast<double>(cdf_.size() - 1);
    return k_max_ * (static_cast<double>(hi - 1) + w) / n;
  }

 private:
  double k_max_ = 0.0;
  std::vector<double> cdf_;
};

}  // namespace

std::vector<InjectionEvent> draw_injection(const InjectionSpec& spec, double t_begin, double t_end,
                                           double mass) {
  spec.validate();
  if (!(t_end > t_begin)) throw std::invalid_argument("draw_injection: empty window");
  const double sign = (spec.side == ContactSide::Left) ? 1.0 : -1.0;
  std::vector<InjectionEvent> events;
  if (spec.rate == 0.0) return events;

  auto packet_with = [&](double k) {
    GaussianSpec g;
    g.center = spec.center;
    g.sigma = spec.sigma;
    g.k0 = sign * k;
    return g;
  };

  switch (spec.mode) {
    case InjectionMode::Regular: {
      const double period = 1.0 / spec.rate;
      for (double t = t_begin + 0.5 * period; t < t_end; t += period)
        events.push_back({t, packet_with(spec.k0)});
      break;
    }
    case InjectionMode::Poisson: {
      RandomStream rng(spec.seed, 0);
      double t = t_begin;
      while (true) {
        t += rng.exponential(spec.rate);
        if (t >= t_end) break;
        events.push_back({t, packet_with(spec.k0)});
      }
      break;
    }
    case InjectionMode::Thermal: {
      const ThermalKSampler sampler(spec.temperature, spec.fermi_level, mass);
      const double cell = 0.5 / spec.rate;
      std::uint64_t index = 0;
      for (double t = t_begin; t + cell <= t_end + 1e-12; t += cell, ++index) {
        RandomStream rng(spec.seed, index);
        if (rng.uniform() < 0.5) {
          const double k = sampler.sample(rng.uniform());
          events.push_back({t + 0.5 * cell, packet_with(k)});
        }
      }
      break;
    }
  }
  return events;
}

double CurrentTrace::dt_sample() const {
  if (times.size() < 2) throw std::invalid_argument("CurrentTrace: too short");
  return times[1] - times[0];
}

double compute_current(std::span<const ParticleState> particles, const DeviceSpec& device,
                       double x_surface) {
  if (x_surface < device.x_left || x_surface > device.x_right)
    throw std::invalid_argument("compute_current: surface outside active region");
  const double inv_length = 1.0 / device.active_length();
  double current = 0.0;
  for (const auto& p : particles) {
    if (p.position < device.x_left || p.position > device.x_right) continue;
    current += p.charge * p.velocity * inv_length;
  }
  return current;
}

void RealizationConfig::validate() const {
  device.validate();
  injection.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("RealizationConfig: duration must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("RealizationConfig: dt must be positive");
  const double ratio = dt_sample / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("RealizationConfig: dt_sample must be a multiple of dt");
  if (!device.grid.contains(injection.center))
    throw std::invalid_argument("RealizationConfig: injection center outside grid");
}

RealizationResult run_realization(const RealizationConfig& cfg) {
  cfg.validate();

  ManybodyConfig mb;
  mb.device = build_device(cfg.device, 0.0);
  mb.coulomb = cfg.coulomb;
  mb.coulomb_enabled = cfg.coulomb_enabled;
  mb.dt = cfg.dt;
  mb.epsilon = cfg.epsilon;
  ManybodyEngine engine(mb);

  auto events = draw_injection(cfg.injection, 0.0, cfg.duration, cfg.mass);

  // Pending bias switches.
  std::vector<BiasPoint> switches;
  for (const auto& b : cfg.device.bias_schedule)
    if (b.time > 0.0) switches.push_back(b);

  const auto sample_stride = static_cast<std::size_t>(std::llround(cfg.dt_sample / cfg.dt));
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.duration / cfg.dt - 1e-9));

  RealizationResult result;
  result.trace.alpha_seed = cfg.alpha_seed;
  result.trace.h_seed = cfg.h_seed;
  result.trace.times.reserve(steps / sample_stride + 2);
  result.trace.current.reserve(steps / sample_stride + 2);
  result.trace.times.push_back(0.0);
  result.trace.current.push_back(0.0);

  std::size_t next_event = 0;
  std::size_t next_switch = 0;
  std::uint64_t next_id = 0;

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = cfg.dt * static_cast<double>(k);

    if (next_switch < switches.size() && switches[next_switch].time <= t) {
      engine.set_device(build_device(cfg.device, t));
      ++next_switch;
    }

    while (next_event < events.size() && events[next_event].time <= t) {
      const auto& ev = events[next_event];
      ParticleState p;
      p.id = next_id++;
      p.field = make_gaussian(cfg.device.grid, ev.packet);
      // One quantum-equilibrium draw per injection, stream = injection index.
      RandomStream rng(cfg.alpha_seed, p.id);
      p.position = sample_position(p.field, rng);
      p.velocity = hbar * ev.packet.k0 / cfg.mass;
      p.charge = cfg.charge;
      p.mass = cfg.mass;
      engine.add_particle(std::move(p));
      result.injected += 1;
      ++next_event;
    }

    engine.step();

    if ((k + 1) % sample_stride == 0) {
      result.trace.times.push_back(engine.time());
      result.trace.current.push_back(
          compute_current(engine.particles(), cfg.device,
                          0.5 * (cfg.device.x_left + cfg.device.x_right)));
    }
  }

  result.exits = engine.exits();
  for (const auto& ev : result.exits)
    (ev.direction > 0 ? result.exited_right : result.exited_left) += 1;
  return result;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t half_window) {
  const std::size_t n = xs.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = (i >= half_window) ? i - half_window : 0;
    const std::size_t hi = std::min(n - 1, i + half_window);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += xs[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

TransientResult transient_response(const TransientConfig& cfg) {
  std::size_t switch_count = 0;
  double t_switch = 0.0;
  for (const auto& b : cfg.base.device.bias_schedule)
    if (b.time > 0.0) {
      ++switch_count;
      t_switch = b.time;
    }
  if (switch_count != 1)
    throw std::invalid_argument("transient_response: bias schedule must contain exactly one switch");
  if (cfg.realizations == 0)
    throw std::invalid_argument("transient_response: need at least one realization");

  TransientResult result;
  result.t_switch = t_switch;

  std::vector<double> mean;
  for (std::size_t r = 0; r < cfg.realizations; ++r) {
    RealizationConfig rc = cfg.base;
    rc.alpha_seed = cfg.base.alpha_seed + 1000003ULL * r;
    rc.h_seed = cfg.base.h_seed + 999983ULL * r;
    const auto res = run_realization(rc);
    if (mean.empty()) {
      mean.assign(res.trace.current.size(), 0.0);
      result.times = res.trace.times;
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += res.trace.current[i];
  }
  for (auto& v : mean) v /= static_cast<double>(cfg.realizations);
  result.mean_current = mean;

  const double dt_sample = result.times[1] - result.times[0];
  const auto half_window =
      static_cast<std::size_t>(std::max(1.0, cfg.smoothing_window / dt_sample / 2.0));
  result.smoothed = moving_average(mean, half_window);

  // Plateaus: pre-switch after one transit of warmup, post-switch tail.
  const auto idx_of = [&](double t) {
    return std::min(result.times.size() - 1,
                    static_cast<std::size_t>(std::max(0.0, t / dt_sample)));
  };
  const std::size_t i_sw = idx_of(t_switch);
  const std::size_t warm = idx_of(0.5 * t_switch);
  double pre = 0.0;
  for (std::size_t i = warm; i < i_sw; ++i) pre += mean[i];
  pre /= static_cast<double>(i_sw - warm);
  const std::size_t post_start = idx_of(t_switch + 0.7 * (result.times.back() - t_switch));
  double post = 0.0;
  for (std::size_t i = post_start; i < mean.size(); ++i) post += mean[i];
  post /= static_cast<double>(mean.size() - post_start);
  result.i_pre = pre;
  result.i_post = post;

  result.i_tran.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    result.i_tran[i] = mean[i] - (result.times[i] < t_switch ? pre : post);

  // Onset delay: the smoothed current holds the pre-switch plateau for a
  // while (carriers in flight were injected under the old bias), then moves.
  const double step_size = std::abs(post - pre);
  result.plateaus_converged = step_size > 0.0;
  double delay = 0.0;
  for (std::size_t i = i_sw; i < mean.size(); ++i) {
    if (std::abs(result.smoothed[i] - pre) > 0.3 * step_size) {
      delay = result.times[i] - t_switch;
      break;
    }
  }
  result.delay = delay;

  // Exponential settling constant from a log-linear fit of |i_tran|.
  {
    std::vector<double> ts, ys;
    const std::size_t i_from = idx_of(t_switch + delay);
    for (std::size_t i = i_from; i < mean.size(); ++i) {
      const double mag = std::abs(result.smoothed[i] - post);
      if (mag > 0.05 * step_size) {
        ts.push_back(result.times[i] - t_switch);
        ys.push_back(std::log(mag));
      }
    }
    if (ts.size() >= 8) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        sx += ts[i];
        sy += ys[i];
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ys[i];
      }
      const double n = static_cast<double>(ts.size());
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      result.tau_fit = (slope < 0.0) ? -1.0 / slope : 0.0;
    }
  }

  // Spectrum of the intrinsic transient (post-switch segment, zero-padded).
  {
    std::vector<Complex> buf;
    for (std::size_t i = i_sw; i < result.i_tran.size(); ++i)
      buf.emplace_back(result.i_tran[i], 0.0);
    std::size_t padded = 1;
    while (padded < 2 * buf.size()) padded <<= 1;
    buf.resize(padded, Complex{0.0, 0.0});
    fft(buf, false);
    const double df = 1.0 / (static_cast<double>(padded) * dt_sample);
    for (std::size_t m = 0; m <= padded / 2; ++m) {
      result.freq.push_back(df * static_cast<double>(m));
      result.transform_mag.push_back(std::abs(buf[m]) * dt_sample);
    }
  }
  return result;
}

void write_trace_csv(const CurrentTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "t,current\n";
  char line[64];
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", trace.times[i], trace.current[i]);
    out << line;
  }
}

}  // namespace bohmsim
