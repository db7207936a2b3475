#include "bohmsim/manybody.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bohmsim {

void CoulombSpec::validate() const {
  if (!(softening > 0.0)) throw std::invalid_argument("CoulombSpec: softening must be positive");
  if (!std::isfinite(prefactor)) throw std::invalid_argument("CoulombSpec: prefactor not finite");
}

Potential1D conditional_potential(const Potential1D& device,
                                  std::span<const double> other_positions,
                                  std::span<const double> other_charges, double charge_i,
                                  const CoulombSpec& spec) {
  spec.validate();
  if (other_positions.size() != other_charges.size())
    throw std::invalid_argument("conditional_potential: positions/charges size mismatch");
  Potential1D out = device;
  const double s2 = spec.softening * spec.softening;
  for (std::size_t j = 0; j < other_positions.size(); ++j) {
    const double w = spec.prefactor * charge_i * other_charges[j];
    for (std::size_t k = 0; k < out.grid.n; ++k) {
      const double d = out.grid.x(k) - other_positions[j];
      out.real[k] += w / std::sqrt(d * d + s2);
    }
  }
  return out;
}

ManybodyEngine::ManybodyEngine(ManybodyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.device.validate();
  cfg_.coulomb.validate();
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("ManybodyEngine: dt must be positive");
  scratch_total_.assign(cfg_.device.grid.n, 0.0);
  scratch_pot_ = cfg_.device;
}

void ManybodyEngine::set_device(Potential1D device) {
  device.validate();
  if (!(device.grid == cfg_.device.grid))
    throw std::invalid_argument("ManybodyEngine: new device grid mismatch");
  cfg_.device = std::move(device);
  device_steppers_.clear();
  scratch_pot_ = cfg_.device;
}

void ManybodyEngine::add_particle(ParticleState state) {
  if (!(state.field.grid == cfg_.device.grid))
    throw std::invalid_argument("ManybodyEngine: particle field grid mismatch");
  if (!cfg_.device.grid.contains(state.position))
    throw std::invalid_argument("ManybodyEngine: particle position outside grid");
  state.entry_time = time_;
  active_.push_back(std::move(state));
}

CrankNicolson1D& ManybodyEngine::device_stepper_for(double mass) {
  for (auto& [m, stepper] : device_steppers_)
    if (m == mass) return stepper;
  device_steppers_.emplace_back(mass, CrankNicolson1D(cfg_.device, mass, cfg_.dt));
  return device_steppers_.back().second;
}

CrankNicolson1D& ManybodyEngine::coulomb_stepper_for(double mass) {
  for (auto& [m, stepper] : coulomb_steppers_)
    if (m == mass) return stepper;
  coulomb_steppers_.emplace_back(mass, CrankNicolson1D(cfg_.device, mass, cfg_.dt));
  return coulomb_steppers_.back().second;
}

void ManybodyEngine::step() {
  const Grid1D& grid = cfg_.device.grid;
  const std::size_t n = grid.n;
  const std::size_t count = active_.size();
  const bool coulomb_on = cfg_.coulomb_enabled && cfg_.coulomb.prefactor != 0.0 && count > 1;

  // (2) Freeze the snapshot every particle's potential is built from.
  snapshot_positions_.resize(count);
  snapshot_charges_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    snapshot_positions_[i] = active_[i].position;
    snapshot_charges_[i] = active_[i].charge;
  }

  if (coulomb_on) {
    // Total charge-weighted kernel once; each particle subtracts its own.
    const double s2 = cfg_.coulomb.softening * cfg_.coulomb.softening;
    std::fill(scratch_total_.begin(), scratch_total_.end(), 0.0);
    for (std::size_t j = 0; j < count; ++j) {
      const double w = cfg_.coulomb.prefactor * snapshot_charges_[j];
      for (std::size_t k = 0; k < n; ++k) {
        const double d = grid.x(k) - snapshot_positions_[j];
        scratch_total_[k] += w / std::sqrt(d * d + s2);
      }
    }
    scratch_pot_.imag = cfg_.device.imag;
    for (std::size_t i = 0; i < count; ++i) {
      ParticleState& p = active_[i];
      const double w_own = cfg_.coulomb.prefactor * p.charge;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = grid.x(k) - snapshot_positions_[i];
        scratch_pot_.real[k] =
            cfg_.device.real[k] + p.charge * (scratch_total_[k] - w_own / std::sqrt(d * d + s2));
      }
      // (3) one Crank–Nicolson step of this particle's conditional equation
      CrankNicolson1D& stepper = coulomb_stepper_for(p.mass);
      stepper.set_potential(scratch_pot_);
      stepper.step(p.field);
    }
  } else {
    for (auto& p : active_) device_stepper_for(p.mass).step(p.field);
  }

  // (4) velocities from the fresh wave functions at the frozen positions,
  // (5) synchronous position update.
  const double cap = 2.0 * grid.dx() / cfg_.dt;
  for (std::size_t i = 0; i < count; ++i) {
    ParticleState& p = active_[i];
    const double floor_rho = cfg_.epsilon * max_abs2(p.field);
    double v = bohm_velocity_local(p.field, snapshot_positions_[i], floor_rho, p.mass);
    v = std::clamp(v, -cap, cap);
    p.velocity = v;
    p.position = snapshot_positions_[i] + v * cfg_.dt;
  }
  time_ += cfg_.dt;

  // Absorb anything that left the grid interior.
  for (std::size_t i = active_.size(); i-- > 0;) {
    const double x = active_[i].position;
    if (x <= grid.x_min || x >= grid.x_max) {
      ExitEvent ev;
      ev.time = time_;
      ev.particle = active_[i].id;
      ev.direction = (x >= grid.x_max) ? +1 : -1;
      ev.charge = active_[i].charge;
      exits_.push_back(ev);
      active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
}

ManybodyRunResult run_manybody(std::vector<ParticleState> initial, const ManybodyConfig& cfg,
                               double t_end, std::size_t record_stride,
                               const ManybodyObserver& observer) {
  if (record_stride == 0) throw std::invalid_argument("run_manybody: record_stride must be >= 1");
  ManybodyEngine engine(cfg);
  const std::size_t m = initial.size();
  std::vector<Trajectory> trajs(m);
  for (std::size_t i = 0; i < m; ++i) {
    initial[i].id = i;  // ids double as trajectory indices here
    trajs[i].alpha = i;
    trajs[i].times.push_back(0.0);
    trajs[i].positions.push_back(initial[i].position);
    trajs[i].velocities.push_back(initial[i].velocity);
    engine.add_particle(std::move(initial[i]));
  }
  if (observer) observer(0.0, engine);

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / cfg.dt - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    engine.step();
    const bool record = ((k + 1) % record_stride == 0) || (k + 1 == steps);
    if (!record) continue;
    for (const auto& p : engine.particles()) {
      auto& tr = trajs[p.id];
      tr.times.push_back(engine.time());
      tr.positions.push_back(p.position);
      tr.velocities.push_back(p.velocity);
    }
    if (observer) observer(engine.time(), engine);
  }

  ManybodyRunResult result;
  result.exits = engine.exits();
  for (const auto& ev : result.exits) {
    auto& tr = trajs[ev.particle];
    tr.absorbed = true;
    tr.exit_time = ev.time;
    tr.exit_direction = ev.direction;
  }
  result.trajectories = std::move(trajs);
  result.final_states = engine.particles();
  return result;
}

void write_exits_csv(std::span<const ExitEvent> exits, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_exits_csv: cannot open " + path);
  out << "t,particle,direction,charge\n";
  char line[96];
  for (const auto& ev : exits) {
    std::snprintf(line, sizeof line, "%.17g,%llu,%d,%.17g\n", ev.time,
                  static_cast<unsigned long long>(ev.particle), ev.direction, ev.charge);
    out << line;
  }
}

}  // namespace bohmsim
