#include "bohmsim/bohm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bohmsim/rng.hpp"

namespace bohmsim {

using constants::hbar;

void EnsembleSpec::validate() const {
  if (size < 1) throw std::invalid_argument("EnsembleSpec: size must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("EnsembleSpec: epsilon must be positive");
}

double Trajectory::position_at(double t) const {
  if (times.empty()) throw std::invalid_argument("Trajectory: empty");
  if (t <= times.front()) return positions.front();
  if (t >= times.back()) {
    if (absorbed || t == times.back()) return positions.back();
    throw std::invalid_argument("Trajectory: time beyond recorded span");
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return positions[lo] + w * (positions[hi] - positions[lo]);
}

std::pair<double, double> Trajectory2D::position_at(double t) const {
  if (times.empty()) throw std::invalid_argument("Trajectory2D: empty");
  auto lerp = [&](const std::vector<double>& ys, std::size_t lo, std::size_t hi, double w) {
    return ys[lo] + w * (ys[hi] - ys[lo]);
  };
  if (t <= times.front()) return {x1.front(), x2.front()};
  if (t >= times.back()) {
    if (absorbed || t == times.back()) return {x1.back(), x2.back()};
    throw std::invalid_argument("Trajectory2D: time beyond recorded span");
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return {lerp(x1, lo, hi, w), lerp(x2, lo, hi, w)};
}

namespace {

Complex catmull_rom(const Complex& p0, const Complex& p1, const Complex& p2, const Complex& p3,
                    double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

// Interpolated ψ and ψ' at x from node values supplied by `node`.  Must stay
// arithmetically identical to interpolate_nodes/centered_derivative so the
// conditional-slice velocity identity is exact.
template <typename NodeFn>
void value_and_derivative(const Grid1D& grid, NodeFn&& node, double x, Complex& psi,
                          Complex& dpsi) {
  const double dx = grid.dx();
  const double s = (x - grid.x_min) / dx;
  auto cell = static_cast<std::size_t>(std::floor(s));
  if (cell >= grid.n - 1) cell = grid.n - 2;
  const double t = s - static_cast<double>(cell);
  const std::size_t n = grid.n;

  auto deriv_node = [&](std::size_t i) -> Complex {
    if (i >= 3 && i + 3 < n) {
      return (-node(i - 3) + 9.0 * node(i - 2) - 45.0 * node(i - 1) + 45.0 * node(i + 1) -
              9.0 * node(i + 2) + node(i + 3)) /
             (60.0 * dx);
    }
    if (i == 0) return (node(1) - node(0)) / dx;
    if (i == n - 1) return (node(n - 1) - node(n - 2)) / dx;
    return (node(i + 1) - node(i - 1)) / (2.0 * dx);
  };

  if (cell == 0 || cell >= n - 2) {
    psi = node(cell) * (1.0 - t) + node(cell + 1) * t;
    dpsi = deriv_node(cell) * (1.0 - t) + deriv_node(cell + 1) * t;
    return;
  }
  psi = catmull_rom(node(cell - 1), node(cell), node(cell + 1), node(cell + 2), t);
  dpsi = catmull_rom(deriv_node(cell - 1), deriv_node(cell), deriv_node(cell + 1),
                     deriv_node(cell + 2), t);
}

double guided_velocity(const Complex& psi, const Complex& dpsi, double hbar_over_m,
                       double floor_rho) {
  const double rho = std::norm(psi);
  const double current = hbar_over_m * std::imag(std::conj(psi) * dpsi);
  return current / (rho + floor_rho);
}

}  // namespace

VelocityField1D::VelocityField1D(const ComplexField1D& field, double epsilon, double mass)
    : field_(&field),
      deriv_(centered_derivative(field)),
      floor_(epsilon * max_abs2(field)),
      hbar_over_m_(hbar / mass) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("VelocityField1D: epsilon must be positive");
}

double VelocityField1D::operator()(double x) const {
  const Grid1D& g = field_->grid;
  if (!g.contains(x)) throw std::invalid_argument("bohm_velocity_1d: x outside grid");
  const Complex psi = interpolate(*field_, x);
  const Complex dpsi = interpolate_nodes(g, deriv_, x);
  return guided_velocity(psi, dpsi, hbar_over_m_, floor_);
}

VelocityField2D::VelocityField2D(const ComplexField2D& field, double epsilon, double mass1,
                                 double mass2, const DetectorCoupling* coupling)
    : field_(&field), hbar_over_m1_(hbar / mass1), hbar_over_m2_(hbar / mass2),
      coupling_(coupling) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("VelocityField2D: epsilon must be positive");
  double m = 0.0;
  for (const auto& a : field.amplitudes) m = std::max(m, std::norm(a));
  floor_ = epsilon * m;
}

std::pair<double, double> VelocityField2D::operator()(double x1, double x2) const {
  const Grid1D& g1 = field_->grid.axis1;
  const Grid1D& g2 = field_->grid.axis2;
  if (!g1.contains(x1) || !g2.contains(x2))
    throw std::invalid_argument("bohm_velocity_2d: position outside grid");

  // x1 component: interpolate each needed x1 column along x2 first; this is
  // exactly the conditional slice ψ(x1) = Ψ(x1, x2), then the 1D stencils.
  auto column_at = [&](std::size_t i1) -> Complex {
    const Complex* col = field_->amplitudes.data() + i1 * g2.n;
    const double dx2 = g2.dx();
    const double s = (x2 - g2.x_min) / dx2;
    auto cell = static_cast<std::size_t>(std::floor(s));
    if (cell >= g2.n - 1) cell = g2.n - 2;
    const double t = s - static_cast<double>(cell);
    if (cell == 0 || cell >= g2.n - 2) return col[cell] * (1.0 - t) + col[cell + 1] * t;
    return catmull_rom(col[cell - 1], col[cell], col[cell + 1], col[cell + 2], t);
  };
  Complex psi1, dpsi1;
  value_and_derivative(g1, column_at, x1, psi1, dpsi1);
  const double v1 = guided_velocity(psi1, dpsi1, hbar_over_m1_, floor_);

  // x2 component: symmetric, plus the coupling drift λQ(x1)·ρ/(ρ+floor).
  auto row_at = [&](std::size_t j2) -> Complex {
    auto node = [&](std::size_t i1) -> Complex {
      return field_->amplitudes[i1 * g2.n + j2];
    };
    const double dx1 = g1.dx();
    const double s = (x1 - g1.x_min) / dx1;
    auto cell = static_cast<std::size_t>(std::floor(s));
    if (cell >= g1.n - 1) cell = g1.n - 2;
    const double t = s - static_cast<double>(cell);
    if (cell == 0 || cell >= g1.n - 2) return node(cell) * (1.0 - t) + node(cell + 1) * t;
    return catmull_rom(node(cell - 1), node(cell), node(cell + 1), node(cell + 2), t);
  };
  Complex psi2, dpsi2;
  value_and_derivative(g2, row_at, x2, psi2, dpsi2);
  const double rho = std::norm(psi2);
  double v2 = hbar_over_m2_ * std::imag(std::conj(psi2) * dpsi2) / (rho + floor_);
  if (coupling_ != nullptr && coupling_->lambda != 0.0)
    v2 += coupling_->lambda * q_profile(*coupling_, x1) * rho / (rho + floor_);
  return {v1, v2};
}

double bohm_velocity_1d(const ComplexField1D& field, double x, double epsilon, double mass) {
  return VelocityField1D(field, epsilon, mass)(x);
}

double bohm_velocity_local(const ComplexField1D& field, double x, double floor_rho, double mass) {
  const Grid1D& g = field.grid;
  if (!g.contains(x)) throw std::invalid_argument("bohm_velocity_local: x outside grid");
  auto node = [&](std::size_t i) -> Complex { return field.amplitudes[i]; };
  Complex psi, dpsi;
  value_and_derivative(g, node, x, psi, dpsi);
  return guided_velocity(psi, dpsi, hbar / mass, floor_rho);
}

std::pair<double, double> bohm_velocity_2d(const ComplexField2D& field, double x1, double x2,
                                           double epsilon, const DetectorCoupling* coupling,
                                           double mass1, double mass2) {
  return VelocityField2D(field, epsilon, mass1, mass2, coupling)(x1, x2);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

// Invert ∫ρ over one cell where ρ is linear: ρ(s) = ρl + (ρr-ρl)·s/dx.
double invert_cell(double rho_l, double rho_r, double dx, double target) {
  const double slope = (rho_r - rho_l) / dx;
  if (target <= 0.0) return 0.0;
  if (std::abs(slope) * dx < 1e-15 * (rho_l + rho_r + 1e-300)) {
    return rho_l > 0.0 ? std::min(target / rho_l, dx) : 0.0;
  }
  const double disc = rho_l * rho_l + 2.0 * slope * target;
  const double root = std::sqrt(std::max(disc, 0.0));
  double s = (slope > 0.0) ? (root - rho_l) / slope : (root - rho_l) / slope;
  if (!(s >= 0.0)) s = 0.0;
  return std::min(s, dx);
}

}  // namespace

namespace {

std::vector<double> density_cdf(const ComplexField1D& field) {
  const Grid1D& g = field.grid;
  const double dx = g.dx();
  std::vector<double> cdf(g.n, 0.0);
  for (std::size_t i = 1; i < g.n; ++i)
    cdf[i] = cdf[i - 1] + 0.5 * dx * (std::norm(field[i - 1]) + std::norm(field[i]));
  return cdf;
}

double invert_density_cdf(const ComplexField1D& field, const std::vector<double>& cdf, double u) {
  const Grid1D& g = field.grid;
  const double dx = g.dx();
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  std::size_t cell = (it == cdf.begin()) ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
  if (cell >= g.n - 1) cell = g.n - 2;
  const double rem = target - cdf[cell];
  const double s = invert_cell(std::norm(field[cell]), std::norm(field[cell + 1]), dx, rem);
  return g.x(cell) + s;
}

}  // namespace

std::vector<double> sample_positions(const ComplexField1D& field, const EnsembleSpec& spec) {
  spec.validate();
  const auto cdf = density_cdf(field);
  if (!(cdf.back() > 0.0)) throw std::invalid_argument("sample_positions: zero field");

  std::vector<double> out(spec.size);
  for (std::size_t alpha = 0; alpha < spec.size; ++alpha) {
    RandomStream rng(spec.seed, alpha);
    out[alpha] = invert_density_cdf(field, cdf, rng.uniform());
  }
  return out;
}

double sample_position(const ComplexField1D& field, RandomStream& rng) {
  const auto cdf = density_cdf(field);
  if (!(cdf.back() > 0.0)) throw std::invalid_argument("sample_position: zero field");
  return invert_density_cdf(field, cdf, rng.uniform());
}

std::vector<std::pair<double, double>> sample_positions_2d(const ComplexField2D& field,
                                                           const EnsembleSpec& spec) {
  spec.validate();
  const Grid1D& g1 = field.grid.axis1;
  const Grid1D& g2 = field.grid.axis2;
  const std::size_t c1 = g1.n - 1, c2 = g2.n - 1;
  const double dx1 = g1.dx(), dx2 = g2.dx();

  // Cell masses of the piecewise-bilinear density (mean of 4 corners).
  std::vector<double> cell_cdf(c1 * c2 + 1, 0.0);
  for (std::size_t i = 0; i < c1; ++i) {
    for (std::size_t j = 0; j < c2; ++j) {
      const double m = 0.25 *
                       (std::norm(field.at(i, j)) + std::norm(field.at(i + 1, j)) +
                        std::norm(field.at(i, j + 1)) + std::norm(field.at(i + 1, j + 1))) *
                       dx1 * dx2;
      cell_cdf[i * c2 + j + 1] = cell_cdf[i * c2 + j] + m;
    }
  }
  const double total = cell_cdf.back();
  if (!(total > 0.0)) throw std::invalid_argument("sample_positions_2d: zero field");

  std::vector<std::pair<double, double>> out(spec.size);
  for (std::size_t alpha = 0; alpha < spec.size; ++alpha) {
    RandomStream rng(spec.seed, alpha);
    const double target = rng.uniform() * total;
    const auto it = std::upper_bound(cell_cdf.begin(), cell_cdf.end(), target);
    std::size_t flat = (it == cell_cdf.begin()) ? 0 : static_cast<std::size_t>(it - cell_cdf.begin()) - 1;
    if (flat >= c1 * c2) flat = c1 * c2 - 1;
    const std::size_t i = flat / c2;
    const std::size_t j = flat % c2;

    const double r00 = std::norm(field.at(i, j));
    const double r10 = std::norm(field.at(i + 1, j));
    const double r01 = std::norm(field.at(i, j + 1));
    const double r11 = std::norm(field.at(i + 1, j + 1));

    // Marginal over s is linear: endpoints are the column means.
    const double ml = 0.5 * (r00 + r01);
    const double mr = 0.5 * (r10 + r11);
    const double u1 = rng.uniform();
    const double s = invert_cell(ml, mr, dx1, u1 * 0.5 * (ml + mr) * dx1);
    const double ws = s / dx1;

    // Conditional over t at this s is linear between the interpolated edges.
    const double tb = r00 + (r10 - r00) * ws;
    const double tt = r01 + (r11 - r01) * ws;
    const double u2 = rng.uniform();
    const double t = invert_cell(tb, tt, dx2, u2 * 0.5 * (tb + tt) * dx2);

    out[alpha] = {g1.x(i) + s, g2.x(j) + t};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory integration

namespace {

double capped(double v, double cap) { return std::clamp(v, -cap, cap); }

}  // namespace

std::vector<Trajectory> integrate_trajectories(std::span<const double> initial_positions,
                                               const ComplexField1D& initial_field,
                                               const FieldEvolution1D& evolve, double dt,
                                               std::size_t steps, const IntegrationOptions& opts) {
  const Grid1D& g = initial_field.grid;
  const double cap = opts.v_cap_factor * g.dx() / std::abs(dt);
  const std::size_t m = initial_positions.size();

  std::vector<Trajectory> trajs(m);
  std::vector<double> head_x(initial_positions.begin(), initial_positions.end());
  std::vector<double> head_v(m, 0.0);
  std::vector<double> head_t(m, 0.0);

  ComplexField1D prev = initial_field;
  ComplexField1D curr = initial_field;
  {
    VelocityField1D v0(curr, opts.epsilon, opts.mass);
    for (std::size_t a = 0; a < m; ++a) {
      auto& tr = trajs[a];
      tr.seed = opts.seed;
      tr.alpha = a;
      head_v[a] = capped(v0(head_x[a]), cap);
      tr.times.push_back(0.0);
      tr.positions.push_back(head_x[a]);
      tr.velocities.push_back(head_v[a]);
    }
  }

  auto commit = [&](std::size_t a) {
    auto& tr = trajs[a];
    if (!tr.times.empty() && head_t[a] <= tr.times.back()) return;
    tr.times.push_back(head_t[a]);
    tr.positions.push_back(head_x[a]);
    tr.velocities.push_back(head_v[a]);
  };

  for (std::size_t k = 0; k < steps; ++k) {
    prev = curr;
    evolve(k, curr);
    VelocityField1D vp(prev, opts.epsilon, opts.mass);
    VelocityField1D vc(curr, opts.epsilon, opts.mass);
    const double t_next = dt * static_cast<double>(k + 1);
    const bool record = ((k + 1) % opts.record_stride == 0) || (k + 1 == steps);

    for (std::size_t a = 0; a < m; ++a) {
      auto& tr = trajs[a];
      if (tr.absorbed) continue;
      const double x = head_x[a];
      const double v0 = capped(vp(x), cap);
      const double xm = x + 0.5 * dt * v0;
      if (!g.contains(xm)) {
        commit(a);
        tr.absorbed = true;
        tr.exit_time = t_next;
        tr.exit_direction = (xm > g.x_max) ? +1 : -1;
        continue;
      }
      const double v_mid = capped(0.5 * (vp(xm) + vc(xm)), cap);
      const double x_new = x + dt * v_mid;
      if (!g.contains(x_new)) {
        commit(a);
        tr.absorbed = true;
        tr.exit_time = t_next;
        tr.exit_direction = (x_new > g.x_max) ? +1 : -1;
        continue;
      }
      head_x[a] = x_new;
      head_v[a] = v_mid;
      head_t[a] = t_next;
      if (record) commit(a);
    }
  }
  return trajs;
}

std::vector<Trajectory2D> integrate_trajectories_2d(
    std::span<const std::pair<double, double>> initial_positions,
    const ComplexField2D& initial_field, const FieldEvolution2D& evolve, double dt,
    std::size_t steps, const IntegrationOptions& opts, const FrameObserver2D& observer) {
  const Grid1D& g1 = initial_field.grid.axis1;
  const Grid1D& g2 = initial_field.grid.axis2;
  const double cap1 = opts.v_cap_factor * g1.dx() / std::abs(dt);
  const double cap2 = opts.v_cap_factor * g2.dx() / std::abs(dt);
  const std::size_t m = initial_positions.size();

  std::vector<Trajectory2D> trajs(m);
  std::vector<double> hx(m), hy(m), hu(m), hw(m), ht(m, 0.0);

  ComplexField2D prev = initial_field;
  ComplexField2D curr = initial_field;
  {
    VelocityField2D v0(curr, opts.epsilon, opts.mass, opts.mass2, opts.coupling);
    for (std::size_t a = 0; a < m; ++a) {
      auto& tr = trajs[a];
      tr.seed = opts.seed;
      tr.alpha = a;
      hx[a] = initial_positions[a].first;
      hy[a] = initial_positions[a].second;
      const auto [vx1, vx2] = v0(hx[a], hy[a]);
      hu[a] = capped(vx1, cap1);
      hw[a] = capped(vx2, cap2);
      tr.times.push_back(0.0);
      tr.x1.push_back(hx[a]);
      tr.x2.push_back(hy[a]);
      tr.v1.push_back(hu[a]);
      tr.v2.push_back(hw[a]);
    }
    if (observer) observer(0, 0.0, curr, trajs);
  }

  auto commit = [&](std::size_t a) {
    auto& tr = trajs[a];
    if (!tr.times.empty() && ht[a] <= tr.times.back()) return;
    tr.times.push_back(ht[a]);
    tr.x1.push_back(hx[a]);
    tr.x2.push_back(hy[a]);
    tr.v1.push_back(hu[a]);
    tr.v2.push_back(hw[a]);
  };

  for (std::size_t k = 0; k < steps; ++k) {
    prev = curr;
    evolve(k, curr);
    VelocityField2D vp(prev, opts.epsilon, opts.mass, opts.mass2, opts.coupling);
    VelocityField2D vc(curr, opts.epsilon, opts.mass, opts.mass2, opts.coupling);
    const double t_next = dt * static_cast<double>(k + 1);
    const bool record = ((k + 1) % opts.record_stride == 0) || (k + 1 == steps);

    for (std::size_t a = 0; a < m; ++a) {
      auto& tr = trajs[a];
      if (tr.absorbed) continue;
      const double x = hx[a];
      const double y = hy[a];
      const auto [u0, w0] = vp(x, y);
      const double xm = x + 0.5 * dt * capped(u0, cap1);
      const double ym = y + 0.5 * dt * capped(w0, cap2);
      if (!g1.contains(xm) || !g2.contains(ym)) {
        commit(a);
        tr.absorbed = true;
        tr.exit_time = t_next;
        continue;
      }
      const auto [up, wp] = vp(xm, ym);
      const auto [uc, wc] = vc(xm, ym);
      const double u_mid = capped(0.5 * (up + uc), cap1);
      const double w_mid = capped(0.5 * (wp + wc), cap2);
      const double x_new = x + dt * u_mid;
      const double y_new = y + dt * w_mid;
      if (!g1.contains(x_new) || !g2.contains(y_new)) {
        commit(a);
        tr.absorbed = true;
        tr.exit_time = t_next;
        continue;
      }
      hx[a] = x_new;
      hy[a] = y_new;
      hu[a] = u_mid;
      hw[a] = w_mid;
      ht[a] = t_next;
      if (record) commit(a);
    }
    if (record && observer) observer(k + 1, t_next, curr, trajs);
  }
  return trajs;
}

double bohmian_expectation(std::span<const Trajectory> ensemble,
                           const std::function<double(double)>& local_fn, double t) {
  if (ensemble.empty()) throw std::invalid_argument("bohmian_expectation: empty ensemble");
  double acc = 0.0;
  for (const auto& tr : ensemble) acc += local_fn(tr.position_at(t));
  return acc / static_cast<double>(ensemble.size());
}

}  // namespace bohmsim
