#include "bohmsim/measure.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bohmsim {

const char* to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Transmitted: return "transmitted";
    case OutcomeKind::Reflected: return "reflected";
    case OutcomeKind::Undecided: return "undecided";
  }
  return "undecided";
}

ComplexField1D slice_conditional(const ComplexField2D& field, double x2) {
  const Grid1D& g1 = field.grid.axis1;
  const Grid1D& g2 = field.grid.axis2;
  if (!g2.contains(x2)) throw std::invalid_argument("slice_conditional: x2 outside grid");

  // The interpolation stencil along x2 is the same for every x1 node, so
  // evaluate the cubic (Catmull–Rom) basis once and sweep the rows.
  const double dx2 = g2.dx();
  const double s = (x2 - g2.x_min) / dx2;
  auto cell = static_cast<std::size_t>(std::floor(s));
  if (cell >= g2.n - 1) cell = g2.n - 2;
  const double t = s - static_cast<double>(cell);

  std::size_t base;
  double w[4];
  if (cell == 0 || cell >= g2.n - 2) {
    base = cell;
    w[0] = 1.0 - t;
    w[1] = t;
    w[2] = w[3] = 0.0;
  } else {
    base = cell - 1;
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t + 2.0 * t2 - t3);
    w[1] = 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3);
    w[2] = 0.5 * (t + 4.0 * t2 - 3.0 * t3);
    w[3] = 0.5 * (-t2 + t3);
  }

  ComplexField1D slice(g1);
  for (std::size_t i = 0; i < g1.n; ++i) {
    const Complex* row = field.amplitudes.data() + i * g2.n + base;
    Complex acc = w[0] * row[0] + w[1] * row[1];
    if (w[2] != 0.0 || w[3] != 0.0) acc += w[2] * row[2] + w[3] * row[3];
    slice[i] = acc;
  }
  return slice;
}

Outcome classify(const Trajectory2D& traj, double barrier_x, double pointer_threshold, double t) {
  const auto [x1, x2] = traj.position_at(t);
  Outcome out;
  out.decision_time = t;
  if (x1 > barrier_x && x2 > pointer_threshold) {
    out.kind = OutcomeKind::Transmitted;
  } else if (x1 < barrier_x && std::abs(x2) < pointer_threshold) {
    out.kind = OutcomeKind::Reflected;
  } else {
    out.kind = OutcomeKind::Undecided;
  }
  return out;
}

double collapse_purity(const ConditionalFrame& frame, double barrier_x) {
  const ComplexField1D& f = frame.field;
  const double total = norm2(f);
  if (!(total > 0.0)) throw std::invalid_argument("collapse_purity: zero slice");
  const Grid1D& g = f.grid;
  if (barrier_x <= g.x_min || barrier_x >= g.x_max)
    throw std::invalid_argument("collapse_purity: barrier_x outside grid");
  const double left = probability_in_region(f, g.x_min, barrier_x);
  const double right = probability_in_region(f, barrier_x, g.x_max);
  return std::max(left, right) / total;
}

double two_time_consistency(std::span<const Trajectory2D> runs, double barrier_x,
                            double pointer_threshold, double t1, double t2) {
  if (!(t1 < t2)) throw std::invalid_argument("two_time_consistency: need t1 < t2");
  std::size_t decided = 0, agree = 0;
  for (const auto& run : runs) {
    const Outcome o1 = classify(run, barrier_x, pointer_threshold, t1);
    const Outcome o2 = classify(run, barrier_x, pointer_threshold, t2);
    if (o1.kind == OutcomeKind::Undecided || o2.kind == OutcomeKind::Undecided) continue;
    ++decided;
    if (o1.kind == o2.kind) ++agree;
  }
  if (decided == 0) throw std::runtime_error("two_time_consistency: no runs decided at both times");
  return static_cast<double>(agree) / static_cast<double>(decided);
}

std::vector<OutcomeRecord> classify_ensemble(std::span<const Trajectory2D> runs, double barrier_x,
                                             double pointer_threshold, double t) {
  std::vector<OutcomeRecord> out;
  out.reserve(runs.size());
  for (const auto& run : runs) {
    const auto [x1, x2] = run.position_at(t);
    OutcomeRecord rec;
    rec.alpha = run.alpha;
    rec.kind = classify(run, barrier_x, pointer_threshold, t).kind;
    rec.decision_time = t;
    rec.x1 = x1;
    rec.x2 = x2;
    out.push_back(rec);
  }
  return out;
}

void write_outcomes_csv(std::span<const OutcomeRecord> outcomes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_outcomes_csv: cannot open " + path);
  out << "alpha,kind,decision_time,x1,x2\n";
  char line[160];
  for (const auto& rec : outcomes) {
    std::snprintf(line, sizeof line, "%llu,%s,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(rec.alpha), to_string(rec.kind),
                  rec.decision_time, rec.x1, rec.x2);
    out << line;
  }
}

}  // namespace bohmsim
