#pragma once

#include <span>
#include <string>
#include <vector>

#include "bohmsim/bohm.hpp"
#include "bohmsim/grid.hpp"

namespace bohmsim {

// Conditional wave function snapshot: Ψ(x1, ·) sliced at the pointer's
// actual position.  Stored unnormalized; conditional wave functions are
// defined up to normalization and consumers normalize at read time.
struct ConditionalFrame {
  double time = 0.0;             // fs
  ComplexField1D field;          // slice along x1 at x2 = pointer_position
  double pointer_position = 0.0; // nm
  std::uint64_t alpha = 0;
};

enum class OutcomeKind { Transmitted, Reflected, Undecided };

const char* to_string(OutcomeKind kind);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Undecided;
  double decision_time = 0.0;  // fs
};

// Ψ(x1, x2 = const) by cubic interpolation along axis2.  Not normalized.
ComplexField1D slice_conditional(const ComplexField2D& field, double x2);

// Transmitted: X1 > barrier_x and X2 > pointer_threshold.
// Reflected:   X1 < barrier_x and |X2| < pointer_threshold.
// Anything else is Undecided (e.g. still under the barrier region).
Outcome classify(const Trajectory2D& traj, double barrier_x, double pointer_threshold, double t);

// max(P_left, P_right) of the normalized slice about barrier_x; 1.0 means
// the conditional wave function has fully collapsed to one side.
double collapse_purity(const ConditionalFrame& frame, double barrier_x);

// Fraction of runs classified identically at t1 and t2, among runs decided
// at both times.  Throws if no run is decided at both times.
double two_time_consistency(std::span<const Trajectory2D> runs, double barrier_x,
                            double pointer_threshold, double t1, double t2);

// Outcome table row used by the CSV writers and scenario summaries.
struct OutcomeRecord {
  std::uint64_t alpha = 0;
  OutcomeKind kind = OutcomeKind::Undecided;
  double decision_time = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
};

std::vector<OutcomeRecord> classify_ensemble(std::span<const Trajectory2D> runs, double barrier_x,
                                             double pointer_threshold, double t);

void write_outcomes_csv(std::span<const OutcomeRecord> outcomes, const std::string& path);

}  // namespace bohmsim
