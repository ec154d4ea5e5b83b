#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evfleet/fleet.hpp"
#include "evfleet/vfa.hpp"

namespace evfleet {

// Rewards are handled internally in integer micro-currency so that objective
// and dual checks against enumeration oracles are exact.
using Micro = int64_t;

Micro to_micro(double dollars);
double from_micro(Micro m);

struct CarClass {
  CarAttribute attr;
  int count = 0;
};

struct TripClass {
  ZoneId origin = 0;
  ZoneId destination = 0;
  double distance_miles = 0.0;
  double price_per_mile = 1.0;
  int count = 0;
};

enum class ObjectiveKind { Myopic, Vfa };

struct ProblemArc {
  DecisionArc decision;  // trip_index refers to a trip class here
  int car_class = -1;
  int trip_class = -1;  // -1 for non-serve arcs
  Micro reward_micro = 0;
};

// One epoch's car-to-decision program. Every class keeps a stay arc, so the
// program is feasible for any counts.
struct AssignmentProblem {
  int epoch = 0;
  ObjectiveKind objective = ObjectiveKind::Myopic;
  std::vector<CarClass> car_classes;
  std::vector<TripClass> trip_classes;
  std::vector<ProblemArc> arcs;
};

struct AssignmentSolution {
  std::vector<int> flow;  // per arc
  Micro objective_micro = 0;
  std::vector<Micro> car_duals;   // per car class, marginal value of a car
  std::vector<Micro> trip_duals;  // per trip class, marginal value of a trip
};

struct PolicyMode {
  ObjectiveKind kind = ObjectiveKind::Myopic;
  const ValueTable* table = nullptr;          // required for Vfa
  std::optional<double> recharge_threshold;   // myopic battery fraction rule
};

// Build the epoch program from assignable cars and open trips. Arc rewards are
// contribution-only (myopic) or contribution plus the table value of the
// post-decision attribute at its arrival epoch (vfa). Under the myopic
// threshold rule, classes below the battery fraction keep only recharge arcs
// (stay is retained if the battery is already full).
AssignmentProblem build_problem(const FleetState& state, int t, const ModelConfig& cfg,
                                const ZoneGrid& grid, const PolicyMode& mode,
                                bool parallel = true);

// Serial reference for the arc-building kernel; byte-identical output.
AssignmentProblem build_problem_serial(const FleetState& state, int t, const ModelConfig& cfg,
                                       const ZoneGrid& grid, const PolicyMode& mode);

// Successive-shortest-path min-cost flow over the bipartite program.
// Integral flows, exact integer objective, deterministic tie-breaking
// (serve > recharge > stay > reposition at equal reward, then arc order).
// Duals come from the terminating node potentials, an optimal dual solution:
// each lies between the one-sided finite differences of the optimal value.
AssignmentSolution solve(const AssignmentProblem& problem);

struct MarginalRow {
  int car_class = 0;
  Micro dual = 0;
  Micro left_diff = 0;   // F(R) - F(R - e_a)
  Micro right_diff = 0;  // F(R + e_a) - F(R)
  Micro discrepancy = 0; // distance of dual from [right, left], 0 if inside
};

// Re-solve with one car added/removed per class and compare against the
// reported duals. Test utility.
std::vector<MarginalRow> marginal_check(const AssignmentProblem& problem,
                                        const AssignmentSolution& solution);

std::string debug_dump(const AssignmentProblem& problem, const AssignmentSolution& solution);

}  // namespace evfleet
