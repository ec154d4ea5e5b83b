#pragma once

#include <vector>

#include "evfleet/assignment.hpp"
#include "evfleet/fleet.hpp"
#include "evfleet/spatial.hpp"

namespace evfleet {

// Small single-car instance with a fixed (deterministic) trip list.
struct OracleInstance {
  ZoneGrid grid;
  ModelConfig model;
  std::vector<TripRequest> trips;  // request_epoch set per trip
};

// Exact optimal value for every (epoch, zone, battery) of a single-car
// instance, by backward induction. Refuses instances beyond enumeration size.
class DpTable {
 public:
  DpTable(int horizon, int cells, int levels)
      : horizon_(horizon), cells_(cells), levels_(levels),
        v_(static_cast<size_t>(horizon + 1) * static_cast<size_t>(cells) *
               static_cast<size_t>(levels),
           0.0) {}

  double& at(int t, ZoneId zone, int battery) {
    return v_[(static_cast<size_t>(t) * static_cast<size_t>(cells_) + static_cast<size_t>(zone)) *
                  static_cast<size_t>(levels_) +
              static_cast<size_t>(battery)];
  }
  double at(int t, ZoneId zone, int battery) const {
    return v_[(static_cast<size_t>(t) * static_cast<size_t>(cells_) + static_cast<size_t>(zone)) *
                  static_cast<size_t>(levels_) +
              static_cast<size_t>(battery)];
  }
  int horizon() const { return horizon_; }
  int levels() const { return levels_; }

 private:
  int horizon_;
  int cells_;
  int levels_;
  std::vector<double> v_;
};

DpTable exact_dp(const OracleInstance& instance);

// Greedy rollout of a single car against a fixed value table of marginal
// values; used to score trained policies against the exact optimum.
double rollout_single_car(const OracleInstance& instance, const class ValueTable& table,
                          CarAttribute start);

// Brute force over all integral flows of a tiny program (counts and arcs per
// class small enough to enumerate). Returns the optimal objective.
Micro exhaustive_assign(const AssignmentProblem& problem);

}  // namespace evfleet
