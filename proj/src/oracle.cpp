#include "evfleet/oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "evfleet/vfa.hpp"

namespace evfleet {

namespace {

void check_size(const OracleInstance& inst) {
  int zones = inst.grid.valid_count();
  int levels = inst.model.battery_levels;
  int horizon = inst.model.horizon_epochs;
  if (zones > 25 || levels > 5 || horizon > 12)
    throw std::invalid_argument("exact_dp: instance too large for enumeration (zones=" +
                                std::to_string(zones) + ", levels=" + std::to_string(levels) +
                                ", horizon=" + std::to_string(horizon) +
                                "; limits are 25/5/12)");
}

std::vector<std::vector<TripRequest>> trips_by_epoch(const OracleInstance& inst) {
  std::vector<std::vector<TripRequest>> by_epoch(
      static_cast<size_t>(inst.model.horizon_epochs));
  for (const TripRequest& trip : inst.trips) {
    if (trip.request_epoch < 0 || trip.request_epoch >= inst.model.horizon_epochs)
      throw std::invalid_argument("exact_dp: trip epoch outside horizon");
    by_epoch[static_cast<size_t>(trip.request_epoch)].push_back(trip);
  }
  return by_epoch;
}

}  // namespace

DpTable exact_dp(const OracleInstance& inst) {
  check_size(inst);
  const int T = inst.model.horizon_epochs;
  const int L = inst.model.battery_levels;
  DpTable table(T, inst.grid.cell_count(), L);
  auto by_epoch = trips_by_epoch(inst);

  for (int t = T - 1; t >= 0; --t) {
    const auto& trips = by_epoch[static_cast<size_t>(t)];
    for (ZoneId z : inst.grid.valid_zones()) {
      for (int l = 0; l < L; ++l) {
        double best = 0.0;  // unreachable in practice: stay is always feasible
        bool first = true;
        for (const DecisionArc& arc :
             enumerate_decisions({z, l}, trips, t, inst.model, inst.grid)) {
          double future = (arc.result_available_at >= T)
                              ? 0.0
                              : table.at(arc.result_available_at, arc.result.zone,
                                         arc.result.battery);
          double value = arc.contribution + future;
          if (first || value > best) best = value;
          first = false;
        }
        table.at(t, z, l) = best;
      }
    }
  }
  return table;
}

double rollout_single_car(const OracleInstance& inst, const ValueTable& table,
                          CarAttribute start) {
  auto by_epoch = trips_by_epoch(inst);
  const int T = inst.model.horizon_epochs;
  CarAttribute attr = start;
  int available = 0;
  double reward = 0.0;
  for (int t = 0; t < T; ++t) {
    if (available > t) continue;
    const auto& trips = by_epoch[static_cast<size_t>(t)];
    const DecisionArc* best = nullptr;
    double best_value = 0.0;
    auto arcs = enumerate_decisions(attr, trips, t, inst.model, inst.grid);
    for (const DecisionArc& arc : arcs) {
      double value = arc.contribution + table.query(arc.result_available_at, arc.result);
      if (!best || value > best_value) {
        best = &arc;
        best_value = value;
      }
    }
    reward += best->contribution;
    attr = best->result;
    available = best->result_available_at;
  }
  return reward;
}

namespace {

struct Enumerator {
  const AssignmentProblem& problem;
  std::vector<std::vector<int>> arcs_of_class;
  std::vector<int> trip_left;
  Micro best = 0;

  explicit Enumerator(const AssignmentProblem& p) : problem(p) {
    arcs_of_class.resize(p.car_classes.size());
    for (int ai = 0; ai < static_cast<int>(p.arcs.size()); ++ai)
      arcs_of_class[static_cast<size_t>(p.arcs[static_cast<size_t>(ai)].car_class)].push_back(ai);
    trip_left.reserve(p.trip_classes.size());
    for (const TripClass& tc : p.trip_classes) trip_left.push_back(tc.count);
    size_t units = 0;
    for (const CarClass& cc : p.car_classes) units += static_cast<size_t>(cc.count);
    size_t max_arcs = 0;
    for (const auto& v : arcs_of_class) max_arcs = std::max(max_arcs, v.size());
    if (units > 8 || max_arcs > 8)
      throw std::invalid_argument("exhaustive_assign: instance too large");
  }

  // Units of one class are interchangeable; enumerate arc multisets by
  // keeping the arc position non-decreasing within a class.
  void recurse(int ci, int unit, int pos, Micro acc) {
    if (ci == static_cast<int>(problem.car_classes.size())) {
      best = std::max(best, acc);
      return;
    }
    if (unit == problem.car_classes[static_cast<size_t>(ci)].count) {
      recurse(ci + 1, 0, 0, acc);
      return;
    }
    const auto& arcs = arcs_of_class[static_cast<size_t>(ci)];
    for (int p = pos; p < static_cast<int>(arcs.size()); ++p) {
      const ProblemArc& arc = problem.arcs[static_cast<size_t>(arcs[static_cast<size_t>(p)])];
      if (arc.trip_class >= 0) {
        if (trip_left[static_cast<size_t>(arc.trip_class)] == 0) continue;
        trip_left[static_cast<size_t>(arc.trip_class)] -= 1;
        recurse(ci, unit + 1, p, acc + arc.reward_micro);
        trip_left[static_cast<size_t>(arc.trip_class)] += 1;
      } else {
        recurse(ci, unit + 1, p, acc + arc.reward_micro);
      }
    }
  }
};

}  // namespace

Micro exhaustive_assign(const AssignmentProblem& problem) {
  Enumerator e(problem);
  bool any = false;
  for (const CarClass& cc : problem.car_classes) any |= cc.count > 0;
  if (!any) return 0;
  e.best = std::numeric_limits<Micro>::min();
  e.recurse(0, 0, 0, 0);
  return e.best;
}

}  // namespace evfleet
