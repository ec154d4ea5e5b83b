#include "evfleet/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evfleet {

Micro to_micro(double dollars) {
  double scaled = dollars * 1e6;
  if (!(std::abs(scaled) < 9.0e15)) throw std::invalid_argument("reward out of micro range");
  return std::llround(scaled);
}

double from_micro(Micro m) { return static_cast<double>(m) * 1e-6; }

namespace {

// Equal-reward tie preference, encoded as a sub-unit cost perturbation.
// Serving first matches the coverage objective; idle cars hold rather than
// shuffle between zones.
constexpr Micro kPrioMult = 1 << 17;

int arc_priority(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::Serve: return 0;
    case DecisionKind::Recharge: return 1;
    case DecisionKind::Stay: return 2;
    case DecisionKind::Reposition: return 3;
  }
  return 3;
}

Micro scaled_cost(const ProblemArc& arc) {
  return -arc.reward_micro * kPrioMult + arc_priority(arc.decision.kind);
}

Micro unscale_round(Micro scaled) {
  // |priority remainder| < kPrioMult/2, so nearest-multiple rounding is exact.
  Micro shifted = scaled >= 0 ? scaled + kPrioMult / 2 : scaled - kPrioMult / 2;
  return shifted / kPrioMult;
}

struct FlowNetwork {
  struct Edge {
    int to;
    int rev;
    int cap;
    Micro cost;
  };
  std::vector<std::vector<Edge>> g;

  explicit FlowNetwork(int n) : g(static_cast<size_t>(n)) {}

  int add_edge(int u, int v, int cap, Micro cost) {
    g[static_cast<size_t>(u)].push_back({v, static_cast<int>(g[static_cast<size_t>(v)].size()), cap, cost});
    g[static_cast<size_t>(v)].push_back({u, static_cast<int>(g[static_cast<size_t>(u)].size()) - 1, 0, -cost});
    return static_cast<int>(g[static_cast<size_t>(u)].size()) - 1;
  }
};

constexpr Micro kInf = std::numeric_limits<Micro>::max() / 4;

// Dijkstra over residual arcs with reduced costs; deterministic tie order.
void dijkstra(const FlowNetwork& net, const std::vector<Micro>& pot, int src,
              std::vector<Micro>& dist, std::vector<std::pair<int, int>>* parent) {
  size_t n = net.g.size();
  dist.assign(n, kInf);
  if (parent) parent->assign(n, {-1, -1});
  using Item = std::pair<Micro, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[static_cast<size_t>(src)] = 0;
  heap.emplace(0, src);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d != dist[static_cast<size_t>(u)]) continue;
    for (int i = 0; i < static_cast<int>(net.g[static_cast<size_t>(u)].size()); ++i) {
      const auto& e = net.g[static_cast<size_t>(u)][static_cast<size_t>(i)];
      if (e.cap <= 0) continue;
      Micro nd = d + e.cost + pot[static_cast<size_t>(u)] - pot[static_cast<size_t>(e.to)];
      if (nd < dist[static_cast<size_t>(e.to)]) {
        dist[static_cast<size_t>(e.to)] = nd;
        if (parent) (*parent)[static_cast<size_t>(e.to)] = {u, i};
        heap.emplace(nd, e.to);
      }
    }
  }
}

}  // namespace

AssignmentProblem build_problem_serial(const FleetState& state, int t, const ModelConfig& cfg,
                                       const ZoneGrid& grid, const PolicyMode& mode) {
  return build_problem(state, t, cfg, grid, mode, false);
}

AssignmentProblem build_problem(const FleetState& state, int t, const ModelConfig& cfg,
                                const ZoneGrid& grid, const PolicyMode& mode, bool parallel) {
  if (mode.kind == ObjectiveKind::Vfa && mode.table == nullptr)
    throw std::invalid_argument("build_problem: vfa objective requires a value table");

  AssignmentProblem p;
  p.epoch = t;
  p.objective = mode.kind;

  std::map<std::pair<ZoneId, int>, int> class_of;
  for (const CarState& car : state.cars) {
    if (car.available_at > t) continue;
    auto key = std::make_pair(car.attr.zone, car.attr.battery);
    auto [it, inserted] = class_of.try_emplace(key, static_cast<int>(p.car_classes.size()));
    if (inserted) p.car_classes.push_back({car.attr, 0});
    p.car_classes[static_cast<size_t>(it->second)].count += 1;
  }

  std::map<std::pair<ZoneId, ZoneId>, int> trip_class_of;
  for (const TripRequest& trip : state.trips) {
    auto key = std::make_pair(trip.origin, trip.destination);
    auto [it, inserted] = trip_class_of.try_emplace(key, static_cast<int>(p.trip_classes.size()));
    if (inserted)
      p.trip_classes.push_back(
          {trip.origin, trip.destination, trip.distance_miles, trip.price_per_mile, 0});
    p.trip_classes[static_cast<size_t>(it->second)].count += 1;
  }

  // Representative request per trip class, for the arc construction helpers.
  std::vector<TripRequest> reps;
  reps.reserve(p.trip_classes.size());
  for (const TripClass& tc : p.trip_classes)
    reps.push_back({tc.origin, tc.destination, t, tc.distance_miles, tc.price_per_mile});

  const int n_classes = static_cast<int>(p.car_classes.size());
  std::vector<std::vector<ProblemArc>> per_class(static_cast<size_t>(n_classes));

  auto build_class = [&](int ci) {
    const CarAttribute car = p.car_classes[static_cast<size_t>(ci)].attr;
    std::vector<ProblemArc>& out = per_class[static_cast<size_t>(ci)];
    bool forced_recharge = false;
    if (mode.kind == ObjectiveKind::Myopic && mode.recharge_threshold) {
      forced_recharge =
          static_cast<double>(car.battery) < *mode.recharge_threshold * cfg.battery_levels;
    }
    std::vector<DecisionArc> arcs = enumerate_decisions(car, reps, t, cfg, grid);
    if (forced_recharge) {
      std::vector<DecisionArc> kept;
      for (const DecisionArc& a : arcs)
        if (a.kind == DecisionKind::Recharge) kept.push_back(a);
      if (kept.empty()) kept.push_back(make_stay_arc(car, t));  // full battery edge case
      arcs = std::move(kept);
    }
    for (const DecisionArc& a : arcs) {
      ProblemArc pa;
      pa.decision = a;
      pa.car_class = ci;
      pa.trip_class = (a.kind == DecisionKind::Serve) ? a.trip_index : -1;
      double reward = a.contribution;
      if (mode.kind == ObjectiveKind::Vfa)
        reward += mode.table->query(a.result_available_at, a.result);
      pa.reward_micro = to_micro(reward);
      out.push_back(pa);
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int ci = 0; ci < n_classes; ++ci) build_class(ci);
  } else {
    for (int ci = 0; ci < n_classes; ++ci) build_class(ci);
  }

  for (auto& chunk : per_class)
    p.arcs.insert(p.arcs.end(), chunk.begin(), chunk.end());
  return p;
}

AssignmentSolution solve(const AssignmentProblem& problem) {
  const int n_car = static_cast<int>(problem.car_classes.size());
  const int n_trip = static_cast<int>(problem.trip_classes.size());
  const int source = 0;
  const int first_car = 1;
  const int first_trip = first_car + n_car;
  const int sink = first_trip + n_trip;
  const int n_nodes = sink + 1;

  FlowNetwork net(n_nodes);
  std::vector<int> supply_edge(static_cast<size_t>(n_car), -1);
  std::vector<int> arc_edge(problem.arcs.size(), -1);
  std::vector<int> trip_edge(static_cast<size_t>(n_trip), -1);

  int total_supply = 0;
  for (int ci = 0; ci < n_car; ++ci) {
    int count = problem.car_classes[static_cast<size_t>(ci)].count;
    if (count < 0) throw std::invalid_argument("solve: negative car count");
    supply_edge[static_cast<size_t>(ci)] = net.add_edge(source, first_car + ci, count, 0);
    total_supply += count;
  }
  for (int bi = 0; bi < n_trip; ++bi)
    trip_edge[static_cast<size_t>(bi)] =
        net.add_edge(first_trip + bi, sink, problem.trip_classes[static_cast<size_t>(bi)].count, 0);

  std::vector<bool> has_arc(static_cast<size_t>(n_car), false);
  for (size_t ai = 0; ai < problem.arcs.size(); ++ai) {
    const ProblemArc& arc = problem.arcs[ai];
    int from = first_car + arc.car_class;
    int to = (arc.trip_class >= 0) ? first_trip + arc.trip_class : sink;
    int cap = problem.car_classes[static_cast<size_t>(arc.car_class)].count;
    arc_edge[ai] = net.add_edge(from, to, cap, scaled_cost(arc));
    has_arc[static_cast<size_t>(arc.car_class)] = true;
  }
  for (int ci = 0; ci < n_car; ++ci)
    if (!has_arc[static_cast<size_t>(ci)] && problem.car_classes[static_cast<size_t>(ci)].count > 0)
      throw std::invalid_argument("solve: car class without any arc");

  // Initial potentials by relaxation in layer order (the graph is a DAG).
  std::vector<Micro> pot(static_cast<size_t>(n_nodes), 0);
  {
    std::vector<Micro> d(static_cast<size_t>(n_nodes), kInf);
    d[source] = 0;
    auto relax_from = [&](int u) {
      if (d[static_cast<size_t>(u)] >= kInf) return;
      for (const auto& e : net.g[static_cast<size_t>(u)]) {
        if (e.cap <= 0) continue;
        Micro nd = d[static_cast<size_t>(u)] + e.cost;
        if (nd < d[static_cast<size_t>(e.to)]) d[static_cast<size_t>(e.to)] = nd;
      }
    };
    relax_from(source);
    for (int ci = 0; ci < n_car; ++ci) relax_from(first_car + ci);
    for (int bi = 0; bi < n_trip; ++bi) relax_from(first_trip + bi);
    for (int v = 0; v < n_nodes; ++v)
      pot[static_cast<size_t>(v)] = (d[static_cast<size_t>(v)] >= kInf) ? 0 : d[static_cast<size_t>(v)];
  }

  std::vector<Micro> dist;
  std::vector<std::pair<int, int>> parent;
  int pushed = 0;
  while (pushed < total_supply) {
    dijkstra(net, pot, source, dist, &parent);
    if (dist[static_cast<size_t>(sink)] >= kInf)
      throw std::runtime_error("solve: no augmenting path (infeasible program)");
    Micro dt = dist[static_cast<size_t>(sink)];
    for (int v = 0; v < n_nodes; ++v)
      pot[static_cast<size_t>(v)] += std::min(dist[static_cast<size_t>(v)], dt);
    int bottleneck = total_supply - pushed;
    for (int v = sink; v != source;) {
      auto [u, ei] = parent[static_cast<size_t>(v)];
      bottleneck = std::min(bottleneck, net.g[static_cast<size_t>(u)][static_cast<size_t>(ei)].cap);
      v = u;
    }
    for (int v = sink; v != source;) {
      auto [u, ei] = parent[static_cast<size_t>(v)];
      auto& e = net.g[static_cast<size_t>(u)][static_cast<size_t>(ei)];
      e.cap -= bottleneck;
      net.g[static_cast<size_t>(e.to)][static_cast<size_t>(e.rev)].cap += bottleneck;
      v = u;
    }
    pushed += bottleneck;
  }

  AssignmentSolution sol;
  sol.flow.resize(problem.arcs.size(), 0);
  for (size_t ai = 0; ai < problem.arcs.size(); ++ai) {
    const ProblemArc& arc = problem.arcs[ai];
    int from = first_car + arc.car_class;
    const auto& e = net.g[static_cast<size_t>(from)][static_cast<size_t>(arc_edge[ai])];
    int flow = net.g[static_cast<size_t>(e.to)][static_cast<size_t>(e.rev)].cap;
    sol.flow[ai] = flow;
    sol.objective_micro += arc.reward_micro * flow;
  }

  // The terminating potentials are an optimal dual solution (feasible reduced
  // costs plus complementary slackness). The car-conservation dual is the
  // class-to-sink potential gap; trip rents absorb the rest, so a car only
  // carries the value competition leaves to it.
  sol.car_duals.assign(static_cast<size_t>(n_car), 0);
  for (int ci = 0; ci < n_car; ++ci) {
    if (problem.car_classes[static_cast<size_t>(ci)].count == 0) continue;
    sol.car_duals[static_cast<size_t>(ci)] =
        unscale_round(pot[static_cast<size_t>(first_car + ci)] - pot[static_cast<size_t>(sink)]);
  }

  sol.trip_duals.assign(static_cast<size_t>(n_trip), 0);
  for (int bi = 0; bi < n_trip; ++bi) {
    Micro red = pot[static_cast<size_t>(sink)] - pot[static_cast<size_t>(first_trip + bi)];
    sol.trip_duals[static_cast<size_t>(bi)] = std::max<Micro>(0, unscale_round(red));
  }
  return sol;
}

std::vector<MarginalRow> marginal_check(const AssignmentProblem& problem,
                                        const AssignmentSolution& solution) {
  std::vector<MarginalRow> rows;
  Micro base = solution.objective_micro;
  for (int ci = 0; ci < static_cast<int>(problem.car_classes.size()); ++ci) {
    MarginalRow row;
    row.car_class = ci;
    row.dual = solution.car_duals[static_cast<size_t>(ci)];
    AssignmentProblem plus = problem;
    plus.car_classes[static_cast<size_t>(ci)].count += 1;
    row.right_diff = solve(plus).objective_micro - base;
    if (problem.car_classes[static_cast<size_t>(ci)].count > 0) {
      AssignmentProblem minus = problem;
      minus.car_classes[static_cast<size_t>(ci)].count -= 1;
      row.left_diff = base - solve(minus).objective_micro;
    } else {
      row.left_diff = row.right_diff;
    }
    Micro lo = std::min(row.left_diff, row.right_diff);
    Micro hi = std::max(row.left_diff, row.right_diff);
    if (row.dual < lo)
      row.discrepancy = lo - row.dual;
    else if (row.dual > hi)
      row.discrepancy = row.dual - hi;
    rows.push_back(row);
  }
  return rows;
}

namespace {
const char* kind_name(DecisionKind k) {
  switch (k) {
    case DecisionKind::Serve: return "serve";
    case DecisionKind::Reposition: return "reposition";
    case DecisionKind::Recharge: return "recharge";
    case DecisionKind::Stay: return "stay";
  }
  return "?";
}
}  // namespace

std::string debug_dump(const AssignmentProblem& problem, const AssignmentSolution& solution) {
  std::ostringstream out;
  out << "epoch=" << problem.epoch
      << " objective=" << (problem.objective == ObjectiveKind::Vfa ? "vfa" : "myopic")
      << " value=" << from_micro(solution.objective_micro) << "\n";
  for (size_t ci = 0; ci < problem.car_classes.size(); ++ci) {
    const CarClass& cc = problem.car_classes[ci];
    out << "class " << ci << " zone=" << cc.attr.zone << " battery=" << cc.attr.battery
        << " count=" << cc.count << " dual=" << from_micro(solution.car_duals[ci]) << "\n";
  }
  for (size_t bi = 0; bi < problem.trip_classes.size(); ++bi) {
    const TripClass& tc = problem.trip_classes[bi];
    out << "trip " << bi << " od=" << tc.origin << ">" << tc.destination << " count=" << tc.count
        << " dual=" << from_micro(solution.trip_duals[bi]) << "\n";
  }
  for (size_t ai = 0; ai < problem.arcs.size(); ++ai) {
    const ProblemArc& arc = problem.arcs[ai];
    out << "arc " << ai << " class=" << arc.car_class << " " << kind_name(arc.decision.kind);
    if (arc.trip_class >= 0) out << " trip=" << arc.trip_class;
    if (arc.decision.kind == DecisionKind::Reposition) out << " to=" << arc.decision.target_zone;
    if (arc.decision.kind == DecisionKind::Recharge)
      out << " epochs=" << arc.decision.recharge_epochs;
    out << " reward=" << from_micro(arc.reward_micro) << " flow=" << solution.flow[ai] << "\n";
  }
  return out.str();
}

}  // namespace evfleet
