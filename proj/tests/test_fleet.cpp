#include <doctest.h>

#include <set>

#include "evfleet/fleet.hpp"

using namespace evfleet;

namespace {

ModelConfig desk_model() {
  ModelConfig cfg;  // paper-style defaults: 15 min epochs, L=20 over 200 mi
  return cfg;
}

int count_kind(const std::vector<DecisionArc>& arcs, DecisionKind kind) {
  int n = 0;
  for (const auto& a : arcs) n += a.kind == kind ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("battery level arithmetic") {
  ModelConfig cfg = desk_model();  // 10 miles per level
  CHECK(levels_for_miles(0.0, cfg) == 0);
  CHECK(levels_for_miles(24.8, cfg) == 3);  // ceil
  CHECK(levels_for_miles(10.0, cfg) == 1);  // exact boundary stays at 1
  CHECK(levels_gained(1, cfg) == 7);        // 75 miles in 15 min, floor
}

TEST_CASE("enumerate: zero charge forbids movement") {
  ModelConfig cfg = desk_model();
  ZoneGrid grid = ZoneGrid::full(8, 8, 0.5);
  TripRequest trip{grid.id(1, 1), grid.id(5, 5), 0, grid.distance(grid.id(1, 1), grid.id(5, 5)), 1.0};
  std::vector<TripRequest> trips{trip};
  auto arcs = enumerate_decisions({grid.id(1, 1), 0}, trips, 0, cfg, grid);
  CHECK(count_kind(arcs, DecisionKind::Serve) == 0);
  CHECK(count_kind(arcs, DecisionKind::Reposition) == 0);
  CHECK(count_kind(arcs, DecisionKind::Stay) == 1);
  CHECK(count_kind(arcs, DecisionKind::Recharge) > 0);
}

TEST_CASE("enumerate: full battery interior zone") {
  ModelConfig cfg = desk_model();
  ZoneGrid grid = ZoneGrid::full(8, 8, 0.5);
  auto arcs = enumerate_decisions({grid.id(4, 4), cfg.battery_levels - 1}, {}, 0, cfg, grid);
  CHECK(arcs.size() == 9);  // stay + 8 repositions, no recharge at full
  CHECK(count_kind(arcs, DecisionKind::Reposition) == 8);
  CHECK(count_kind(arcs, DecisionKind::Recharge) == 0);
  CHECK(count_kind(arcs, DecisionKind::Stay) == 1);
}

TEST_CASE("enumerate: pickup range filter") {
  ModelConfig cfg = desk_model();
  cfg.pickup_range_miles = 5.0;
  ZoneGrid grid = ZoneGrid::full(40, 2, 0.5);
  // car 10 miles from the trip origin (20 cells at 0.5 mi)
  TripRequest trip{grid.id(20, 0), grid.id(25, 0), 0, 2.5, 1.0};
  std::vector<TripRequest> trips{trip};
  auto arcs = enumerate_decisions({grid.id(0, 0), 19}, trips, 0, cfg, grid);
  CHECK(count_kind(arcs, DecisionKind::Serve) == 0);

  auto near = enumerate_decisions({grid.id(15, 0), 19}, trips, 0, cfg, grid);
  CHECK(count_kind(near, DecisionKind::Serve) == 1);
}

TEST_CASE("transitions: stay, recharge, serve") {
  ModelConfig cfg = desk_model();
  ZoneGrid grid = ZoneGrid::full(60, 2, 0.5);

  DecisionArc stay = make_stay_arc({5, 7}, 12);
  CHECK(stay.result == CarAttribute{5, 7});
  CHECK(stay.result_available_at == 13);

  DecisionArc recharge = make_recharge_arc({5, 3}, 1, 9, cfg);
  CHECK(recharge.result.battery == 10);  // +7 levels
  CHECK(recharge.result_available_at == 10);
  DecisionArc top_up = make_recharge_arc({5, 18}, 3, 9, cfg);
  CHECK(top_up.result.battery == cfg.battery_levels - 1);  // capped

  // 24.8 mi trip, zero deadhead: -3 levels, arrives after ceil(49.6/15) epochs
  ZoneId origin = grid.id(0, 0);
  ZoneId dest = grid.id(49, 1);  // ~24.51 mi; use explicit distance below
  TripRequest trip{origin, dest, 4, 24.8, 1.0};
  DecisionArc serve = make_serve_arc({origin, 10}, 0, trip, 4, cfg, grid);
  CHECK(serve.result.battery == 7);
  CHECK(serve.result.zone == dest);
  CHECK(serve.result_available_at == 8);
  CHECK(serve.contribution == doctest::Approx(2.4 + 24.8));
}

TEST_CASE("contribution values") {
  ModelConfig cfg = desk_model();
  ZoneGrid grid = ZoneGrid::full(60, 2, 0.5);
  TripRequest trip{grid.id(0, 0), grid.id(49, 1), 0, 24.8, 1.0};
  std::vector<TripRequest> trips{trip};

  DecisionArc serve = make_serve_arc({grid.id(0, 0), 19}, 0, trip, 0, cfg, grid);
  CHECK(contribution(serve, cfg, trips) == doctest::Approx(27.2));

  DecisionArc recharge = make_recharge_arc({0, 0}, 1, 0, cfg);
  CHECK(contribution(recharge, cfg, trips) == doctest::Approx(-8.5));  // -(1 + 0.1*75)

  DecisionArc repo = make_reposition_arc({grid.id(1, 0), 19}, grid.id(2, 0), 0, cfg, grid);
  CHECK(contribution(repo, cfg, trips) == 0.0);
}

TEST_CASE("transition agrees with arc fields") {
  ModelConfig cfg = desk_model();
  ZoneGrid grid = ZoneGrid::full(10, 10, 0.5);
  TripRequest trip{grid.id(2, 2), grid.id(8, 8), 3, grid.distance(grid.id(2, 2), grid.id(8, 8)), 1.0};
  std::vector<TripRequest> trips{trip};
  for (const DecisionArc& arc : enumerate_decisions({grid.id(3, 3), 12}, trips, 3, cfg, grid)) {
    auto [attr, at] = transition({grid.id(3, 3), 12}, arc, 3, cfg, grid, trips);
    CHECK(attr == arc.result);
    CHECK(at == arc.result_available_at);
    CHECK(contribution(arc, cfg, trips) == doctest::Approx(arc.contribution));
  }
}

TEST_CASE("battery stays in range across all enumerated transitions") {
  ModelConfig cfg = desk_model();
  cfg.battery_levels = 5;
  cfg.battery_range_miles = 20.0;
  ZoneGrid grid = ZoneGrid::full(6, 6, 0.5);
  std::vector<TripRequest> trips;
  for (int i = 0; i < 6; ++i) {
    ZoneId o = grid.id(i, 0), d = grid.id(5 - i, 5);
    trips.push_back({o, d, 0, grid.distance(o, d), 1.0});
  }
  for (ZoneId z : grid.valid_zones())
    for (int l = 0; l < cfg.battery_levels; ++l)
      for (const DecisionArc& arc : enumerate_decisions({z, l}, trips, 0, cfg, grid)) {
        CHECK(arc.result.battery >= 0);
        CHECK(arc.result.battery < cfg.battery_levels);
        CHECK(arc.result_available_at >= 1);
      }
}

TEST_CASE("feasible set grows with battery level") {
  ModelConfig cfg = desk_model();
  cfg.battery_levels = 6;
  cfg.battery_range_miles = 18.0;
  ZoneGrid grid = ZoneGrid::full(7, 7, 0.5);
  std::vector<TripRequest> trips;
  for (int i = 0; i < 5; ++i) {
    ZoneId o = grid.id(i, i), d = grid.id(6 - i, i);
    if (o == d) continue;
    trips.push_back({o, d, 0, grid.distance(o, d), 1.0});
  }
  auto signature = [](const DecisionArc& a) {
    return std::tuple(static_cast<int>(a.kind), a.trip_index, a.target_zone);
  };
  for (ZoneId z : grid.valid_zones()) {
    std::set<std::tuple<int, int, ZoneId>> prev;
    for (int l = 0; l < cfg.battery_levels; ++l) {
      std::set<std::tuple<int, int, ZoneId>> cur;
      for (const DecisionArc& arc : enumerate_decisions({z, l}, trips, 0, cfg, grid))
        if (arc.kind != DecisionKind::Recharge) cur.insert(signature(arc));
      for (const auto& sig : prev) CHECK(cur.count(sig) == 1);
      prev = std::move(cur);
    }
  }
}

TEST_CASE("exogenous step: losses, arrivals, updates") {
  FleetState state;
  state.cars.push_back({{3, 5}, 2, CarStatus::OnTrip});
  state.cars.push_back({{4, 5}, 5, CarStatus::Recharging});
  state.trips.push_back({1, 2, 1, 0.5, 1.0});  // stale request

  apply_exogenous(state, {}, {}, 2);
  CHECK(state.trips.empty());  // unserved demand is lost
  CHECK(state.cars[0].status == CarStatus::Idle);
  CHECK(state.cars[1].status == CarStatus::Recharging);

  std::vector<TripRequest> fresh{{7, 8, 3, 0.5, 1.0}, {7, 9, 3, 1.0, 1.0}};
  CarUpdate bump{1, {9, 2}};
  apply_exogenous(state, fresh, {{bump}}, 3);
  CHECK(state.trips.size() == 2);
  CHECK(state.cars[1].attr == CarAttribute{9, 2});
}
