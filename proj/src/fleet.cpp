#include "evfleet/fleet.hpp"

#include <cmath>
#include <stdexcept>

namespace evfleet {

void ModelConfig::validate() const {
  if (epoch_minutes <= 0 || horizon_epochs <= 0 || battery_levels <= 0 ||
      battery_range_miles <= 0 || recharge_rate_mph <= 0 || speed_mph <= 0 ||
      pickup_range_miles < 0 || trip_base_fare < 0 || recharge_base_fee < 0 ||
      recharge_cost_per_mile < 0 || miles_per_kwh <= 0 || day_start_epoch < 0)
    throw std::invalid_argument("ModelConfig: non-positive parameter");
}

int levels_for_miles(double miles, const ModelConfig& cfg) {
  if (miles <= 0.0) return 0;
  return static_cast<int>(std::ceil(miles / cfg.miles_per_level() - 1e-9));
}

int levels_gained(int epochs, const ModelConfig& cfg) {
  double miles = cfg.recharge_rate_mph * cfg.epoch_hours() * epochs;
  return static_cast<int>(std::floor(miles / cfg.miles_per_level() + 1e-9));
}

int epochs_to_full(int battery, const ModelConfig& cfg) {
  int deficit = cfg.battery_levels - 1 - battery;
  if (deficit <= 0) return 0;
  double hours = deficit * cfg.miles_per_level() / cfg.recharge_rate_mph;
  return static_cast<int>(std::ceil(hours / cfg.epoch_hours() - 1e-9));
}

DecisionArc make_stay_arc(const CarAttribute& car, int t) {
  DecisionArc a;
  a.kind = DecisionKind::Stay;
  a.car = car;
  a.contribution = 0.0;
  a.result = car;
  a.result_available_at = t + 1;
  return a;
}

DecisionArc make_reposition_arc(const CarAttribute& car, ZoneId to, int t, const ModelConfig& cfg,
                                const ZoneGrid& grid) {
  DecisionArc a;
  a.kind = DecisionKind::Reposition;
  a.car = car;
  a.target_zone = to;
  a.contribution = 0.0;
  int cost = levels_for_miles(grid.distance(car.zone, to), cfg);
  a.result = {to, car.battery - cost};
  a.result_available_at = t + 1;
  return a;
}

DecisionArc make_recharge_arc(const CarAttribute& car, int epochs, int t, const ModelConfig& cfg) {
  DecisionArc a;
  a.kind = DecisionKind::Recharge;
  a.car = car;
  a.recharge_epochs = epochs;
  double hours = epochs * cfg.epoch_hours();
  a.contribution = -(cfg.recharge_base_fee + cfg.recharge_cost_per_mile * cfg.recharge_rate_mph * hours);
  int gained = levels_gained(epochs, cfg);
  a.result = {car.zone, std::min(cfg.battery_levels - 1, car.battery + gained)};
  a.result_available_at = t + epochs;
  return a;
}

DecisionArc make_serve_arc(const CarAttribute& car, int trip_index, const TripRequest& trip, int t,
                           const ModelConfig& cfg, const ZoneGrid& grid) {
  DecisionArc a;
  a.kind = DecisionKind::Serve;
  a.car = car;
  a.trip_index = trip_index;
  double deadhead = grid.distance(car.zone, trip.origin);
  a.contribution = cfg.trip_base_fare + trip.price_per_mile * trip.distance_miles;
  int cost = levels_for_miles(deadhead + trip.distance_miles, cfg);
  a.result = {trip.destination, car.battery - cost};
  a.result_available_at = t + travel_epochs(deadhead, cfg.speed_mph, cfg.epoch_minutes) +
                          travel_epochs(trip.distance_miles, cfg.speed_mph, cfg.epoch_minutes);
  return a;
}

std::vector<DecisionArc> enumerate_decisions(const CarAttribute& car,
                                             std::span<const TripRequest> trips, int t,
                                             const ModelConfig& cfg, const ZoneGrid& grid) {
  grid.require_valid(car.zone);
  if (car.battery < 0 || car.battery >= cfg.battery_levels)
    throw std::invalid_argument("enumerate_decisions: battery level out of range");

  std::vector<DecisionArc> arcs;
  for (int i = 0; i < static_cast<int>(trips.size()); ++i) {
    const TripRequest& trip = trips[static_cast<size_t>(i)];
    double deadhead = grid.distance(car.zone, trip.origin);
    if (deadhead > cfg.pickup_range_miles + 1e-9) continue;
    if (levels_for_miles(deadhead + trip.distance_miles, cfg) > car.battery) continue;
    arcs.push_back(make_serve_arc(car, i, trip, t, cfg, grid));
  }
  for (ZoneId n : grid.neighbors8(car.zone)) {
    if (levels_for_miles(grid.distance(car.zone, n), cfg) > car.battery) continue;
    arcs.push_back(make_reposition_arc(car, n, t, cfg, grid));
  }
  if (car.battery < cfg.battery_levels - 1) {
    int max_epochs = epochs_to_full(car.battery, cfg);
    for (int k = 1; k <= max_epochs; ++k) arcs.push_back(make_recharge_arc(car, k, t, cfg));
  }
  arcs.push_back(make_stay_arc(car, t));
  return arcs;
}

std::pair<CarAttribute, int> transition(const CarAttribute& car, const DecisionArc& arc, int t,
                                        const ModelConfig& cfg, const ZoneGrid& grid,
                                        std::span<const TripRequest> trips) {
  DecisionArc fresh;
  switch (arc.kind) {
    case DecisionKind::Stay:
      fresh = make_stay_arc(car, t);
      break;
    case DecisionKind::Reposition:
      fresh = make_reposition_arc(car, arc.target_zone, t, cfg, grid);
      break;
    case DecisionKind::Recharge:
      fresh = make_recharge_arc(car, arc.recharge_epochs, t, cfg);
      break;
    case DecisionKind::Serve:
      fresh = make_serve_arc(car, arc.trip_index, trips[static_cast<size_t>(arc.trip_index)], t,
                             cfg, grid);
      break;
  }
  if (fresh.result.battery < 0)
    throw std::invalid_argument("transition: arc infeasible (battery would go negative)");
  return {fresh.result, fresh.result_available_at};
}

double contribution(const DecisionArc& arc, const ModelConfig& cfg,
                    std::span<const TripRequest> trips) {
  switch (arc.kind) {
    case DecisionKind::Serve: {
      const TripRequest& trip = trips[static_cast<size_t>(arc.trip_index)];
      return cfg.trip_base_fare + trip.price_per_mile * trip.distance_miles;
    }
    case DecisionKind::Recharge:
      return -(cfg.recharge_base_fee +
               cfg.recharge_cost_per_mile * cfg.recharge_rate_mph * arc.recharge_epochs * cfg.epoch_hours());
    default:
      return 0.0;
  }
}

void apply_exogenous(FleetState& state, std::vector<TripRequest> new_trips,
                     std::span<const CarUpdate> updates, int t) {
  state.trips = std::move(new_trips);  // unserved demand from t-1 is lost
  state.epoch = t;
  for (CarState& car : state.cars)
    if (car.available_at <= t) car.status = CarStatus::Idle;
  for (const CarUpdate& u : updates) {
    CarState& car = state.cars[static_cast<size_t>(u.car_index)];
    car.attr = u.new_attr;
  }
}

}  // namespace evfleet
