#pragma once

#include <span>
#include <vector>

#include "evfleet/spatial.hpp"

namespace evfleet {

// The car attribute vector: zone plus discretized battery level in [0, L).
struct CarAttribute {
  ZoneId zone = 0;
  int battery = 0;

  friend bool operator==(const CarAttribute&, const CarAttribute&) = default;
};

enum class CarStatus { Idle, OnTrip, Repositioning, Recharging };

struct CarState {
  CarAttribute attr;
  int available_at = 0;  // first epoch the car can be assigned again
  CarStatus status = CarStatus::Idle;
};

struct TripRequest {
  ZoneId origin = 0;
  ZoneId destination = 0;
  int request_epoch = 0;
  double distance_miles = 0.0;
  double price_per_mile = 1.0;
};

enum class DecisionKind { Serve, Reposition, Recharge, Stay };

struct DecisionArc {
  DecisionKind kind = DecisionKind::Stay;
  CarAttribute car;
  int trip_index = -1;      // Serve: index into the epoch's trip list
  ZoneId target_zone = -1;  // Reposition
  int recharge_epochs = 0;  // Recharge: whole-epoch plug-in duration
  double contribution = 0.0;
  CarAttribute result;
  int result_available_at = 0;
};

struct ModelConfig {
  double epoch_minutes = 15.0;
  int horizon_epochs = 110;  // 3 warmup + 96 day + 11 drain
  int day_start_epoch = 3;
  double trip_base_fare = 2.4;
  double price_per_mile = 1.0;  // default when surge pricing is off
  double recharge_base_fee = 1.0;
  double recharge_cost_per_mile = 0.1;
  double recharge_rate_mph = 300.0;  // miles of range added per hour plugged in
  double battery_range_miles = 200.0;
  int battery_levels = 20;
  double pickup_range_miles = 5.0;
  double speed_mph = 30.0;
  double miles_per_kwh = 3.0;

  double miles_per_level() const { return battery_range_miles / battery_levels; }
  double epoch_hours() const { return epoch_minutes / 60.0; }
  void validate() const;
};

// Battery levels consumed by driving `miles` (rounds up: conservative).
int levels_for_miles(double miles, const ModelConfig& cfg);

// Levels gained by `epochs` plugged in (rounds down), before the L-1 cap.
int levels_gained(int epochs, const ModelConfig& cfg);

// Plug-in epochs needed to certainly reach full charge from `battery`.
int epochs_to_full(int battery, const ModelConfig& cfg);

DecisionArc make_stay_arc(const CarAttribute& car, int t);
DecisionArc make_reposition_arc(const CarAttribute& car, ZoneId to, int t, const ModelConfig& cfg,
                                const ZoneGrid& grid);
DecisionArc make_recharge_arc(const CarAttribute& car, int epochs, int t, const ModelConfig& cfg);
DecisionArc make_serve_arc(const CarAttribute& car, int trip_index, const TripRequest& trip, int t,
                           const ModelConfig& cfg, const ZoneGrid& grid);

// All feasible elementary decisions for one car: serve arcs for in-range trips
// covered by the current charge, reposition arcs to reachable 8-neighbors,
// recharge menus of whole epochs while below full, and stay (always feasible).
std::vector<DecisionArc> enumerate_decisions(const CarAttribute& car,
                                             std::span<const TripRequest> trips, int t,
                                             const ModelConfig& cfg, const ZoneGrid& grid);

// Recompute the post-decision attribute and availability for an arc; throws if
// the arc is infeasible for the car. Matches the fields stored on the arc.
std::pair<CarAttribute, int> transition(const CarAttribute& car, const DecisionArc& arc, int t,
                                        const ModelConfig& cfg, const ZoneGrid& grid,
                                        std::span<const TripRequest> trips);

double contribution(const DecisionArc& arc, const ModelConfig& cfg,
                    std::span<const TripRequest> trips);

struct FleetState {
  std::vector<CarState> cars;
  std::vector<TripRequest> trips;  // open requests at the current epoch
  int epoch = 0;
};

struct CarUpdate {  // exogenous attribute change hook (the R-hat channel)
  int car_index;
  CarAttribute new_attr;
};

// Advance to epoch t: unserved trips are lost, `new_trips` become the open
// set, cars that arrive at t become assignable, external updates are applied.
void apply_exogenous(FleetState& state, std::vector<TripRequest> new_trips,
                     std::span<const CarUpdate> updates, int t);

}  // namespace evfleet
