#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

namespace evfleet {

struct EconomicsConfig {
  double fleet_years = 4.0;
  double operating_days_per_year = 340.0;
  double car_base_cost = 40000.0;
  double maintenance_per_year = 3000.0;
  double kwh_per_tier = 16.67;
  double base_cost_per_kwh = 240.0;
  double tier_escalation = 0.2;  // +20% $/kWh per tier
  double miles_per_kwh = 3.0;
};

// Battery capital cost for tier i in 1..10.
double battery_cost(int tier, const EconomicsConfig& cfg = {});

double battery_range_miles(int tier, const EconomicsConfig& cfg = {});

// Fleet profit over the ownership period from a mean daily revenue.
double profit(double daily_revenue, int n_cars, int tier, const EconomicsConfig& cfg = {});

struct SweepCell {
  int fleet_size = 0;
  int tier = 0;
  double battery_miles = 0.0;
  double mean_daily_revenue = 0.0;
  double profit = 0.0;
};

// Evaluate the harness on each (fleet size, tier) cell; cells run in parallel
// when requested. Output is ordered by (fleet, tier) regardless.
std::vector<SweepCell> sweep(const std::vector<int>& fleet_sizes, const std::vector<int>& tiers,
                             const std::function<double(int fleet, int tier)>& harness,
                             const EconomicsConfig& cfg = {}, bool parallel = true);

// Profit-maximizing tier per fleet size (lowest tier wins ties).
std::vector<std::pair<int, int>> optimal_tiers(const std::vector<SweepCell>& surface);

void write_surface_csv(std::ostream& out, const std::vector<SweepCell>& surface);

}  // namespace evfleet
