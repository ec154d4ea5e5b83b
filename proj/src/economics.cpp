#include "evfleet/economics.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

namespace evfleet {

double battery_cost(int tier, const EconomicsConfig& cfg) {
  if (tier < 1 || tier > 10) throw std::invalid_argument("battery_cost: tier out of 1..10");
  double per_kwh = cfg.base_cost_per_kwh * (1.0 + cfg.tier_escalation * (tier - 1));
  return per_kwh * (cfg.kwh_per_tier * tier);
}

double battery_range_miles(int tier, const EconomicsConfig& cfg) {
  return cfg.kwh_per_tier * tier * cfg.miles_per_kwh;
}

double profit(double daily_revenue, int n_cars, int tier, const EconomicsConfig& cfg) {
  double per_car = cfg.car_base_cost + cfg.maintenance_per_year * cfg.fleet_years +
                   battery_cost(tier, cfg);
  return daily_revenue * cfg.fleet_years * cfg.operating_days_per_year - n_cars * per_car;
}

std::vector<SweepCell> sweep(const std::vector<int>& fleet_sizes, const std::vector<int>& tiers,
                             const std::function<double(int, int)>& harness,
                             const EconomicsConfig& cfg, bool parallel) {
  std::vector<SweepCell> cells;
  for (int fleet : fleet_sizes)
    for (int tier : tiers) cells.push_back({fleet, tier, battery_range_miles(tier, cfg), 0.0, 0.0});

  const int n = static_cast<int>(cells.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    SweepCell& cell = cells[static_cast<size_t>(i)];
    cell.mean_daily_revenue = harness(cell.fleet_size, cell.tier);
    cell.profit = profit(cell.mean_daily_revenue, cell.fleet_size, cell.tier, cfg);
  }
  return cells;
}

std::vector<std::pair<int, int>> optimal_tiers(const std::vector<SweepCell>& surface) {
  std::map<int, std::pair<int, double>> best;  // fleet -> (tier, profit)
  for (const SweepCell& cell : surface) {
    auto it = best.find(cell.fleet_size);
    if (it == best.end() || cell.profit > it->second.second ||
        (cell.profit == it->second.second && cell.tier < it->second.first))
      best[cell.fleet_size] = {cell.tier, cell.profit};
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [fleet, entry] : best) out.emplace_back(fleet, entry.first);
  return out;
}

void write_surface_csv(std::ostream& out, const std::vector<SweepCell>& surface) {
  out << "fleet_size,tier,battery_miles,mean_daily_revenue,profit\n";
  for (const SweepCell& cell : surface)
    out << cell.fleet_size << "," << cell.tier << "," << cell.battery_miles << ","
        << cell.mean_daily_revenue << "," << cell.profit << "\n";
}

}  // namespace evfleet
