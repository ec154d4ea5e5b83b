#include "evfleet/emit.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace evfleet {

std::string format_money(double dollars) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", dollars);
  return buf;
}

void write_epoch_csv(std::ostream& out, const EpisodeMetrics& metrics) {
  out << "epoch,requested,served,price_rejected,on_trip,staying,repositioning,recharging,"
         "fleet_battery_miles,revenue\n";
  for (size_t t = 0; t < metrics.epochs.size(); ++t) {
    const EpochRow& r = metrics.epochs[t];
    out << t << "," << r.requested << "," << r.served << "," << r.price_rejected << ","
        << r.on_trip << "," << r.staying << "," << r.repositioning << "," << r.recharging << ","
        << format_money(r.fleet_battery_miles) << "," << format_money(r.revenue) << "\n";
  }
}

void write_summary_json(std::ostream& out, const EpisodeMetrics& metrics, int fleet_size,
                        double mean_revenue) {
  nlohmann::ordered_json j;
  j["revenue"] = mean_revenue;
  j["revenue_per_car"] = fleet_size > 0 ? mean_revenue / fleet_size : 0.0;
  j["trips_requested"] = metrics.requested;
  j["trips_served"] = metrics.served;
  j["coverage_pct"] = 100.0 * metrics.coverage();
  j["pct_cars_on_trips"] = metrics.pct_on_trip;
  j["pct_cars_staying"] = metrics.pct_staying;
  j["pct_cars_repositioning"] = metrics.pct_repositioning;
  j["pct_cars_recharging"] = metrics.pct_recharging;
  out << j.dump(2) << "\n";
}

void write_revenue_series_csv(std::ostream& out, const std::vector<double>& series) {
  out << "iteration,revenue\n";
  for (size_t i = 0; i < series.size(); ++i)
    out << (i + 1) << "," << format_money(series[i]) << "\n";
}

void write_price_log_csv(std::ostream& out, const std::vector<PriceLogRow>& log) {
  out << "epoch,zone,price,y_rider,y_operator\n";
  for (const PriceLogRow& r : log)
    out << r.epoch << "," << r.zone << "," << format_money(r.price) << "," << r.y_rider << ","
        << r.y_operator << "\n";
}

void write_price_histogram_csv(std::ostream& out, const std::vector<PriceLogRow>& log,
                               const PriceGrid& grid) {
  std::vector<int> counts(static_cast<size_t>(grid.points), 0);
  for (const PriceLogRow& r : log) {
    int nearest = 0;
    double best = 1e300;
    for (int m = 0; m < grid.points; ++m) {
      double d = std::abs(grid.at(m) - r.price);
      if (d < best) {
        best = d;
        nearest = m;
      }
    }
    counts[static_cast<size_t>(nearest)] += 1;
  }
  out << "price,count\n";
  for (int m = 0; m < grid.points; ++m)
    out << format_money(grid.at(m)) << "," << counts[static_cast<size_t>(m)] << "\n";
}

}  // namespace evfleet
