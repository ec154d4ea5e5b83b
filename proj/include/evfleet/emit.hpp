#pragma once

#include <iosfwd>
#include <string>

#include "evfleet/adp.hpp"
#include "evfleet/economics.hpp"

namespace evfleet {

// Fixed-format writers; identical inputs produce byte-identical files.
void write_epoch_csv(std::ostream& out, const EpisodeMetrics& metrics);
void write_summary_json(std::ostream& out, const EpisodeMetrics& metrics, int fleet_size,
                        double mean_revenue);
void write_revenue_series_csv(std::ostream& out, const std::vector<double>& series);
void write_price_log_csv(std::ostream& out, const std::vector<PriceLogRow>& log);
void write_price_histogram_csv(std::ostream& out, const std::vector<PriceLogRow>& log,
                               const PriceGrid& grid);

std::string format_money(double dollars);  // 6 decimal places

}  // namespace evfleet
