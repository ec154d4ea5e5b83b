#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "evfleet/fleet.hpp"
#include "evfleet/spatial.hpp"

namespace evfleet {

struct StepsizeRule {
  enum class Kind { Harmonic, Constant };
  Kind kind = Kind::Harmonic;
  double param = 25.0;  // harmonic: a/(a+n-1); constant: the stepsize itself

  double alpha(int n) const {
    if (kind == Kind::Constant) return param;
    return param / (param + static_cast<double>(n) - 1.0);
  }
};

struct VfaConfig {
  int horizon = 110;
  int battery_levels = 20;
  StepsizeRule alpha;
  double eta = 0.1;       // bias-statistics stepsize
  bool monotone = true;   // apply the order-restoring projections at level 0
};

// Per (epoch, level, area, battery) smoothing statistics.
struct CellStats {
  double value = 0.0;
  double bias = 0.0;       // smoothed (obs - previous estimate)
  double total_var = 0.0;  // smoothed squared deviation
  double lambda = 0.0;     // stepsize-variance accumulator
  int32_t n_obs = 0;
};

// Lookup-table value function over (epoch, zone, battery) with spatially
// aggregated shadow estimates per level, inverse-MSE weighting across levels,
// and monotonicity maintained in the battery (nondecreasing) and time
// (nonincreasing) directions at the disaggregate level.
//
// Storage is materialized per visited area: one dense (horizon+1) x L stats
// grid per area that has seen at least one observation.
class ValueTable {
 public:
  ValueTable(std::shared_ptr<const AggregationTree> tree, VfaConfig cfg);

  const VfaConfig& config() const { return cfg_; }
  int levels() const { return tree_ ? tree_->levels() : 1; }
  const AggregationTree& tree() const { return *tree_; }

  // Weighted combination across observed levels; 0 when nothing was observed
  // or at/after the horizon.
  double query(int t, CarAttribute a) const;

  // Per-level normalized weights; empty-equivalent (all zeros) when no level
  // has an observation at this cell.
  std::vector<double> weights(int t, CarAttribute a) const;

  void update(int t, CarAttribute a, double v_hat);

  // Order-restoring sweeps over stored level-0 cells. The reference cell is
  // set to h; cells above/before are raised, cells below/after are lowered.
  void project_battery(int t, ZoneId zone, int battery, double h);
  void project_time(ZoneId zone, int battery, int t, double h);

  int64_t total_observations() const { return total_obs_; }

  void save(const std::string& path) const;
  static ValueTable load(const std::string& path, std::shared_ptr<const AggregationTree> tree);
  void export_csv(std::ostream& out, const ZoneGrid& zones) const;

  // Direct cell access; returns nullptr when the area grid was never touched.
  const CellStats* cell(int t, int level, int area, int battery) const;
  void set_cell_for_test(int t, int level, int area, int battery, const CellStats& stats);

 private:
  struct AreaGrid {
    std::vector<CellStats> cells;  // (horizon+1) * L, row-major by epoch
  };

  CellStats* cell_mut(int level, int area, int t, int battery, bool create);
  double sigma2_plus_bias2(const CellStats& s, const CellStats* base) const;
  size_t idx(int t, int battery) const {
    return static_cast<size_t>(t) * static_cast<size_t>(cfg_.battery_levels) +
           static_cast<size_t>(battery);
  }

  std::shared_ptr<const AggregationTree> tree_;
  VfaConfig cfg_;
  std::vector<std::vector<std::unique_ptr<AreaGrid>>> store_;  // [level][area]
  int64_t total_obs_ = 0;
};

}  // namespace evfleet
