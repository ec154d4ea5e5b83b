#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evfleet/assignment.hpp"
#include "evfleet/pricing.hpp"
#include "evfleet/simio.hpp"
#include "evfleet/vfa.hpp"

namespace evfleet {

struct EpochRow {
  int requested = 0;
  int served = 0;
  int price_rejected = 0;
  int on_trip = 0;
  int staying = 0;
  int repositioning = 0;
  int recharging = 0;
  double fleet_battery_miles = 0.0;
  double revenue = 0.0;
};

struct EpisodeMetrics {
  std::vector<EpochRow> epochs;
  double revenue = 0.0;
  int requested = 0;
  int served = 0;
  double pct_on_trip = 0.0;
  double pct_staying = 0.0;
  double pct_repositioning = 0.0;
  double pct_recharging = 0.0;

  double coverage() const { return requested > 0 ? static_cast<double>(served) / requested : 0.0; }
};

struct PriceLogRow {
  int epoch = 0;
  ZoneId zone = 0;
  double price = 0.0;
  int y_rider = 0;
  int y_operator = 0;  // 0 when the rider rejected (no operator response)
};

// Online surge-pricing learner wired into the simulation: one belief per
// valid zone, a hidden true rider curve per zone, operator responses taken
// from the assignment solution.
class PricingSim {
 public:
  PricingSim(const World& world, PricingConfig cfg, uint64_t seed, bool truth_in_candidates);

  double zone_price(int zone_index, const PriceContext& base);
  bool rider_accepts(int zone_index, const PriceContext& context);
  void observe(int zone_index, const PricingObservation& obs);
  void end_of_day_resample();

  const PricingConfig& config() const { return cfg_; }
  const std::vector<ZoneBelief>& beliefs() const { return beliefs_; }
  std::vector<PriceLogRow>& log() { return log_; }
  double max_posterior_error() const { return max_posterior_error_; }

 private:
  PricingConfig cfg_;
  std::vector<ZoneBelief> beliefs_;
  std::vector<LogisticCurve> true_rider_;
  Rng rng_;
  std::vector<PriceLogRow> log_;
  double max_posterior_error_ = 0.0;
};

struct TrainConfig {
  int iterations = 250;
  uint64_t seed = 1;
  StepsizeRule alpha;
  double eta = 0.1;
  bool monotone = true;
  bool pricing = false;
  PricingConfig pricing_cfg;
};

struct TrainResult {
  ValueTable table;
  std::vector<double> revenue_series;  // episode revenue per iteration
};

// Forward ADP (approximate value iteration on marginal car values): per epoch
// solve the value-augmented assignment, harvest class duals, smooth them into
// the table, step the physics forward.
TrainResult train(const World& world, const TripSource& trips, const TrainConfig& cfg);

struct EvalConfig {
  int episodes = 3;
  uint64_t seed = 1;
  PolicyKind policy = PolicyKind::Vfa;
  double myopic_threshold = 0.10;
  bool parallel = true;
  bool pricing = false;
  PricingConfig pricing_cfg;
  int pricing_warmup_episodes = 0;  // episodes run before metrics are kept
};

struct EvalResult {
  std::vector<EpisodeMetrics> episodes;
  EpisodeMetrics mean;
  std::vector<PriceLogRow> price_log;
};

// Run a frozen policy over independent episodes. Episodes run concurrently
// unless pricing is on (the learner state is sequential across days).
EvalResult evaluate(const World& world, const ValueTable* table, const TripSource& trips,
                    const EvalConfig& cfg);

// One (attribute, dual) pair per car class present at the epoch.
std::vector<std::pair<CarAttribute, double>> dual_harvest(const AssignmentProblem& problem,
                                                          const AssignmentSolution& solution);

// Uniform random placement over valid zones, full battery.
FleetState initial_state(const World& world, uint64_t placement_seed);

// Single-day simulation; updates the table when `training` is set. Exposed
// for tests and the oracle comparisons.
EpisodeMetrics run_episode(const World& world, ValueTable* table, bool training,
                           PolicyKind policy, double myopic_threshold,
                           const std::vector<std::vector<TripRequest>>& day,
                           uint64_t placement_seed, PricingSim* pricing);

}  // namespace evfleet
