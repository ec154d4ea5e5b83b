#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "evfleet/economics.hpp"
#include "evfleet/fleet.hpp"
#include "evfleet/pricing.hpp"
#include "evfleet/rng.hpp"
#include "evfleet/spatial.hpp"
#include "evfleet/vfa.hpp"

namespace evfleet {

// Exit-code carriers for the CLI: 2 for configuration, 3 for data problems.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TripRecord {
  int time_s = 0;  // seconds of day
  ZoneId origin = 0;
  ZoneId destination = 0;
};

struct TripDataset {
  std::vector<TripRecord> records;        // sorted by time
  std::vector<int> per_epoch;             // histogram over the model horizon
  std::vector<std::vector<int>> by_epoch; // record indices per epoch
  double mean_distance = 0.0;
  double p5_distance = 0.0;
  double p95_distance = 0.0;

  int count() const { return static_cast<int>(records.size()); }
};

// Accepted CSV schemas (by header): time_s,origin_x,origin_y,dest_x,dest_y
// or time_s,origin,dest with zone ids. Malformed rows report line numbers.
TripDataset load_trips(const std::string& path, const ZoneGrid& grid, const ModelConfig& cfg);
TripDataset make_dataset(std::vector<TripRecord> records, const ZoneGrid& grid,
                         const ModelConfig& cfg);
void save_trips_csv(std::ostream& out, const TripDataset& dataset, const ZoneGrid& grid);

struct SynthProfile {
  struct Peak {
    double center_s;
    double sigma_s;
    double weight;
  };
  struct Hotspot {
    double x;
    double y;
    double spread;  // zone cells
    double weight;
  };
  std::vector<Peak> peaks;
  std::vector<Hotspot> hotspots;

  static SynthProfile tri_peak_default(const ZoneGrid& grid);
};

// Tri-modal synthetic demand with hotspot OD structure; deterministic per seed.
TripDataset synth_trips(const ZoneGrid& grid, const SynthProfile& profile, int total,
                        uint64_t seed, const ModelConfig& cfg);

// Per-iteration sample paths for training and evaluation.
class TripSource {
 public:
  virtual ~TripSource() = default;
  // All trips of one simulated day, keyed by a sample-path index.
  virtual std::vector<std::vector<TripRequest>> sample_day(uint64_t path_id) const = 0;
};

// Keeps the empirical per-epoch counts and redraws origin-destination pairs
// from the same epoch's empirical distribution.
class ResampledTripSource : public TripSource {
 public:
  ResampledTripSource(const TripDataset& data, const ZoneGrid& grid, const ModelConfig& cfg,
                      uint64_t seed, double price_per_mile);
  std::vector<std::vector<TripRequest>> sample_day(uint64_t path_id) const override;

 private:
  const TripDataset& data_;
  const ZoneGrid& grid_;
  ModelConfig cfg_;
  uint64_t seed_;
  double price_;
};

// Replays the dataset itself on every path (deterministic demand).
class FixedTripSource : public TripSource {
 public:
  FixedTripSource(const TripDataset& data, const ZoneGrid& grid, const ModelConfig& cfg,
                  double price_per_mile);
  std::vector<std::vector<TripRequest>> sample_day(uint64_t path_id) const override;

 private:
  std::vector<std::vector<TripRequest>> day_;
  int horizon_;
};

enum class PolicyKind { Myopic, Vfa };

// Flat sectioned key=value configuration; unknown keys are rejected.
struct RunConfig {
  // [grid]
  int grid_width = 20;
  int grid_height = 20;
  double zone_width_miles = 0.5;
  std::string mask_file;
  // [model]
  ModelConfig model;
  // [fleet]
  int fleet_size = 40;
  // [train]
  int iterations = 250;
  PolicyKind policy = PolicyKind::Vfa;
  double myopic_threshold = 0.10;
  StepsizeRule alpha;
  double eta = 0.1;
  int aggregation_levels = 4;  // max level g
  bool hierarchical = true;
  bool monotone = true;
  // [evaluate]
  int episodes = 3;
  std::string table_file;
  // [data]
  std::string trips_file;
  int synth_total = 2000;
  // [pricing]
  bool pricing = false;
  PricingConfig pricing_cfg;
  // [economics]
  EconomicsConfig economics;
  std::vector<int> fleet_sizes = {20, 40, 60, 80};
  std::vector<int> tiers = {1, 2, 3, 4, 5};
  int sweep_train_iterations = 120;
  int sweep_episodes = 3;
  // [run]
  uint64_t seed = 1;
  std::string out_dir = "out";
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

struct World {
  ZoneGrid grid;
  std::shared_ptr<const AggregationTree> tree;
  ModelConfig model;
  int fleet_size;
};

World make_world(const RunConfig& cfg);

}  // namespace evfleet
