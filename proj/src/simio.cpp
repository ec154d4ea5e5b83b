#include "evfleet/simio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace evfleet {

namespace {

int epoch_of(int time_s, const ModelConfig& cfg) {
  return cfg.day_start_epoch + static_cast<int>(time_s / (cfg.epoch_minutes * 60.0));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TripDataset make_dataset(std::vector<TripRecord> records, const ZoneGrid& grid,
                         const ModelConfig& cfg) {
  if (records.empty()) throw DataError("trip dataset is empty");
  std::stable_sort(records.begin(), records.end(),
                   [](const TripRecord& a, const TripRecord& b) { return a.time_s < b.time_s; });
  TripDataset data;
  data.records = std::move(records);
  data.per_epoch.assign(static_cast<size_t>(cfg.horizon_epochs), 0);
  data.by_epoch.assign(static_cast<size_t>(cfg.horizon_epochs), {});
  std::vector<double> dist;
  dist.reserve(data.records.size());
  for (int i = 0; i < data.count(); ++i) {
    const TripRecord& r = data.records[static_cast<size_t>(i)];
    if (r.time_s < 0 || r.time_s >= 24 * 3600)
      throw DataError("trip time outside 24h: " + std::to_string(r.time_s));
    if (!grid.valid(r.origin) || !grid.valid(r.destination))
      throw DataError("trip references an invalid zone");
    if (r.origin == r.destination) throw DataError("trip with identical origin and destination");
    int e = epoch_of(r.time_s, cfg);
    if (e >= cfg.horizon_epochs) throw DataError("trip epoch beyond horizon");
    data.per_epoch[static_cast<size_t>(e)] += 1;
    data.by_epoch[static_cast<size_t>(e)].push_back(i);
    dist.push_back(grid.distance(r.origin, r.destination));
  }
  std::sort(dist.begin(), dist.end());
  double sum = 0.0;
  for (double d : dist) sum += d;
  data.mean_distance = sum / static_cast<double>(dist.size());
  auto pct = [&](double p) {
    size_t idx = static_cast<size_t>(p * static_cast<double>(dist.size() - 1));
    return dist[idx];
  };
  data.p5_distance = pct(0.05);
  data.p95_distance = pct(0.95);
  return data;
}

TripDataset load_trips(const std::string& path, const ZoneGrid& grid, const ModelConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trips file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trips file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool xy_schema;
  if (line == "time_s,origin_x,origin_y,dest_x,dest_y")
    xy_schema = true;
  else if (line == "time_s,origin,dest")
    xy_schema = false;
  else
    throw DataError("trips file: unrecognized header '" + line + "'");

  std::vector<TripRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    size_t expected = xy_schema ? 5 : 3;
    if (fields.size() != expected)
      throw DataError("trips file line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " fields");
    try {
      TripRecord r;
      r.time_s = std::stoi(fields[0]);
      if (xy_schema) {
        int ox = std::stoi(fields[1]), oy = std::stoi(fields[2]);
        int dx = std::stoi(fields[3]), dy = std::stoi(fields[4]);
        if (!grid.in_bounds(ox, oy) || !grid.in_bounds(dx, dy))
          throw DataError("coordinate outside grid");
        r.origin = grid.id(ox, oy);
        r.destination = grid.id(dx, dy);
      } else {
        r.origin = std::stoi(fields[1]);
        r.destination = std::stoi(fields[2]);
      }
      records.push_back(r);
    } catch (const DataError&) {
      throw DataError("trips file line " + std::to_string(line_no) + ": coordinate outside grid");
    } catch (const std::exception&) {
      throw DataError("trips file line " + std::to_string(line_no) + ": malformed row");
    }
  }
  try {
    return make_dataset(std::move(records), grid, cfg);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_trips_csv(std::ostream& out, const TripDataset& dataset, const ZoneGrid& grid) {
  out << "time_s,origin_x,origin_y,dest_x,dest_y\n";
  for (const TripRecord& r : dataset.records) {
    ZoneXY o = grid.xy(r.origin), d = grid.xy(r.destination);
    out << r.time_s << "," << o.x << "," << o.y << "," << d.x << "," << d.y << "\n";
  }
}

SynthProfile SynthProfile::tri_peak_default(const ZoneGrid& grid) {
  SynthProfile p;
  p.peaks = {{8.0 * 3600, 1.1 * 3600, 0.35},   // morning
             {12.5 * 3600, 1.0 * 3600, 0.25},  // mid-day
             {17.5 * 3600, 1.1 * 3600, 0.40}}; // late afternoon
  double w = grid.width(), h = grid.height();
  p.hotspots = {{0.25 * w, 0.30 * h, 0.08 * w, 0.4},
                {0.70 * w, 0.60 * h, 0.10 * w, 0.4},
                {0.50 * w, 0.85 * h, 0.12 * w, 0.2}};
  return p;
}

TripDataset synth_trips(const ZoneGrid& grid, const SynthProfile& profile, int total,
                        uint64_t seed, const ModelConfig& cfg) {
  if (total < 1) throw std::invalid_argument("synth_trips: total must be >= 1");
  if (profile.peaks.empty() || profile.hotspots.empty())
    throw std::invalid_argument("synth_trips: profile needs peaks and hotspots");
  Rng rng(Rng::derive(seed, 0xda7a));

  double peak_total = 0.0;
  for (const auto& p : profile.peaks) peak_total += p.weight;
  double hot_total = 0.0;
  for (const auto& hs : profile.hotspots) hot_total += hs.weight;

  auto pick_peak = [&]() -> const SynthProfile::Peak& {
    double u = rng.next_double() * peak_total;
    for (const auto& p : profile.peaks) {
      if (u < p.weight) return p;
      u -= p.weight;
    }
    return profile.peaks.back();
  };
  auto pick_hotspot = [&]() -> const SynthProfile::Hotspot& {
    double u = rng.next_double() * hot_total;
    for (const auto& hs : profile.hotspots) {
      if (u < hs.weight) return hs;
      u -= hs.weight;
    }
    return profile.hotspots.back();
  };
  auto pick_zone = [&](const SynthProfile::Hotspot& hs) -> ZoneId {
    for (int attempt = 0; attempt < 64; ++attempt) {
      int x = static_cast<int>(std::lround(hs.x + hs.spread * rng.next_gaussian()));
      int y = static_cast<int>(std::lround(hs.y + hs.spread * rng.next_gaussian()));
      if (grid.in_bounds(x, y) && grid.valid(grid.id(x, y))) return grid.id(x, y);
    }
    return grid.valid_zones()[rng.next_below(static_cast<uint64_t>(grid.valid_count()))];
  };

  std::vector<TripRecord> records;
  records.reserve(static_cast<size_t>(total));
  const double day_s = 24.0 * 3600.0;
  const double max_s = (cfg.horizon_epochs - cfg.day_start_epoch) * cfg.epoch_minutes * 60.0;
  while (static_cast<int>(records.size()) < total) {
    const auto& peak = pick_peak();
    double t = peak.center_s + peak.sigma_s * rng.next_gaussian();
    if (t < 0.0 || t >= std::min(day_s, max_s)) continue;
    TripRecord r;
    r.time_s = static_cast<int>(t);
    r.origin = pick_zone(pick_hotspot());
    r.destination = pick_zone(pick_hotspot());
    if (r.origin == r.destination) continue;
    records.push_back(r);
  }
  return make_dataset(std::move(records), grid, cfg);
}

ResampledTripSource::ResampledTripSource(const TripDataset& data, const ZoneGrid& grid,
                                         const ModelConfig& cfg, uint64_t seed,
                                         double price_per_mile)
    : data_(data), grid_(grid), cfg_(cfg), seed_(seed), price_(price_per_mile) {}

std::vector<std::vector<TripRequest>> ResampledTripSource::sample_day(uint64_t path_id) const {
  Rng rng(Rng::derive(seed_, 0x5a3e ^ path_id));
  std::vector<std::vector<TripRequest>> day(static_cast<size_t>(cfg_.horizon_epochs));
  for (int e = 0; e < cfg_.horizon_epochs; ++e) {
    const auto& pool = data_.by_epoch[static_cast<size_t>(e)];
    if (pool.empty()) continue;
    int n = data_.per_epoch[static_cast<size_t>(e)];
    auto& out = day[static_cast<size_t>(e)];
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const TripRecord& r = data_.records[static_cast<size_t>(pool[rng.next_below(pool.size())])];
      out.push_back({r.origin, r.destination, e, grid_.distance(r.origin, r.destination), price_});
    }
  }
  return day;
}

FixedTripSource::FixedTripSource(const TripDataset& data, const ZoneGrid& grid,
                                 const ModelConfig& cfg, double price_per_mile)
    : horizon_(cfg.horizon_epochs) {
  day_.resize(static_cast<size_t>(horizon_));
  for (int e = 0; e < horizon_; ++e)
    for (int idx : data.by_epoch[static_cast<size_t>(e)]) {
      const TripRecord& r = data.records[static_cast<size_t>(idx)];
      day_[static_cast<size_t>(e)].push_back(
          {r.origin, r.destination, e, grid.distance(r.origin, r.destination), price_per_mile});
    }
}

std::vector<std::vector<TripRequest>> FixedTripSource::sample_day(uint64_t) const { return day_; }

namespace {

struct RawConfig {
  std::map<std::string, std::string> values;  // "section.key" -> value
  mutable std::map<std::string, bool> used;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  template <typename F>
  void take(const std::string& key, F&& apply) const {
    auto it = values.find(key);
    if (it == values.end()) return;
    used[key] = true;
    apply(it->second);
  }
};

double to_double(const std::string& key, const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + s + "'");
  }
}

int64_t to_int(const std::string& key, const std::string& s) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + s + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, ','))
    out.push_back(static_cast<int>(to_int(key, field)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RawConfig raw;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || section.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": key outside a section");
    std::string full = section + "." + key;
    if (raw.values.count(full))
      throw ConfigError("config: duplicate key " + full);
    raw.values[full] = value;
  }

  RunConfig cfg;
  auto num = [&](const std::string& key, double& target) {
    raw.take(key, [&](const std::string& s) { target = to_double(key, s); });
  };
  auto integer = [&](const std::string& key, int& target) {
    raw.take(key, [&](const std::string& s) { target = static_cast<int>(to_int(key, s)); });
  };
  auto boolean = [&](const std::string& key, bool& target) {
    raw.take(key, [&](const std::string& s) { target = to_bool(key, s); });
  };
  auto text = [&](const std::string& key, std::string& target) {
    raw.take(key, [&](const std::string& s) { target = s; });
  };

  integer("grid.width", cfg.grid_width);
  integer("grid.height", cfg.grid_height);
  num("grid.zone_width_miles", cfg.zone_width_miles);
  text("grid.mask_file", cfg.mask_file);

  num("model.epoch_minutes", cfg.model.epoch_minutes);
  integer("model.horizon_epochs", cfg.model.horizon_epochs);
  integer("model.day_start_epoch", cfg.model.day_start_epoch);
  num("model.trip_base_fare", cfg.model.trip_base_fare);
  num("model.price_per_mile", cfg.model.price_per_mile);
  num("model.recharge_base_fee", cfg.model.recharge_base_fee);
  num("model.recharge_cost_per_mile", cfg.model.recharge_cost_per_mile);
  num("model.recharge_rate_mph", cfg.model.recharge_rate_mph);
  num("model.battery_range_miles", cfg.model.battery_range_miles);
  integer("model.battery_levels", cfg.model.battery_levels);
  num("model.pickup_range_miles", cfg.model.pickup_range_miles);
  num("model.speed_mph", cfg.model.speed_mph);
  num("model.miles_per_kwh", cfg.model.miles_per_kwh);

  integer("fleet.cars", cfg.fleet_size);

  integer("train.iterations", cfg.iterations);
  raw.take("train.policy", [&](const std::string& s) {
    if (s == "myopic")
      cfg.policy = PolicyKind::Myopic;
    else if (s == "vfa")
      cfg.policy = PolicyKind::Vfa;
    else
      throw ConfigError("config: train.policy must be myopic or vfa");
  });
  num("train.myopic_threshold", cfg.myopic_threshold);
  raw.take("train.stepsize_rule", [&](const std::string& s) {
    if (s == "harmonic")
      cfg.alpha.kind = StepsizeRule::Kind::Harmonic;
    else if (s == "constant")
      cfg.alpha.kind = StepsizeRule::Kind::Constant;
    else
      throw ConfigError("config: train.stepsize_rule must be harmonic or constant");
  });
  num("train.stepsize_param", cfg.alpha.param);
  num("train.eta", cfg.eta);
  integer("train.aggregation_levels", cfg.aggregation_levels);
  boolean("train.hierarchical", cfg.hierarchical);
  boolean("train.monotone", cfg.monotone);

  integer("evaluate.episodes", cfg.episodes);
  text("evaluate.table_file", cfg.table_file);

  text("data.trips_file", cfg.trips_file);
  integer("data.synth_total", cfg.synth_total);

  boolean("pricing.enabled", cfg.pricing);
  num("pricing.price_min", cfg.pricing_cfg.grid.min_price);
  num("pricing.price_max", cfg.pricing_cfg.grid.max_price);
  integer("pricing.price_points", cfg.pricing_cfg.grid.points);
  integer("pricing.curves_per_side", cfg.pricing_cfg.curves_per_side);
  integer("pricing.min_resample_obs", cfg.pricing_cfg.min_resample_obs);

  num("economics.fleet_years", cfg.economics.fleet_years);
  num("economics.operating_days_per_year", cfg.economics.operating_days_per_year);
  num("economics.car_base_cost", cfg.economics.car_base_cost);
  num("economics.maintenance_per_year", cfg.economics.maintenance_per_year);
  raw.take("economics.fleet_sizes",
           [&](const std::string& s) { cfg.fleet_sizes = to_int_list("economics.fleet_sizes", s); });
  raw.take("economics.tiers",
           [&](const std::string& s) { cfg.tiers = to_int_list("economics.tiers", s); });
  integer("economics.sweep_train_iterations", cfg.sweep_train_iterations);
  integer("economics.sweep_episodes", cfg.sweep_episodes);

  raw.take("run.seed", [&](const std::string& s) {
    cfg.seed = static_cast<uint64_t>(to_int("run.seed", s));
  });
  text("run.out_dir", cfg.out_dir);

  for (const auto& [key, value] : raw.values)
    if (!raw.used[key]) throw ConfigError("config: unknown key " + key);

  if (cfg.iterations < 1) throw ConfigError("config: train.iterations must be >= 1");
  if (cfg.aggregation_levels < 0) throw ConfigError("config: aggregation_levels must be >= 0");
  try {
    cfg.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

World make_world(const RunConfig& cfg) {
  ZoneGrid grid = cfg.mask_file.empty()
                      ? ZoneGrid::full(cfg.grid_width, cfg.grid_height, cfg.zone_width_miles)
                      : load_grid_from_mask_file(cfg.mask_file, cfg.zone_width_miles);
  int max_level = cfg.hierarchical ? cfg.aggregation_levels : 0;
  auto tree = std::make_shared<AggregationTree>(grid, max_level);
  return World{std::move(grid), std::move(tree), cfg.model, cfg.fleet_size};
}

}  // namespace evfleet
