#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "evfleet/adp.hpp"
#include "evfleet/economics.hpp"
#include "evfleet/emit.hpp"
#include "evfleet/oracle.hpp"
#include "evfleet/simio.hpp"

namespace fs = std::filesystem;
using namespace evfleet;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string policy;
  bool no_hier = false;
  bool no_monotone = false;
  bool pricing = false;
};

RunConfig effective_config(const CliOptions& opt) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed_set) cfg.seed = opt.seed;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (!opt.policy.empty()) {
    if (opt.policy == "myopic")
      cfg.policy = PolicyKind::Myopic;
    else if (opt.policy == "vfa")
      cfg.policy = PolicyKind::Vfa;
    else
      throw ConfigError("--policy must be myopic or vfa");
  }
  if (opt.no_hier) cfg.hierarchical = false;
  if (opt.no_monotone) cfg.monotone = false;
  if (opt.pricing) cfg.pricing = true;
  return cfg;
}

TripDataset dataset_for(const RunConfig& cfg, const World& world) {
  if (!cfg.trips_file.empty()) return load_trips(cfg.trips_file, world.grid, world.model);
  return synth_trips(world.grid, SynthProfile::tri_peak_default(world.grid), cfg.synth_total,
                     cfg.seed, world.model);
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.iterations = cfg.iterations;
  t.seed = cfg.seed;
  t.alpha = cfg.alpha;
  t.eta = cfg.eta;
  t.monotone = cfg.monotone;
  t.pricing = cfg.pricing;
  t.pricing_cfg = cfg.pricing_cfg;
  return t;
}

int cmd_train(const RunConfig& cfg) {
  World world = make_world(cfg);
  TripDataset data = dataset_for(cfg, world);
  ResampledTripSource source(data, world.grid, world.model, cfg.seed, world.model.price_per_mile);

  TrainResult result = train(world, source, train_config(cfg));

  auto series = open_out(cfg, "revenue_series.csv");
  write_revenue_series_csv(series, result.revenue_series);
  result.table.save((fs::path(cfg.out_dir) / "value_table.evvt").string());
  auto table_csv = open_out(cfg, "value_table.csv");
  result.table.export_csv(table_csv, world.grid);

  EvalConfig ev;
  ev.episodes = cfg.episodes;
  ev.seed = cfg.seed;
  ev.policy = PolicyKind::Vfa;
  EvalResult eval = evaluate(world, &result.table, source, ev);
  auto epochs = open_out(cfg, "metrics.csv");
  write_epoch_csv(epochs, eval.mean);
  auto summary = open_out(cfg, "summary.json");
  write_summary_json(summary, eval.mean, world.fleet_size, eval.mean.revenue);
  std::cout << "trained " << cfg.iterations << " iterations, eval revenue "
            << format_money(eval.mean.revenue) << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  World world = make_world(cfg);
  TripDataset data = dataset_for(cfg, world);
  ResampledTripSource source(data, world.grid, world.model, cfg.seed, world.model.price_per_mile);

  std::optional<ValueTable> table;
  if (cfg.policy == PolicyKind::Vfa) {
    if (cfg.table_file.empty()) {
      // No snapshot given: train in place first.
      TrainResult result = train(world, source, train_config(cfg));
      table.emplace(std::move(result.table));
    } else {
      table.emplace(ValueTable::load(cfg.table_file, world.tree));
    }
  }

  EvalConfig ev;
  ev.episodes = cfg.episodes;
  ev.seed = cfg.seed;
  ev.policy = cfg.policy;
  ev.myopic_threshold = cfg.myopic_threshold;
  ev.pricing = cfg.pricing;
  ev.pricing_cfg = cfg.pricing_cfg;
  EvalResult eval = evaluate(world, table ? &*table : nullptr, source, ev);

  auto epochs = open_out(cfg, "metrics.csv");
  write_epoch_csv(epochs, eval.mean);
  auto summary = open_out(cfg, "summary.json");
  write_summary_json(summary, eval.mean, world.fleet_size, eval.mean.revenue);
  if (cfg.pricing) {
    auto log = open_out(cfg, "price_log.csv");
    write_price_log_csv(log, eval.price_log);
    auto hist = open_out(cfg, "price_histogram.csv");
    write_price_histogram_csv(hist, eval.price_log, cfg.pricing_cfg.grid);
  }
  std::cout << "evaluated " << cfg.episodes << " episodes, mean revenue "
            << format_money(eval.mean.revenue) << ", coverage "
            << format_money(100.0 * eval.mean.coverage()) << "%\n";
  return 0;
}

int cmd_price_sim(const RunConfig& cfg) {
  PriceSimConfig sim;
  sim.seed = cfg.seed;
  sim.pricing = cfg.pricing_cfg;
  PriceSimResult result = run_price_sim(sim);
  auto hist = open_out(cfg, "price_histogram.csv");
  hist << "price,count\n";
  for (int m = 0; m < sim.pricing.grid.points; ++m)
    hist << format_money(sim.pricing.grid.at(m)) << ","
         << result.price_histogram[static_cast<size_t>(m)] << "\n";
  std::cout << "realized/offer " << format_money(result.realized_per_offer()) << ", oracle/offer "
            << format_money(result.oracle_per_offer()) << ", ratio "
            << format_money(result.realized_per_offer() / result.oracle_per_offer()) << "\n";
  return 0;
}

int cmd_economics(const RunConfig& cfg) {
  World base_world = make_world(cfg);
  TripDataset data = dataset_for(cfg, base_world);

  auto harness = [&](int fleet, int tier) {
    RunConfig cell_cfg = cfg;
    cell_cfg.fleet_size = fleet;
    cell_cfg.model.battery_range_miles = battery_range_miles(tier, cfg.economics);
    World world = make_world(cell_cfg);
    ResampledTripSource source(data, world.grid, world.model, cfg.seed,
                               world.model.price_per_mile);
    TrainConfig tc = train_config(cell_cfg);
    tc.iterations = cfg.sweep_train_iterations;
    TrainResult trained = train(world, source, tc);
    EvalConfig ev;
    ev.episodes = cfg.sweep_episodes;
    ev.seed = cfg.seed;
    ev.policy = PolicyKind::Vfa;
    ev.parallel = false;  // cells already run in parallel
    return evaluate(world, &trained.table, source, ev).mean.revenue;
  };

  auto surface = sweep(cfg.fleet_sizes, cfg.tiers, harness, cfg.economics, true);
  auto out = open_out(cfg, "profit_surface.csv");
  write_surface_csv(out, surface);
  for (const auto& [fleet, tier] : optimal_tiers(surface))
    std::cout << "fleet " << fleet << ": best tier " << tier << " ("
              << format_money(battery_range_miles(tier, cfg.economics)) << " mi)\n";
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  World world = make_world(cfg);
  TripDataset data = synth_trips(world.grid, SynthProfile::tri_peak_default(world.grid),
                                 cfg.synth_total, cfg.seed, world.model);
  auto out = open_out(cfg, "trips.csv");
  save_trips_csv(out, data, world.grid);
  std::cout << "wrote " << data.count() << " trips (mean distance "
            << format_money(data.mean_distance) << " mi)\n";
  return 0;
}

int cmd_oracle(const RunConfig& cfg) {
  OracleInstance inst{ZoneGrid::full(4, 4, cfg.zone_width_miles), cfg.model, {}};
  inst.model.horizon_epochs = 10;
  inst.model.battery_levels = 4;
  inst.model.day_start_epoch = 0;
  Rng rng(Rng::derive(cfg.seed, 0x0dc1));
  for (int i = 0; i < 8; ++i) {
    TripRequest trip;
    trip.origin = inst.grid.valid_zones()[rng.next_below(16)];
    do {
      trip.destination = inst.grid.valid_zones()[rng.next_below(16)];
    } while (trip.destination == trip.origin);
    trip.request_epoch = static_cast<int>(rng.next_below(9));
    trip.distance_miles = inst.grid.distance(trip.origin, trip.destination);
    trip.price_per_mile = inst.model.price_per_mile;
    inst.trips.push_back(trip);
  }
  DpTable table = exact_dp(inst);
  std::cout << "single-car optimal values, " << inst.trips.size() << " deterministic trips\n";
  for (int t = 0; t < inst.model.horizon_epochs; ++t) {
    std::cout << "t=" << t << "\n";
    for (ZoneId z : inst.grid.valid_zones()) {
      std::cout << "  zone " << z << ":";
      for (int l = 0; l < inst.model.battery_levels; ++l)
        std::cout << " " << format_money(table.at(t, z, l));
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV ride-sharing fleet simulator and dispatch optimizer"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CliOptions opt;
  app.add_option("--config", opt.config_path, "configuration file");
  app.add_option("--seed", opt.seed, "run seed")->each([&](const std::string&) {
    opt.seed_set = true;
  });
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--policy", opt.policy, "myopic or vfa");
  app.add_flag("--no-hier-agg", opt.no_hier, "disable hierarchical aggregation");
  app.add_flag("--no-monotone", opt.no_monotone, "disable monotone projections");
  app.add_flag("--pricing", opt.pricing, "enable surge pricing");

  auto* train_cmd = app.add_subcommand("train", "run the ADP training loop");
  auto* eval_cmd = app.add_subcommand("evaluate", "run a frozen policy");
  auto* price_cmd = app.add_subcommand("price-sim", "standalone pricing learner benchmark");
  auto* econ_cmd = app.add_subcommand("economics", "fleet size / battery tier profit sweep");
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic trip dataset");
  auto* oracle_cmd = app.add_subcommand("oracle", "print exact single-car DP tables");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = effective_config(opt);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg);
    if (price_cmd->parsed()) return cmd_price_sim(cfg);
    if (econ_cmd->parsed()) return cmd_economics(cfg);
    if (synth_cmd->parsed()) return cmd_synth(cfg);
    if (oracle_cmd->parsed()) return cmd_oracle(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
