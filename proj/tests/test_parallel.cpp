// The OpenMP kernels must be drop-in equivalents of the serial references.
#include <doctest.h>

#include "evfleet/adp.hpp"
#include "evfleet/assignment.hpp"
#include "evfleet/simio.hpp"

using namespace evfleet;

namespace {

World bench_world() {
  RunConfig cfg;
  cfg.grid_width = 12;
  cfg.grid_height = 12;
  cfg.fleet_size = 30;
  cfg.model.horizon_epochs = 40;
  cfg.model.day_start_epoch = 2;
  return make_world(cfg);
}

}  // namespace

TEST_CASE("parallel arc building matches the serial reference") {
  World world = bench_world();
  TripDataset data = synth_trips(world.grid, SynthProfile::tri_peak_default(world.grid), 600, 11,
                                 world.model);
  ResampledTripSource source(data, world.grid, world.model, 11, 1.0);

  TrainConfig tc;
  tc.iterations = 3;
  tc.seed = 2;
  TrainResult trained = train(world, source, tc);

  auto day = source.sample_day(50);
  for (int t : {5, 12, 20, 33}) {
    FleetState state = initial_state(world, 1000 + static_cast<uint64_t>(t));
    apply_exogenous(state, day[static_cast<size_t>(t)], {}, t);
    PolicyMode mode{ObjectiveKind::Vfa, &trained.table, std::nullopt};

    AssignmentProblem serial = build_problem_serial(state, t, world.model, world.grid, mode);
    AssignmentProblem parallel = build_problem(state, t, world.model, world.grid, mode, true);

    REQUIRE(serial.arcs.size() == parallel.arcs.size());
    REQUIRE(serial.car_classes.size() == parallel.car_classes.size());
    for (size_t ai = 0; ai < serial.arcs.size(); ++ai) {
      CHECK(serial.arcs[ai].car_class == parallel.arcs[ai].car_class);
      CHECK(serial.arcs[ai].trip_class == parallel.arcs[ai].trip_class);
      CHECK(serial.arcs[ai].reward_micro == parallel.arcs[ai].reward_micro);
      CHECK(serial.arcs[ai].decision.kind == parallel.arcs[ai].decision.kind);
      CHECK(serial.arcs[ai].decision.result_available_at ==
            parallel.arcs[ai].decision.result_available_at);
    }
    CHECK(debug_dump(serial, solve(serial)) == debug_dump(parallel, solve(parallel)));
  }
}

TEST_CASE("parallel evaluation matches the serial reference") {
  World world = bench_world();
  TripDataset data = synth_trips(world.grid, SynthProfile::tri_peak_default(world.grid), 500, 13,
                                 world.model);
  ResampledTripSource source(data, world.grid, world.model, 13, 1.0);

  TrainConfig tc;
  tc.iterations = 4;
  tc.seed = 3;
  TrainResult trained = train(world, source, tc);

  EvalConfig ev;
  ev.episodes = 6;
  ev.seed = 17;
  ev.policy = PolicyKind::Vfa;

  ev.parallel = false;
  EvalResult serial = evaluate(world, &trained.table, source, ev);
  ev.parallel = true;
  EvalResult parallel = evaluate(world, &trained.table, source, ev);

  REQUIRE(serial.episodes.size() == parallel.episodes.size());
  CHECK(serial.mean.revenue == parallel.mean.revenue);
  for (size_t e = 0; e < serial.episodes.size(); ++e) {
    CHECK(serial.episodes[e].revenue == parallel.episodes[e].revenue);
    CHECK(serial.episodes[e].served == parallel.episodes[e].served);
    for (size_t t = 0; t < serial.episodes[e].epochs.size(); ++t) {
      CHECK(serial.episodes[e].epochs[t].recharging == parallel.episodes[e].epochs[t].recharging);
      CHECK(serial.episodes[e].epochs[t].revenue == parallel.episodes[e].epochs[t].revenue);
    }
  }
}
