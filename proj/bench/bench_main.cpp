// Compares the serial reference kernels against the OpenMP ones: arc building
// per epoch and whole evaluation episodes.
#include <chrono>
#include <cstdio>

#include "evfleet/adp.hpp"
#include "evfleet/assignment.hpp"
#include "evfleet/simio.hpp"

using namespace evfleet;
namespace chrono = std::chrono;

namespace {

double ms_since(chrono::steady_clock::time_point start) {
  return chrono::duration<double, std::milli>(chrono::steady_clock::now() - start).count();
}

}  // namespace

int main() {
  RunConfig cfg;
  cfg.grid_width = 30;
  cfg.grid_height = 30;
  cfg.fleet_size = 300;
  cfg.synth_total = 12000;
  cfg.iterations = 8;
  World world = make_world(cfg);
  TripDataset data = synth_trips(world.grid, SynthProfile::tri_peak_default(world.grid),
                                 cfg.synth_total, 7, world.model);
  ResampledTripSource source(data, world.grid, world.model, 7, world.model.price_per_mile);

  // A trained-ish table so vfa arc rewards hit the query path.
  TrainConfig tc;
  tc.iterations = cfg.iterations;
  tc.seed = 7;
  TrainResult trained = train(world, source, tc);

  auto day = source.sample_day(999);
  FleetState state = initial_state(world, 42);
  apply_exogenous(state, day[30], {}, 30);

  PolicyMode mode;
  mode.kind = ObjectiveKind::Vfa;
  mode.table = &trained.table;

  const int reps = 200;
  auto t0 = chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i)
    (void)build_problem_serial(state, 30, world.model, world.grid, mode);
  double serial_ms = ms_since(t0) / reps;

  t0 = chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i)
    (void)build_problem(state, 30, world.model, world.grid, mode, true);
  double parallel_ms = ms_since(t0) / reps;

  std::printf("arc build      serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", serial_ms,
              parallel_ms, serial_ms / parallel_ms);

  EvalConfig ev;
  ev.episodes = 8;
  ev.seed = 11;
  ev.policy = PolicyKind::Vfa;

  ev.parallel = false;
  t0 = chrono::steady_clock::now();
  (void)evaluate(world, &trained.table, source, ev);
  double eval_serial = ms_since(t0);

  ev.parallel = true;
  t0 = chrono::steady_clock::now();
  (void)evaluate(world, &trained.table, source, ev);
  double eval_parallel = ms_since(t0);

  std::printf("evaluate x%d    serial %8.1f ms   openmp %8.1f ms   speedup %.2fx\n", ev.episodes,
              eval_serial, eval_parallel, eval_serial / eval_parallel);
  return 0;
}
