#include "evfleet/adp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace evfleet {

PricingSim::PricingSim(const World& world, PricingConfig cfg, uint64_t seed,
                       bool truth_in_candidates)
    : cfg_(cfg), rng_(Rng::derive(seed, 0x9dce)) {
  int zones = world.grid.valid_count();
  beliefs_.reserve(static_cast<size_t>(zones));
  true_rider_.reserve(static_cast<size_t>(zones));
  for (int i = 0; i < zones; ++i) {
    LogisticCurve truth = sample_curve(LogisticCurve::Role::Rider, cfg_, rng_);
    true_rider_.push_back(truth);
    beliefs_.push_back(
        make_belief(cfg_, rng_, nullptr, truth_in_candidates ? &truth : nullptr));
  }
}

double PricingSim::zone_price(int zone_index, const PriceContext& base) {
  return recommend_price(beliefs_[static_cast<size_t>(zone_index)], base, cfg_.grid);
}

bool PricingSim::rider_accepts(int zone_index, const PriceContext& context) {
  return rider_response(true_rider_[static_cast<size_t>(zone_index)], context, rng_);
}

void PricingSim::observe(int zone_index, const PricingObservation& obs) {
  ZoneBelief& belief = beliefs_[static_cast<size_t>(zone_index)];
  posterior_update(belief, obs);
  double sum = 0.0, min_q = 0.0;
  for (double q : belief.posterior) {
    sum += q;
    min_q = std::min(min_q, q);
  }
  max_posterior_error_ = std::max(max_posterior_error_, std::abs(sum - 1.0));
  max_posterior_error_ = std::max(max_posterior_error_, -min_q);
}

void PricingSim::end_of_day_resample() {
  for (ZoneBelief& belief : beliefs_) resample(belief, cfg_, rng_);
}

FleetState initial_state(const World& world, uint64_t placement_seed) {
  Rng rng(Rng::derive(placement_seed, 0xcab5));
  FleetState state;
  state.cars.reserve(static_cast<size_t>(world.fleet_size));
  const auto& zones = world.grid.valid_zones();
  if (world.fleet_size > 0 && zones.empty())
    throw std::invalid_argument("initial_state: no valid zones to place cars");
  for (int i = 0; i < world.fleet_size; ++i) {
    CarState car;
    car.attr.zone = zones[rng.next_below(zones.size())];
    car.attr.battery = world.model.battery_levels - 1;  // fleet starts fully charged
    car.available_at = 0;
    car.status = CarStatus::Idle;
    state.cars.push_back(car);
  }
  return state;
}

std::vector<std::pair<CarAttribute, double>> dual_harvest(const AssignmentProblem& problem,
                                                          const AssignmentSolution& solution) {
  std::vector<std::pair<CarAttribute, double>> out;
  for (size_t ci = 0; ci < problem.car_classes.size(); ++ci) {
    if (problem.car_classes[ci].count <= 0) continue;
    out.emplace_back(problem.car_classes[ci].attr, from_micro(solution.car_duals[ci]));
  }
  return out;
}

namespace {

CarStatus status_for(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::Serve: return CarStatus::OnTrip;
    case DecisionKind::Reposition: return CarStatus::Repositioning;
    case DecisionKind::Recharge: return CarStatus::Recharging;
    case DecisionKind::Stay: return CarStatus::Idle;
  }
  return CarStatus::Idle;
}

}  // namespace

EpisodeMetrics run_episode(const World& world, ValueTable* table, bool training,
                           PolicyKind policy, double myopic_threshold,
                           const std::vector<std::vector<TripRequest>>& day,
                           uint64_t placement_seed, PricingSim* pricing) {
  const ModelConfig& model = world.model;
  const int T = model.horizon_epochs;
  if (static_cast<int>(day.size()) != T)
    throw std::invalid_argument("run_episode: day length does not match horizon");

  FleetState state = initial_state(world, placement_seed);
  EpisodeMetrics metrics;
  metrics.epochs.resize(static_cast<size_t>(T));

  PolicyMode mode;
  if (policy == PolicyKind::Vfa) {
    mode.kind = ObjectiveKind::Vfa;
    mode.table = table;
    if (!table) throw std::invalid_argument("run_episode: vfa policy requires a table");
  } else {
    mode.kind = ObjectiveKind::Myopic;
    mode.recharge_threshold = myopic_threshold;
  }

  for (int t = 0; t < T; ++t) {
    EpochRow& row = metrics.epochs[static_cast<size_t>(t)];
    std::vector<TripRequest> offered = day[static_cast<size_t>(t)];
    row.requested = static_cast<int>(offered.size());

    // Surge pricing: one price per origin zone, rider responses filter demand.
    std::vector<TripRequest> accepted;
    std::vector<std::pair<int, PricingObservation>> pending;  // zone index, obs
    std::vector<int> pending_trip_class;                      // parallel: -1 for rejected
    if (pricing && !offered.empty()) {
      std::vector<int> cars_in_zone(static_cast<size_t>(world.grid.cell_count()), 0);
      for (const CarState& car : state.cars)
        if (car.available_at <= t) cars_in_zone[static_cast<size_t>(car.attr.zone)] += 1;
      std::map<ZoneId, int> trips_in_zone;
      for (const TripRequest& trip : offered) trips_in_zone[trip.origin] += 1;
      std::map<ZoneId, double> price_of_zone;
      for (const auto& [zone, n_trips] : trips_in_zone) {
        PriceContext base;
        base.t_frac = static_cast<double>(t) / T;
        base.n_vehicles = cars_in_zone[static_cast<size_t>(zone)];
        base.n_trips = n_trips;
        int zi = world.tree->area_of(0, zone);
        price_of_zone[zone] = pricing->zone_price(zi, base);
      }
      for (TripRequest& trip : offered) {
        int zi = world.tree->area_of(0, trip.origin);
        PriceContext ctx;
        ctx.t_frac = static_cast<double>(t) / T;
        ctx.price = price_of_zone[trip.origin];
        ctx.n_vehicles = cars_in_zone[static_cast<size_t>(trip.origin)];
        ctx.n_trips = trips_in_zone[trip.origin];
        trip.price_per_mile = ctx.price;
        bool accept = pricing->rider_accepts(zi, ctx);
        PricingObservation obs;
        obs.context = ctx;
        obs.y_rider = accept ? 1 : -1;
        if (accept) {
          pending.emplace_back(zi, obs);
          pending_trip_class.push_back(static_cast<int>(accepted.size()));
          accepted.push_back(trip);
        } else {
          row.price_rejected += 1;
          pending.emplace_back(zi, obs);
          pending_trip_class.push_back(-1);
        }
        pricing->log().push_back(
            {t, trip.origin, ctx.price, obs.y_rider, 0});
      }
    } else {
      accepted = std::move(offered);
    }

    apply_exogenous(state, std::move(accepted), {}, t);

    AssignmentProblem problem = build_problem(state, t, model, world.grid, mode);
    AssignmentSolution solution = solve(problem);

    if (training && table)
      for (const auto& [attr, dual] : dual_harvest(problem, solution))
        table->update(t, attr, dual);

    // Execute flows on concrete cars: assignable cars grouped per class in
    // index order, arcs consume them in problem order.
    std::vector<std::vector<int>> class_members(problem.car_classes.size());
    {
      std::map<std::pair<ZoneId, int>, int> class_of;
      for (size_t ci = 0; ci < problem.car_classes.size(); ++ci)
        class_of[{problem.car_classes[ci].attr.zone, problem.car_classes[ci].attr.battery}] =
            static_cast<int>(ci);
      for (int i = 0; i < static_cast<int>(state.cars.size()); ++i) {
        const CarState& car = state.cars[static_cast<size_t>(i)];
        if (car.available_at > t) continue;
        class_members[static_cast<size_t>(class_of.at({car.attr.zone, car.attr.battery}))]
            .push_back(i);
      }
    }
    std::vector<size_t> next_member(problem.car_classes.size(), 0);
    std::vector<int> served_of_class(problem.trip_classes.size(), 0);
    for (size_t ai = 0; ai < problem.arcs.size(); ++ai) {
      int flow = solution.flow[ai];
      if (flow == 0) continue;
      const ProblemArc& arc = problem.arcs[ai];
      auto& members = class_members[static_cast<size_t>(arc.car_class)];
      for (int f = 0; f < flow; ++f) {
        CarState& car = state.cars[static_cast<size_t>(members.at(
            next_member[static_cast<size_t>(arc.car_class)]++))];
        car.attr = arc.decision.result;
        car.available_at = arc.decision.result_available_at;
        car.status = status_for(arc.decision.kind);
        row.revenue += arc.decision.contribution;
      }
      if (arc.trip_class >= 0) {
        served_of_class[static_cast<size_t>(arc.trip_class)] += flow;
        row.served += flow;
      }
    }

    // Operator responses: served trips in a class answer +1, the rest -1.
    if (pricing) {
      std::vector<int> served_left = served_of_class;
      std::map<std::pair<ZoneId, ZoneId>, int> class_of_od;
      for (size_t bi = 0; bi < problem.trip_classes.size(); ++bi)
        class_of_od[{problem.trip_classes[bi].origin, problem.trip_classes[bi].destination}] =
            static_cast<int>(bi);
      for (size_t pi = 0; pi < pending.size(); ++pi) {
        auto& [zi, obs] = pending[pi];
        if (pending_trip_class[pi] >= 0) {
          const TripRequest& trip =
              state.trips[static_cast<size_t>(pending_trip_class[pi])];
          int bi = class_of_od.at({trip.origin, trip.destination});
          obs.has_operator = true;
          obs.y_operator = served_left[static_cast<size_t>(bi)] > 0 ? 1 : -1;
          if (served_left[static_cast<size_t>(bi)] > 0)
            served_left[static_cast<size_t>(bi)] -= 1;
        }
        pricing->observe(zi, obs);
      }
      // fill operator answers into the tail of the log
      size_t base = pricing->log().size() - pending.size();
      for (size_t pi = 0; pi < pending.size(); ++pi)
        pricing->log()[base + pi].y_operator =
            pending[pi].second.has_operator ? pending[pi].second.y_operator : 0;
    }

    for (const CarState& car : state.cars) {
      switch (car.status) {
        case CarStatus::Idle: row.staying += 1; break;
        case CarStatus::OnTrip: row.on_trip += 1; break;
        case CarStatus::Repositioning: row.repositioning += 1; break;
        case CarStatus::Recharging: row.recharging += 1; break;
      }
      row.fleet_battery_miles += car.attr.battery * model.miles_per_level();
    }
    metrics.revenue += row.revenue;
    metrics.requested += row.requested;
    metrics.served += row.served;
  }

  double car_epochs = static_cast<double>(world.fleet_size) * T;
  if (car_epochs > 0) {
    double on = 0, st = 0, rp = 0, rc = 0;
    for (const EpochRow& row : metrics.epochs) {
      on += row.on_trip;
      st += row.staying;
      rp += row.repositioning;
      rc += row.recharging;
    }
    metrics.pct_on_trip = 100.0 * on / car_epochs;
    metrics.pct_staying = 100.0 * st / car_epochs;
    metrics.pct_repositioning = 100.0 * rp / car_epochs;
    metrics.pct_recharging = 100.0 * rc / car_epochs;
  }
  return metrics;
}

TrainResult train(const World& world, const TripSource& trips, const TrainConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
  VfaConfig vfa_cfg;
  vfa_cfg.horizon = world.model.horizon_epochs;
  vfa_cfg.battery_levels = world.model.battery_levels;
  vfa_cfg.alpha = cfg.alpha;
  vfa_cfg.eta = cfg.eta;
  vfa_cfg.monotone = cfg.monotone;

  TrainResult result{ValueTable(world.tree, vfa_cfg), {}};
  result.revenue_series.reserve(static_cast<size_t>(cfg.iterations));

  std::optional<PricingSim> pricing;
  if (cfg.pricing) pricing.emplace(world, cfg.pricing_cfg, cfg.seed, false);

  for (int n = 1; n <= cfg.iterations; ++n) {
    auto day = trips.sample_day(static_cast<uint64_t>(n));
    EpisodeMetrics metrics =
        run_episode(world, &result.table, true, PolicyKind::Vfa, 0.0, day,
                    Rng::derive(cfg.seed, static_cast<uint64_t>(n)),
                    pricing ? &*pricing : nullptr);
    result.revenue_series.push_back(metrics.revenue);
    if (pricing) pricing->end_of_day_resample();
  }
  return result;
}

EvalResult evaluate(const World& world, const ValueTable* table, const TripSource& trips,
                    const EvalConfig& cfg) {
  EvalResult result;
  result.episodes.resize(static_cast<size_t>(cfg.episodes));
  const uint64_t path_base = 0x40000000ULL;  // away from training path ids

  if (cfg.pricing) {
    PricingSim pricing(world, cfg.pricing_cfg, cfg.seed, false);
    std::vector<EpisodeMetrics> kept;
    for (int e = 0; e < cfg.pricing_warmup_episodes + cfg.episodes; ++e) {
      auto day = trips.sample_day(path_base + static_cast<uint64_t>(e));
      EpisodeMetrics m =
          run_episode(world, const_cast<ValueTable*>(table), false, cfg.policy,
                      cfg.myopic_threshold, day,
                      Rng::derive(cfg.seed, 0xe0000 + static_cast<uint64_t>(e)), &pricing);
      pricing.end_of_day_resample();
      if (e >= cfg.pricing_warmup_episodes)
        result.episodes[static_cast<size_t>(e - cfg.pricing_warmup_episodes)] = m;
    }
    result.price_log = pricing.log();
  } else {
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int e = 0; e < cfg.episodes; ++e) {
      auto day = trips.sample_day(path_base + static_cast<uint64_t>(e));
      result.episodes[static_cast<size_t>(e)] =
          run_episode(world, const_cast<ValueTable*>(table), false, cfg.policy,
                      cfg.myopic_threshold, day,
                      Rng::derive(cfg.seed, 0xe0000 + static_cast<uint64_t>(e)), nullptr);
    }
  }

  // Mean across episodes (counts rounded to nearest).
  EpisodeMetrics& mean = result.mean;
  if (!result.episodes.empty()) {
    int T = static_cast<int>(result.episodes[0].epochs.size());
    mean.epochs.resize(static_cast<size_t>(T));
    double n = static_cast<double>(result.episodes.size());
    auto avg = [n](int sum) { return static_cast<int>(std::lround(sum / n)); };
    int requested = 0, served = 0;
    for (const EpisodeMetrics& m : result.episodes) {
      mean.revenue += m.revenue / n;
      requested += m.requested;
      served += m.served;
      mean.pct_on_trip += m.pct_on_trip / n;
      mean.pct_staying += m.pct_staying / n;
      mean.pct_repositioning += m.pct_repositioning / n;
      mean.pct_recharging += m.pct_recharging / n;
    }
    mean.requested = avg(requested);
    mean.served = avg(served);
    for (int t = 0; t < T; ++t) {
      int req = 0, srv = 0, rej = 0, on = 0, st = 0, rp = 0, rc = 0;
      EpochRow& dst = mean.epochs[static_cast<size_t>(t)];
      for (const EpisodeMetrics& m : result.episodes) {
        const EpochRow& src = m.epochs[static_cast<size_t>(t)];
        req += src.requested;
        srv += src.served;
        rej += src.price_rejected;
        on += src.on_trip;
        st += src.staying;
        rp += src.repositioning;
        rc += src.recharging;
        dst.fleet_battery_miles += src.fleet_battery_miles / n;
        dst.revenue += src.revenue / n;
      }
      dst.requested = avg(req);
      dst.served = avg(srv);
      dst.price_rejected = avg(rej);
      dst.on_trip = avg(on);
      dst.staying = avg(st);
      dst.repositioning = avg(rp);
      dst.recharging = avg(rc);
    }
  }
  return result;
}

}  // namespace evfleet
