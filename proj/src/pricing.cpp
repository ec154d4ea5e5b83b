#include "evfleet/pricing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evfleet {

namespace {

double sigma(double h) { return 1.0 / (1.0 + std::exp(-h)); }

// log(sigma(h)) without overflow for large |h|
double log_sigma(double h) {
  if (h > 0) return -std::log1p(std::exp(-h));
  return h - std::log1p(std::exp(h));
}

void fill_covariates(const PriceContext& c, LogisticCurve::Role role, double* x) {
  x[0] = 1.0;
  x[1] = c.t_frac;
  x[2] = c.price;
  if (role == LogisticCurve::Role::Operator) {
    x[3] = c.n_vehicles;
    x[4] = c.n_trips;
  }
}

}  // namespace

double LogisticCurve::linear(const PriceContext& c) const {
  double x[5];
  fill_covariates(c, role, x);
  double h = 0.0;
  for (int i = 0; i < dim(); ++i) h += coef[static_cast<size_t>(i)] * x[i];
  return h;
}

double LogisticCurve::accept_prob(const PriceContext& c) const { return sigma(linear(c)); }

double LogisticCurve::log_accept(const PriceContext& c, int y) const {
  return log_sigma(y * linear(c));
}

void PriceGrid::throw_invalid() { throw std::invalid_argument("PriceGrid: needs >= 2 points"); }

LogisticCurve sample_curve(LogisticCurve::Role role, const PricingConfig& cfg, Rng& rng) {
  LogisticCurve curve;
  curve.role = role;
  double mid = rng.next_uniform(cfg.mid_lo, cfg.mid_hi);
  double slope = role == LogisticCurve::Role::Rider
                     ? rng.next_uniform(cfg.rider_slope_lo, cfg.rider_slope_hi)
                     : rng.next_uniform(cfg.operator_slope_lo, cfg.operator_slope_hi);
  double time_coef = rng.next_uniform(-cfg.time_coef_range, cfg.time_coef_range);
  curve.coef[1] = time_coef;
  curve.coef[2] = slope;
  if (role == LogisticCurve::Role::Operator) {
    curve.coef[3] = rng.next_uniform(0.0, cfg.count_coef_range);   // more cars, more accepts
    curve.coef[4] = rng.next_uniform(-cfg.count_coef_range, 0.0);  // more rivals, fewer
  }
  // Center the transition at `mid` for mid-day covariates.
  curve.coef[0] = -slope * mid - time_coef * 0.5;
  return curve;
}

ZoneBelief make_belief(const PricingConfig& cfg, Rng& rng, const LogisticCurve* true_operator,
                       const LogisticCurve* true_rider) {
  std::vector<LogisticCurve> operators, riders;
  for (int i = 0; i < cfg.curves_per_side; ++i)
    operators.push_back(sample_curve(LogisticCurve::Role::Operator, cfg, rng));
  for (int i = 0; i < cfg.curves_per_side; ++i)
    riders.push_back(sample_curve(LogisticCurve::Role::Rider, cfg, rng));
  if (true_operator) operators[0] = *true_operator;
  if (true_rider) riders[0] = *true_rider;

  ZoneBelief belief;
  for (const LogisticCurve& op : operators)
    for (const LogisticCurve& rd : riders) belief.candidates.emplace_back(op, rd);
  belief.posterior.assign(belief.candidates.size(),
                          1.0 / static_cast<double>(belief.candidates.size()));
  return belief;
}

double recommend_price(const ZoneBelief& belief, const PriceContext& base,
                       const PriceGrid& grid) {
  if (grid.points < 2) PriceGrid::throw_invalid();
  if (belief.candidates.empty())
    throw std::invalid_argument("recommend_price: empty candidate set");
  double best_price = grid.at(0);
  double best_util = -1.0;
  for (int m = 0; m < grid.points; ++m) {
    PriceContext c = base;
    c.price = grid.at(m);
    double util = 0.0;
    for (int k = 0; k < belief.K(); ++k) {
      const auto& [op, rd] = belief.candidates[static_cast<size_t>(k)];
      util += belief.posterior[static_cast<size_t>(k)] * op.accept_prob(c) * rd.accept_prob(c);
    }
    util *= c.price;
    if (util > best_util) {  // strict: ties resolve to the lower price
      best_util = util;
      best_price = c.price;
    }
  }
  return best_price;
}

bool rider_response(const LogisticCurve& true_curve, const PriceContext& context, Rng& rng) {
  if (true_curve.role != LogisticCurve::Role::Rider)
    throw std::invalid_argument("rider_response: needs a rider curve");
  return rng.next_bernoulli(true_curve.accept_prob(context));
}

void posterior_update(ZoneBelief& belief, const PricingObservation& obs) {
  const int K = belief.K();
  std::vector<double> logq(static_cast<size_t>(K));
  double max_logq = -1e300;
  for (int k = 0; k < K; ++k) {
    double q = belief.posterior[static_cast<size_t>(k)];
    double lq = q > 0.0 ? std::log(q) : -1e300;
    const auto& [op, rd] = belief.candidates[static_cast<size_t>(k)];
    lq += rd.log_accept(obs.context, obs.y_rider);
    if (obs.has_operator) lq += op.log_accept(obs.context, obs.y_operator);
    logq[static_cast<size_t>(k)] = lq;
    max_logq = std::max(max_logq, lq);
  }
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    double w = std::exp(logq[static_cast<size_t>(k)] - max_logq);
    belief.posterior[static_cast<size_t>(k)] = w;
    total += w;
  }
  for (double& q : belief.posterior) q /= total;
  belief.observations.push_back(obs);
}

LogisticCurve fit_logistic(const std::vector<PricingObservation>& rows, LogisticCurve::Role role,
                           const PricingConfig& cfg) {
  LogisticCurve curve;
  curve.role = role;
  const int d = curve.dim();
  std::vector<const PricingObservation*> usable;
  for (const PricingObservation& row : rows) {
    if (role == LogisticCurve::Role::Operator && !row.has_operator) continue;
    usable.push_back(&row);
  }
  if (usable.empty()) return curve;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(usable.size()), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(usable.size()));
  for (size_t i = 0; i < usable.size(); ++i) {
    double x[5];
    fill_covariates(usable[i]->context, role, x);
    for (int j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), j) = x[j];
    int resp = role == LogisticCurve::Role::Operator ? usable[i]->y_operator : usable[i]->y_rider;
    y(static_cast<Eigen::Index>(i)) = resp > 0 ? 1.0 : 0.0;
  }

  for (int iter = 0; iter < cfg.irls_max_iter; ++iter) {
    Eigen::VectorXd h = X * beta;
    Eigen::VectorXd p = h.unaryExpr([](double v) { return sigma(v); });
    Eigen::VectorXd grad = X.transpose() * (y - p);
    if (grad.norm() < cfg.irls_tol) break;
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
    hess.diagonal().array() += 1e-8;  // ridge keeps separation solvable
    beta += hess.ldlt().solve(grad);
    for (int j = 0; j < d; ++j)
      beta(j) = std::clamp(beta(j), -cfg.coef_clamp, cfg.coef_clamp);
  }
  for (int j = 0; j < d; ++j) curve.coef[static_cast<size_t>(j)] = beta(j);
  return curve;
}

void resample(ZoneBelief& belief, const PricingConfig& cfg, Rng& rng) {
  const auto& log = belief.observations;
  if (static_cast<int>(log.size()) < cfg.min_resample_obs) return;
  const int K = belief.K();
  const size_t m = log.size();

  std::vector<double> loglik(static_cast<size_t>(K));
  std::vector<PricingObservation> sample(m);
  for (int k = 0; k < K; ++k) {
    for (size_t i = 0; i < m; ++i) sample[i] = log[rng.next_below(m)];
    LogisticCurve op = fit_logistic(sample, LogisticCurve::Role::Operator, cfg);
    LogisticCurve rd = fit_logistic(sample, LogisticCurve::Role::Rider, cfg);
    double ll = 0.0;
    for (const PricingObservation& obs : sample) {
      ll += rd.log_accept(obs.context, obs.y_rider);
      if (obs.has_operator) ll += op.log_accept(obs.context, obs.y_operator);
    }
    belief.candidates[static_cast<size_t>(k)] = {op, rd};
    loglik[static_cast<size_t>(k)] = ll;
  }
  double max_ll = *std::max_element(loglik.begin(), loglik.end());
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    double w = std::exp(loglik[static_cast<size_t>(k)] - max_ll);
    belief.posterior[static_cast<size_t>(k)] = w;
    total += w;
  }
  for (double& q : belief.posterior) q /= total;
}

PriceSimResult run_price_sim(const PriceSimConfig& cfg) {
  Rng rng(Rng::derive(cfg.seed, 0x9813));
  PriceSimResult result;
  result.price_histogram.assign(static_cast<size_t>(cfg.pricing.grid.points), 0);

  struct Zone {
    LogisticCurve true_operator;
    LogisticCurve true_rider;
    ZoneBelief belief;
  };
  std::vector<Zone> zones;
  for (int z = 0; z < cfg.zones; ++z) {
    Zone zone;
    zone.true_operator = sample_curve(LogisticCurve::Role::Operator, cfg.pricing, rng);
    zone.true_rider = sample_curve(LogisticCurve::Role::Rider, cfg.pricing, rng);
    zone.belief = make_belief(cfg.pricing, rng,
                              cfg.truth_in_candidates ? &zone.true_operator : nullptr,
                              cfg.truth_in_candidates ? &zone.true_rider : nullptr);
    zones.push_back(std::move(zone));
  }

  auto oracle_expected = [&](const Zone& zone, const PriceContext& base, double* best_price) {
    double best = -1.0;
    for (int m = 0; m < cfg.pricing.grid.points; ++m) {
      PriceContext c = base;
      c.price = cfg.pricing.grid.at(m);
      double util =
          c.price * zone.true_operator.accept_prob(c) * zone.true_rider.accept_prob(c);
      if (util > best) {
        best = util;
        if (best_price) *best_price = c.price;
      }
    }
    return best;
  };

  int measure_from = cfg.offers_per_zone - cfg.measure_tail;
  for (int step = 0; step < cfg.offers_per_zone; ++step) {
    for (int z = 0; z < cfg.zones; ++z) {
      Zone& zone = zones[static_cast<size_t>(z)];
      PriceContext base;
      base.t_frac = rng.next_double();
      base.n_vehicles = static_cast<double>(rng.next_below(20));
      base.n_trips = static_cast<double>(rng.next_below(20));

      double price = recommend_price(zone.belief, base, cfg.pricing.grid);
      PriceContext ctx = base;
      ctx.price = price;

      bool rider_ok = rng.next_bernoulli(zone.true_rider.accept_prob(ctx));
      PricingObservation obs;
      obs.context = ctx;
      obs.y_rider = rider_ok ? 1 : -1;
      bool operator_ok = false;
      if (rider_ok) {
        operator_ok = rng.next_bernoulli(zone.true_operator.accept_prob(ctx));
        obs.has_operator = true;
        obs.y_operator = operator_ok ? 1 : -1;
      }
      posterior_update(zone.belief, obs);

      double sum = 0.0, min_q = 0.0;
      for (double q : zone.belief.posterior) {
        sum += q;
        min_q = std::min(min_q, q);
      }
      result.max_posterior_error = std::max(result.max_posterior_error, std::abs(sum - 1.0));
      result.max_posterior_error = std::max(result.max_posterior_error, -min_q);

      for (int m = 0; m < cfg.pricing.grid.points; ++m)
        if (std::abs(cfg.pricing.grid.at(m) - price) < 1e-9)
          result.price_histogram[static_cast<size_t>(m)] += 1;

      if (step >= measure_from) {
        result.measured_offers += 1;
        if (rider_ok && operator_ok) result.realized_revenue += price;
        result.oracle_revenue += oracle_expected(zone, base, nullptr);
      }
      if ((step + 1) % cfg.resample_every == 0) resample(zone.belief, cfg.pricing, rng);
    }
  }
  return result;
}

}  // namespace evfleet
