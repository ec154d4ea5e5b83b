#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "evfleet/rng.hpp"
#include "evfleet/spatial.hpp"

namespace evfleet {

// Acceptance model covariates. Operator: [1, t, p, n_vehicles, n_trips];
// rider: [1, t, p]. t is the fraction of the horizon elapsed.
struct PriceContext {
  double t_frac = 0.0;
  double price = 0.0;
  double n_vehicles = 0.0;
  double n_trips = 0.0;
};

struct LogisticCurve {
  enum class Role { Operator, Rider };
  Role role = Role::Rider;
  std::array<double, 5> coef{};  // rider uses the first 3

  int dim() const { return role == Role::Operator ? 5 : 3; }
  double linear(const PriceContext& c) const;
  double accept_prob(const PriceContext& c) const;
  double log_accept(const PriceContext& c, int y) const;  // log sigma(y * h), y in {-1,+1}
};

struct PriceGrid {
  double min_price = 0.5;
  double max_price = 2.0;
  int points = 16;

  double at(int m) const {
    if (points < 2) throw_invalid();
    return min_price + (max_price - min_price) * m / (points - 1);
  }
  [[noreturn]] static void throw_invalid();
};

struct PricingObservation {
  PriceContext context;
  int y_rider = 0;     // +-1
  int y_operator = 0;  // +-1, meaningful only when has_operator
  bool has_operator = false;
};

// Per-zone sampled belief over K (operator, rider) curve pairs.
struct ZoneBelief {
  std::vector<std::pair<LogisticCurve, LogisticCurve>> candidates;  // (operator, rider)
  std::vector<double> posterior;
  std::vector<PricingObservation> observations;

  int K() const { return static_cast<int>(candidates.size()); }
};

struct PricingConfig {
  PriceGrid grid;
  int curves_per_side = 5;  // K = side^2 candidates
  int min_resample_obs = 30;
  double coef_clamp = 50.0;
  int irls_max_iter = 50;
  double irls_tol = 1e-8;
  // Candidate generator ranges: price midpoints and slopes for both sides;
  // transitions land inside the price grid.
  double mid_lo = 0.7, mid_hi = 1.7;
  double rider_slope_lo = -8.0, rider_slope_hi = -2.0;
  double operator_slope_lo = 2.0, operator_slope_hi = 8.0;
  double time_coef_range = 0.5;
  double count_coef_range = 0.05;
};

LogisticCurve sample_curve(LogisticCurve::Role role, const PricingConfig& cfg, Rng& rng);

// Cross `curves_per_side` operator and rider curves into K pairs with a
// uniform prior. When `true_rider`/`true_operator` are given they replace the
// first sampled curve on their side (truth inside the candidate set).
ZoneBelief make_belief(const PricingConfig& cfg, Rng& rng,
                       const LogisticCurve* true_operator = nullptr,
                       const LogisticCurve* true_rider = nullptr);

// Exploitation price: grid argmax of p * sum_k q_k * f_o * f_r, lowest price
// on ties.
double recommend_price(const ZoneBelief& belief, const PriceContext& covariates_without_price,
                       const PriceGrid& grid);

bool rider_response(const LogisticCurve& true_curve, const PriceContext& context, Rng& rng);

// Bayes step over the candidate set; operator likelihood only enters when an
// operator response exists. Performed in log space, never divides by zero.
void posterior_update(ZoneBelief& belief, const PricingObservation& obs);

// Maximum-likelihood logistic fit (IRLS with clamped coefficients).
LogisticCurve fit_logistic(const std::vector<PricingObservation>& rows, LogisticCurve::Role role,
                           const PricingConfig& cfg);

// Bootstrap-aggregation refresh: K bootstrap datasets, K (operator, rider)
// fits, posterior reset from each candidate's likelihood on its own sample.
// No-op below the minimum observation count.
void resample(ZoneBelief& belief, const PricingConfig& cfg, Rng& rng);

// Standalone learner benchmark: abstract zones with hidden true operator and
// rider curves, Bernoulli responses on both sides, resampling every
// `resample_every` offers per zone. Tracks realized revenue against the
// price an oracle holding the true curves would post.
struct PriceSimConfig {
  int zones = 4;
  int offers_per_zone = 8000;
  int measure_tail = 3000;  // offers counted after learning settles
  int resample_every = 110;
  uint64_t seed = 1;
  bool truth_in_candidates = true;
  PricingConfig pricing;
};

struct PriceSimResult {
  double realized_revenue = 0.0;        // over measured offers, all zones
  double oracle_revenue = 0.0;          // expected revenue of oracle prices, same offers
  int measured_offers = 0;
  double max_posterior_error = 0.0;     // worst |sum q - 1| or negative mass seen
  std::vector<int> price_histogram;     // over the grid, all offers
  double realized_per_offer() const {
    return measured_offers > 0 ? realized_revenue / measured_offers : 0.0;
  }
  double oracle_per_offer() const {
    return measured_offers > 0 ? oracle_revenue / measured_offers : 0.0;
  }
};

PriceSimResult run_price_sim(const PriceSimConfig& cfg);

}  // namespace evfleet
