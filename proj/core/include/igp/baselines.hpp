#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "igp/common.hpp"
#include "igp/svgp.hpp"

// Reference forecasters: static empirical quantiles, the
// Willemain-Smart-Schwarz bootstrap (two-state occurrence Markov chain plus
// bootstrapped-and-jittered demand sizes), and ADIDA with conformal
// residual intervals.

namespace igp::baselines {

/// Type-1 (inverse-CDF) empirical quantile of the values.
double empirical_quantile(std::span<const double> values, double level);

/// Quantiles of the training values at the given levels, constant across
/// the forecast horizon.
std::vector<double> empirical_quantiles(std::span<const double> train,
                                        std::span<const double> levels);

/// Occurrence chain plus demand pool of the WSS forecaster.
struct WssModel {
  double p01 = 0.0;       // P(positive | zero)
  double p11 = 0.0;       // P(positive | positive)
  std::vector<double> demand_pool;
  bool last_positive = false;
};

WssModel wss_fit(std::span<const double> train);

/// Simulate the occurrence chain h steps from the last state; on positive
/// occurrence bootstrap a pool value x* and jitter it to
/// 1 + floor(x* + z sqrt(x*)), falling back to x* when that is <= 0.
svgp::ForecastSamples wss_forecast(const WssModel& model, int horizon, int n_samples = 50'000,
                                   std::uint64_t rng_seed = 0);

struct AdidaModel {
  int bucket = 1;
  double point_forecast = 0.0;            // per original time bucket
  std::vector<double> residual_pool;      // disaggregated one-step residuals
};

AdidaModel adida_fit(std::span<const double> train);

/// Conformal quantile record: point forecast plus empirical residual
/// quantiles, floored at zero; per-step values for h steps at the levels.
std::vector<std::vector<double>> adida_forecast(std::span<const double> train, int horizon,
                                                std::span<const double> levels);

}  // namespace igp::baselines
