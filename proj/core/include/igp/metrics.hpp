#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igp/common.hpp"

// Scoring of quantile forecasts for intermittent series: quantile loss,
// in-sample-scaled variants, RMSSE, one-sided coverage, aggregation, and
// paired significance testing with Benjamini-Hochberg FDR control.

namespace igp::metrics {

/// The 11 levels {0.5, 0.55, ..., 0.95, 0.99} every forecaster reports.
const std::vector<double>& report_levels();
/// The subset {0.5, 0.8, 0.9, 0.95, 0.99} scored individually.
const std::vector<double>& scored_levels();

/// Per-step quantile values, one row per horizon step, nondecreasing
/// across levels within a row.
struct QuantileForecast {
  std::vector<double> levels;
  std::vector<std::vector<double>> values;  // horizon x levels

  int horizon() const { return static_cast<int>(values.size()); }
  double at(int step, std::size_t level_idx) const { return values[step][level_idx]; }
};

/// Type-1 empirical quantiles of forecast sample columns.
QuantileForecast quantiles_from_samples(const std::vector<std::vector<double>>& step_samples,
                                        std::span<const double> levels);

/// Q_q(yhat, y) = 2 (q (y - yhat))+ or 2 ((1-q)(yhat - y)) on the other branch.
double quantile_loss(double q, double y_hat, double y);

/// Horizon-mean quantile loss over in-sample-mean quantile loss of the
/// training empirical quantile. nullopt when the denominator is zero.
std::optional<double> scaled_quantile_loss(double q, std::span<const double> forecasts,
                                           std::span<const double> test,
                                           std::span<const double> train);

/// Mean over report_levels() of the quantile loss, horizon-averaged, scaled
/// by the training-side analogue under empirical quantiles.
std::optional<double> srps_half_plus(const QuantileForecast& qf, std::span<const double> test,
                                     std::span<const double> train);

/// sqrt(mean squared forecast error / mean squared naive in-sample error).
std::optional<double> rmsse(std::span<const double> point_forecasts, std::span<const double> test,
                            std::span<const double> train);

/// One-sided: a step is covered at level q iff y <= yhat^q (ties covered).
std::vector<double> coverage(const QuantileForecast& qf, std::span<const double> test);

/// Per-series scores for one model.
struct SeriesScore {
  std::string item_id;
  std::vector<std::optional<double>> sq;    // indexed like scored_levels()
  std::optional<double> srps;
  std::optional<double> rmsse;
  std::vector<double> coverage;             // indexed like report_levels()
};

/// Aggregate row: mean over series with defined values.
struct AggregateRow {
  std::string metric;
  double value = 0.0;
  int excluded = 0;
};

/// Mean aggregation over series, never rank-based; undefined per-series
/// values are excluded with a count.
std::vector<AggregateRow> aggregate(const std::vector<SeriesScore>& scores);

enum class Verdict { ABetter, BBetter, Indistinguishable };

struct PairedTest {
  double t_stat = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  Verdict verdict = Verdict::Indistinguishable;
};

/// Two-sided paired t-test per hypothesis followed by Benjamini-Hochberg
/// across the family. losses_a/b hold per-series losses, one inner vector
/// per hypothesis; pairs with fewer than 3 entries get no verdict (nullopt).
std::vector<std::optional<PairedTest>> paired_fdr_test(
    const std::vector<std::vector<double>>& losses_a,
    const std::vector<std::vector<double>>& losses_b, double alpha = 0.05);

}  // namespace igp::metrics
