#pragma once

#include <string>
#include <vector>

#include "igp/dataset.hpp"
#include "igp/metrics.hpp"
#include "igp/svgp.hpp"

// Experiment driver: per-series model fitting with independent seeds,
// bounded-pool parallelism, forecast/score emission, aggregate tables,
// timing statistics, and paired significance tests. Output is bit-identical
// for a fixed master seed regardless of parallelism.

namespace igp::bench {

enum class Model {
  EmpQuant,
  WSS,
  AdidaC,
  NegBinGP,
  TweedieGP,
  TweedieGPNoScale,
  TweedieGPApprox,
};

std::string to_string(Model m);
Model model_from_string(const std::string& name);
/// The two ablation variants of the Tweedie model.
std::vector<Model> ablation_models();

struct ExperimentConfig {
  std::string dataset_name;
  std::vector<Model> models;
  svgp::TrainConfig train;  // rng_seed acts as the master seed
  int parallelism = 1;
  int n_forecast_samples = 50'000;
  double max_failure_rate = 0.10;
};

/// Forecast and scores of one series under one model.
struct SeriesOutcome {
  std::string item_id;
  bool failed = false;
  metrics::QuantileForecast quantiles;
  std::vector<double> mean_forecast;  // per step
  metrics::SeriesScore score;
  double seconds = 0.0;
};

struct ModelResult {
  Model model = Model::EmpQuant;
  std::vector<SeriesOutcome> outcomes;  // ordered like the input series
  std::vector<metrics::AggregateRow> aggregate;
  double seconds_mean = 0.0;
  double seconds_std = 0.0;
  int failures = 0;
};

struct SignificanceRow {
  std::string metric;
  Model model_a;
  Model model_b;
  metrics::PairedTest test;
};

struct ExperimentResult {
  std::string dataset_name;
  std::vector<ModelResult> models;
  std::vector<SignificanceRow> significance;

  const ModelResult& result_for(Model m) const;
  /// Aggregate value of one metric for one model (NaN when absent).
  double aggregate_value(Model m, const std::string& metric) const;
};

/// seed = splitmix(splitmix(master ^ fnv1a(item_id)) ^ fnv1a(model)); a
/// subset of a dataset therefore reproduces the full run series-for-series.
std::uint64_t series_seed(std::uint64_t master, const std::string& item_id, Model m);

ExperimentResult run_experiment(const std::vector<data::SeriesRecord>& series,
                                const ExperimentConfig& config);

/// scores.csv, timings.csv, significance.csv, forecasts/<model>.csv.
void write_outputs(const ExperimentResult& result, const std::string& out_dir);

/// Re-score previously written forecast CSVs against the data.
ExperimentResult evaluate_forecasts(const std::string& forecasts_dir,
                                    const std::vector<data::SeriesRecord>& series,
                                    const std::string& dataset_name);

}  // namespace igp::bench
