#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igp/common.hpp"
#include "igp/svgp.hpp"

// Ingestion of long-format demand CSVs (item_id,t,value), the intermittency
// filter, per-dataset train/test splits, and median-demand scaling.

namespace igp::data {

/// One series, train block followed by the holdout horizon.
struct SeriesRecord {
  std::string item_id;
  std::vector<double> values;  // length t_train + horizon
  int t_train = 0;
  int horizon = 0;

  std::span<const double> train() const { return {values.data(), static_cast<std::size_t>(t_train)}; }
  std::span<const double> test() const {
    return {values.data() + t_train, static_cast<std::size_t>(horizon)};
  }
};

struct DatasetConfig {
  std::string name;
  int t_train = 0;
  int horizon = 0;
  // Series kept when ADI = length / #positives exceeds this; 1.0 keeps
  // everything with at least one zero. ADI is computed over the full
  // series (train plus test), matching how the collections were extracted.
  double adi_threshold = 1.0;
  // m5-subset mode: keep only the first `subset` item_ids lexicographically.
  std::optional<int> subset;

  /// Presets: m5 (1941/28), m5-subset (first 500 ids), onlineretail
  /// (346/28), auto (18/6), carparts (45/6), raf (72/12).
  static DatasetConfig preset(const std::string& name);
};

double adi(std::span<const double> values);

/// Parse and filter. Throws DataError with a line number on malformed rows,
/// on gaps or length mismatches, and when nothing survives the filter.
std::vector<SeriesRecord> load_dataset(const std::string& path, const DatasetConfig& config);

/// Median of the positive training values; 1 when there are none.
struct ScaleInfo {
  double factor = 1.0;
};

std::pair<std::vector<double>, ScaleInfo> scale_series(std::span<const double> train);

/// Multiply draws back to the original scale; re-round when the samples
/// carry the rounded flag.
svgp::ForecastSamples unscale_samples(svgp::ForecastSamples samples, const ScaleInfo& info);

}  // namespace igp::data
