#include "igp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

namespace igp::data {

DatasetConfig DatasetConfig::preset(const std::string& name) {
  DatasetConfig c;
  c.name = name;
  if (name == "m5") {
    c.t_train = 1941;
    c.horizon = 28;
  } else if (name == "m5-subset") {
    c.t_train = 1941;
    c.horizon = 28;
    c.subset = 500;
  } else if (name == "onlineretail") {
    c.t_train = 346;
    c.horizon = 28;
  } else if (name == "auto") {
    c.t_train = 18;
    c.horizon = 6;
  } else if (name == "carparts") {
    c.t_train = 45;
    c.horizon = 6;
  } else if (name == "raf") {
    c.t_train = 72;
    c.horizon = 12;
  } else {
    throw std::invalid_argument("unknown dataset preset: " + name);
  }
  return c;
}

double adi(std::span<const double> values) {
  double positives = 0.0;
  for (double v : values)
    if (v > 0.0) positives += 1.0;
  if (positives == 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(values.size()) / positives;
}

namespace {

struct RawRow {
  long t;
  double value;
};

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<SeriesRecord> load_dataset(const std::string& path, const DatasetConfig& config) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  const int expected_len = config.t_train + config.horizon;

  std::map<std::string, std::vector<RawRow>> by_item;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "item_id,t,value") fail(line_no, "expected header item_id,t,value");
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) fail(line_no, "expected 3 columns");
    const std::string item = line.substr(0, c1);
    if (item.empty()) fail(line_no, "empty item_id");

    long t = 0;
    const char* tb = line.data() + c1 + 1;
    const char* te = line.data() + c2;
    if (auto r = std::from_chars(tb, te, t); r.ec != std::errc{} || r.ptr != te || t < 1)
      fail(line_no, "t must be a positive integer");

    double v = 0.0;
    const char* vb = line.data() + c2 + 1;
    const char* ve = line.data() + line.size();
    if (auto r = std::from_chars(vb, ve, v); r.ec != std::errc{} || r.ptr != ve)
      fail(line_no, "value must be numeric");
    if (v < 0.0 || v != std::floor(v)) fail(line_no, "value must be a nonnegative integer");

    by_item[item].push_back({t, v});
  }

  std::vector<SeriesRecord> out;
  for (auto& [item, rows] : by_item) {
    if (static_cast<int>(rows.size()) != expected_len)
      throw DataError("series " + item + ": expected " + std::to_string(expected_len) +
                      " rows, found " + std::to_string(rows.size()));
    std::sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
    SeriesRecord rec;
    rec.item_id = item;
    rec.t_train = config.t_train;
    rec.horizon = config.horizon;
    rec.values.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].t != static_cast<long>(i) + 1)
        throw DataError("series " + item + ": t values must cover 1..T+h without gaps");
      rec.values.push_back(rows[i].value);
    }
    if (adi(rec.values) > config.adi_threshold) out.push_back(std::move(rec));
  }

  if (config.subset.has_value() && static_cast<int>(out.size()) > *config.subset)
    out.resize(static_cast<std::size_t>(*config.subset));  // map iteration is lexicographic

  if (out.empty()) throw DataError("dataset " + path + ": no series passed the filter");
  return out;
}

std::pair<std::vector<double>, ScaleInfo> scale_series(std::span<const double> train) {
  std::vector<double> positives;
  for (double v : train)
    if (v > 0.0) positives.push_back(v);

  ScaleInfo info;
  if (!positives.empty()) {
    std::sort(positives.begin(), positives.end());
    const std::size_t n = positives.size();
    info.factor = n % 2 == 1 ? positives[n / 2]
                             : 0.5 * (positives[n / 2 - 1] + positives[n / 2]);
  }
  std::vector<double> scaled(train.begin(), train.end());
  for (auto& v : scaled) v /= info.factor;
  return {std::move(scaled), info};
}

svgp::ForecastSamples unscale_samples(svgp::ForecastSamples samples, const ScaleInfo& info) {
  samples.draws *= info.factor;
  samples.scale_factor *= info.factor;
  if (samples.rounded) samples.draws = samples.draws.array().round().matrix();
  return samples;
}

}  // namespace igp::data
