#include "igp/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace igp::baselines {

double empirical_quantile(std::span<const double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty input");
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("empirical_quantile: bad level");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto idx = static_cast<std::size_t>(std::max(1.0, std::ceil(level * n))) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

std::vector<double> empirical_quantiles(std::span<const double> train,
                                        std::span<const double> levels) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (double q : levels) out.push_back(empirical_quantile(train, q));
  return out;
}

WssModel wss_fit(std::span<const double> train) {
  if (train.empty()) throw std::invalid_argument("wss_fit: empty series");
  WssModel m;
  // Transition counts with add-one smoothing, so short series never lock
  // into an absorbing state.
  double n0 = 0, n1 = 0, n01 = 0, n11 = 0;
  for (std::size_t i = 0; i + 1 < train.size(); ++i) {
    const bool cur = train[i] > 0.0;
    const bool nxt = train[i + 1] > 0.0;
    (cur ? n1 : n0) += 1.0;
    if (cur && nxt) n11 += 1.0;
    if (!cur && nxt) n01 += 1.0;
  }
  m.p01 = (n01 + 1.0) / (n0 + 2.0);
  m.p11 = (n11 + 1.0) / (n1 + 2.0);
  for (double v : train)
    if (v > 0.0) m.demand_pool.push_back(v);
  m.last_positive = train.back() > 0.0;
  return m;
}

svgp::ForecastSamples wss_forecast(const WssModel& model, int horizon, int n_samples,
                                   std::uint64_t rng_seed) {
  if (horizon < 1 || n_samples < 1) throw std::invalid_argument("wss_forecast: bad arguments");
  svgp::ForecastSamples out;
  out.rounded = true;
  out.draws = Eigen::MatrixXd::Zero(n_samples, horizon);
  if (model.demand_pool.empty()) return out;  // never any positive demand

  auto eng = rng::make_engine(rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, model.demand_pool.size() - 1);
  std::normal_distribution<double> nd(0.0, 1.0);

  for (int s = 0; s < n_samples; ++s) {
    bool positive = model.last_positive;
    for (int step = 0; step < horizon; ++step) {
      positive = unif(eng) < (positive ? model.p11 : model.p01);
      if (!positive) continue;
      const double x = model.demand_pool[pick(eng)];
      const double jittered = 1.0 + std::floor(x + nd(eng) * std::sqrt(x));
      out.draws(s, step) = jittered > 0.0 ? jittered : x;
    }
  }
  return out;
}

AdidaModel adida_fit(std::span<const double> train) {
  if (train.empty()) throw std::invalid_argument("adida_fit: empty series");
  const auto t = static_cast<double>(train.size());
  double positives = 0;
  for (double v : train)
    if (v > 0.0) positives += 1.0;

  AdidaModel m;
  if (positives == 0.0) return m;  // bucket 1, zero forecast, empty pool

  // Bucket = mean inter-demand interval, rounded up, capped at T/2.
  const double adi = t / positives;
  m.bucket = std::max(1, static_cast<int>(std::min(std::ceil(adi), std::floor(t / 2.0))));

  // Trailing complete buckets (drop the oldest remainder).
  std::vector<double> agg;
  const std::size_t start = train.size() % static_cast<std::size_t>(m.bucket);
  for (std::size_t i = start; i + m.bucket <= train.size(); i += m.bucket) {
    double s = 0.0;
    for (int j = 0; j < m.bucket; ++j) s += train[i + j];
    agg.push_back(s);
  }
  if (agg.empty()) {
    m.bucket = 1;
    agg.assign(train.begin(), train.end());
  }

  m.point_forecast = agg.back() / m.bucket;
  for (std::size_t k = 1; k < agg.size(); ++k)
    m.residual_pool.push_back((agg[k] - agg[k - 1]) / m.bucket);
  return m;
}

std::vector<std::vector<double>> adida_forecast(std::span<const double> train, int horizon,
                                                std::span<const double> levels) {
  const AdidaModel m = adida_fit(train);
  std::vector<double> row(levels.size(), 0.0);
  for (std::size_t q = 0; q < levels.size(); ++q) {
    double resid_q = 0.0;
    if (!m.residual_pool.empty()) resid_q = empirical_quantile(m.residual_pool, levels[q]);
    row[q] = std::max(0.0, m.point_forecast + resid_q);
  }
  // Monotone repair across levels (residual quantiles are already sorted,
  // flooring keeps order).
  for (std::size_t q = 1; q < row.size(); ++q) row[q] = std::max(row[q], row[q - 1]);
  return std::vector<std::vector<double>>(static_cast<std::size_t>(horizon), row);
}

}  // namespace igp::baselines
