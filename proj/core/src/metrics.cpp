#include "igp/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "igp/baselines.hpp"

namespace igp::metrics {

const std::vector<double>& report_levels() {
  static const std::vector<double> l{0.5, 0.55, 0.6, 0.65, 0.7, 0.75,
                                     0.8, 0.85, 0.9, 0.95, 0.99};
  return l;
}

const std::vector<double>& scored_levels() {
  static const std::vector<double> l{0.5, 0.8, 0.9, 0.95, 0.99};
  return l;
}

QuantileForecast quantiles_from_samples(const std::vector<std::vector<double>>& step_samples,
                                        std::span<const double> levels) {
  QuantileForecast qf;
  qf.levels.assign(levels.begin(), levels.end());
  qf.values.reserve(step_samples.size());
  for (const auto& samples : step_samples) {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> row(levels.size());
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto idx = static_cast<std::size_t>(std::max(1.0, std::ceil(levels[k] * n))) - 1;
      row[k] = sorted[std::min(idx, sorted.size() - 1)];
    }
    qf.values.push_back(std::move(row));
  }
  return qf;
}

double quantile_loss(double q, double y_hat, double y) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile_loss: q must be in (0,1)");
  return y >= y_hat ? 2.0 * q * (y - y_hat) : 2.0 * (1.0 - q) * (y_hat - y);
}

namespace {

double train_side_loss(double q, std::span<const double> train) {
  const double emp = baselines::empirical_quantile(train, q);
  double s = 0.0;
  for (double y : train) s += quantile_loss(q, emp, y);
  return s / static_cast<double>(train.size());
}

}  // namespace

std::optional<double> scaled_quantile_loss(double q, std::span<const double> forecasts,
                                           std::span<const double> test,
                                           std::span<const double> train) {
  if (forecasts.size() != test.size() || test.empty() || train.empty())
    throw std::invalid_argument("scaled_quantile_loss: size mismatch");
  const double denom = train_side_loss(q, train);
  if (!(denom > 0.0)) return std::nullopt;
  double num = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) num += quantile_loss(q, forecasts[i], test[i]);
  num /= static_cast<double>(test.size());
  return num / denom;
}

std::optional<double> srps_half_plus(const QuantileForecast& qf, std::span<const double> test,
                                     std::span<const double> train) {
  const auto& levels = qf.levels;
  if (qf.horizon() != static_cast<int>(test.size()) || train.empty())
    throw std::invalid_argument("srps_half_plus: size mismatch");

  double denom = 0.0;
  for (double q : levels) denom += train_side_loss(q, train);
  denom /= static_cast<double>(levels.size());
  if (!(denom > 0.0)) return std::nullopt;

  double num = 0.0;
  for (std::size_t step = 0; step < test.size(); ++step) {
    double step_loss = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k)
      step_loss += quantile_loss(levels[k], qf.at(static_cast<int>(step), k), test[step]);
    num += step_loss / static_cast<double>(levels.size());
  }
  num /= static_cast<double>(test.size());
  return num / denom;
}

std::optional<double> rmsse(std::span<const double> point_forecasts, std::span<const double> test,
                            std::span<const double> train) {
  if (point_forecasts.size() != test.size() || test.empty() || train.size() < 2)
    throw std::invalid_argument("rmsse: size mismatch");
  double denom = 0.0;
  for (std::size_t i = 1; i < train.size(); ++i) {
    const double d = train[i] - train[i - 1];
    denom += d * d;
  }
  denom /= static_cast<double>(train.size() - 1);
  if (!(denom > 0.0)) return std::nullopt;
  double num = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double d = point_forecasts[i] - test[i];
    num += d * d;
  }
  num /= static_cast<double>(test.size());
  return std::sqrt(num / denom);
}

std::vector<double> coverage(const QuantileForecast& qf, std::span<const double> test) {
  if (qf.horizon() != static_cast<int>(test.size()))
    throw std::invalid_argument("coverage: size mismatch");
  std::vector<double> out(qf.levels.size(), 0.0);
  for (std::size_t step = 0; step < test.size(); ++step)
    for (std::size_t k = 0; k < qf.levels.size(); ++k)
      if (test[step] <= qf.at(static_cast<int>(step), k)) out[k] += 1.0;
  for (auto& v : out) v /= static_cast<double>(test.size());
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<SeriesScore>& scores) {
  std::vector<AggregateRow> rows;
  const auto& sl = scored_levels();
  const auto& rl = report_levels();

  auto push_mean = [&](const std::string& name, auto getter) {
    AggregateRow row;
    row.metric = name;
    double sum = 0.0;
    int n = 0;
    for (const auto& s : scores) {
      const std::optional<double> v = getter(s);
      if (v.has_value()) {
        sum += *v;
        ++n;
      } else {
        ++row.excluded;
      }
    }
    row.value = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  };

  for (std::size_t k = 0; k < sl.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "sQ_%g", sl[k]);
    push_mean(name, [k](const SeriesScore& s) { return k < s.sq.size() ? s.sq[k] : std::nullopt; });
  }
  push_mean("sRPS_0.5+", [](const SeriesScore& s) { return s.srps; });
  push_mean("RMSSE", [](const SeriesScore& s) { return s.rmsse; });
  for (std::size_t k = 0; k < rl.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "coverage_%g", rl[k]);
    push_mean(name, [k](const SeriesScore& s) -> std::optional<double> {
      if (k < s.coverage.size()) return s.coverage[k];
      return std::nullopt;
    });
  }
  return rows;
}

std::vector<std::optional<PairedTest>> paired_fdr_test(
    const std::vector<std::vector<double>>& losses_a,
    const std::vector<std::vector<double>>& losses_b, double alpha) {
  if (losses_a.size() != losses_b.size())
    throw std::invalid_argument("paired_fdr_test: family size mismatch");
  const std::size_t h = losses_a.size();
  std::vector<std::optional<PairedTest>> out(h);

  std::vector<std::pair<double, std::size_t>> pvals;  // (p, hypothesis index)
  for (std::size_t i = 0; i < h; ++i) {
    const auto& a = losses_a[i];
    const auto& b = losses_b[i];
    if (a.size() != b.size()) throw std::invalid_argument("paired_fdr_test: pair size mismatch");
    if (a.size() < 3) continue;  // no verdict
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = a[k] - b[k];
    const double mean_d = num::mean(d);
    const double sd = num::stddev(d);

    PairedTest pt;
    if (sd == 0.0) {
      pt.t_stat = mean_d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean_d);
      pt.p_value = mean_d == 0.0 ? 1.0 : 0.0;
    } else {
      pt.t_stat = mean_d / (sd / std::sqrt(static_cast<double>(n)));
      boost::math::students_t dist(static_cast<double>(n - 1));
      pt.p_value = 2.0 * boost::math::cdf(dist, -std::abs(pt.t_stat));
    }
    out[i] = pt;
    pvals.emplace_back(pt.p_value, i);
  }

  // Benjamini-Hochberg step-up over the testable hypotheses.
  std::sort(pvals.begin(), pvals.end());
  const auto m = static_cast<double>(pvals.size());
  std::vector<double> adj(pvals.size());
  double running = 1.0;
  for (std::size_t k = pvals.size(); k-- > 0;) {
    running = std::min(running, pvals[k].first * m / static_cast<double>(k + 1));
    adj[k] = running;
  }
  std::size_t reject_upto = 0;
  for (std::size_t k = 0; k < pvals.size(); ++k)
    if (pvals[k].first <= alpha * static_cast<double>(k + 1) / m) reject_upto = k + 1;

  for (std::size_t k = 0; k < pvals.size(); ++k) {
    auto& pt = *out[pvals[k].second];
    pt.p_adjusted = adj[k];
    if (k < reject_upto && pt.t_stat != 0.0)
      pt.verdict = pt.t_stat < 0.0 ? Verdict::ABetter : Verdict::BBetter;
  }
  return out;
}

}  // namespace igp::metrics
