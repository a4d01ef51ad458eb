#include "igp/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "igp/baselines.hpp"

namespace igp::bench {
namespace fs = std::filesystem;

std::string to_string(Model m) {
  switch (m) {
    case Model::EmpQuant: return "EmpQuant";
    case Model::WSS: return "WSS";
    case Model::AdidaC: return "ADIDA_C";
    case Model::NegBinGP: return "NegBinGP";
    case Model::TweedieGP: return "TweedieGP";
    case Model::TweedieGPNoScale: return "TweedieGP-noscale";
    case Model::TweedieGPApprox: return "TweedieGP-approx";
  }
  throw std::logic_error("unreachable");
}

Model model_from_string(const std::string& name) {
  for (Model m : {Model::EmpQuant, Model::WSS, Model::AdidaC, Model::NegBinGP, Model::TweedieGP,
                  Model::TweedieGPNoScale, Model::TweedieGPApprox})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown model: " + name);
}

std::vector<Model> ablation_models() { return {Model::TweedieGPNoScale, Model::TweedieGPApprox}; }

std::uint64_t series_seed(std::uint64_t master, const std::string& item_id, Model m) {
  return rng::mix_seed(rng::mix_seed(master, item_id), to_string(m));
}

namespace {

std::vector<std::vector<double>> columns_of(const Eigen::MatrixXd& draws) {
  std::vector<std::vector<double>> cols(draws.cols());
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    cols[j].resize(draws.rows());
    Eigen::VectorXd::Map(cols[j].data(), draws.rows()) = draws.col(j);
  }
  return cols;
}

std::vector<double> column_means(const Eigen::MatrixXd& draws) {
  std::vector<double> out(draws.cols());
  Eigen::VectorXd::Map(out.data(), draws.cols()) = draws.colwise().mean();
  return out;
}

Eigen::VectorXd to_eigen(std::span<const double> xs) {
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

struct ForecastOut {
  metrics::QuantileForecast qf;
  std::vector<double> mean;
};

ForecastOut from_samples(const svgp::ForecastSamples& samples) {
  ForecastOut out;
  out.qf = metrics::quantiles_from_samples(columns_of(samples.draws), metrics::report_levels());
  out.mean = column_means(samples.draws);
  return out;
}

ForecastOut forecast_one(Model m, const data::SeriesRecord& rec, const ExperimentConfig& cfg) {
  const auto train = rec.train();
  const int h = rec.horizon;
  const std::uint64_t seed = series_seed(cfg.train.rng_seed, rec.item_id, m);
  const auto& levels = metrics::report_levels();

  switch (m) {
    case Model::EmpQuant: {
      ForecastOut out;
      const std::vector<double> row = baselines::empirical_quantiles(train, levels);
      out.qf.levels = levels;
      out.qf.values.assign(h, row);
      out.mean.assign(h, num::mean(train));
      return out;
    }
    case Model::WSS: {
      const auto model = baselines::wss_fit(train);
      return from_samples(baselines::wss_forecast(model, h, cfg.n_forecast_samples, seed));
    }
    case Model::AdidaC: {
      ForecastOut out;
      out.qf.levels = levels;
      out.qf.values = baselines::adida_forecast(train, h, levels);
      out.mean.assign(h, baselines::adida_fit(train).point_forecast);
      return out;
    }
    case Model::NegBinGP:
    case Model::TweedieGP:
    case Model::TweedieGPNoScale:
    case Model::TweedieGPApprox: {
      const bool scaled = m == Model::TweedieGP || m == Model::TweedieGPApprox;
      auto [train_in, info] = scaled ? data::scale_series(train)
                                     : std::make_pair(std::vector<double>(train.begin(), train.end()),
                                                      data::ScaleInfo{});
      lik::LikelihoodSpec spec;
      if (m == Model::NegBinGP)
        spec = lik::LikelihoodSpec::negbin(0.5);
      else if (m == Model::TweedieGPApprox)
        spec = lik::LikelihoodSpec::tweedie_approx(1.5);
      else
        spec = lik::LikelihoodSpec::tweedie(1.0, 1.5);

      Eigen::VectorXd t(rec.t_train), t_star(h);
      for (int i = 0; i < rec.t_train; ++i) t[i] = i + 1;
      for (int i = 0; i < h; ++i) t_star[i] = rec.t_train + 1 + i;

      svgp::TrainConfig tc = cfg.train;
      tc.rng_seed = seed;
      const auto fitted = svgp::fit(to_eigen(train_in), t, spec, tc);
      const auto samples = svgp::forecast(fitted, t_star, cfg.n_forecast_samples, true,
                                          info.factor, rng::mix_seed(seed, "forecast"));
      return from_samples(samples);
    }
  }
  throw std::logic_error("unreachable");
}

metrics::SeriesScore score_series(const data::SeriesRecord& rec, const ForecastOut& fc) {
  metrics::SeriesScore s;
  s.item_id = rec.item_id;
  const auto train = rec.train();
  const auto test = rec.test();
  const auto& sl = metrics::scored_levels();
  const auto& rl = metrics::report_levels();

  for (double q : sl) {
    const auto idx = std::distance(rl.begin(), std::find(rl.begin(), rl.end(), q));
    std::vector<double> fq(test.size());
    for (std::size_t step = 0; step < test.size(); ++step)
      fq[step] = fc.qf.at(static_cast<int>(step), static_cast<std::size_t>(idx));
    s.sq.push_back(metrics::scaled_quantile_loss(q, fq, test, train));
  }
  s.srps = metrics::srps_half_plus(fc.qf, test, train);
  s.rmsse = metrics::rmsse(fc.mean, test, train);
  s.coverage = metrics::coverage(fc.qf, test);

  // Nonnegative forecasts cover every zero observation, so coverage can
  // never drop below the zero proportion of the test window.
  double zeros = 0.0;
  for (double y : test)
    if (y == 0.0) zeros += 1.0;
  const double zero_prop = zeros / static_cast<double>(test.size());
  for (double c : s.coverage)
    if (c + 1e-12 < zero_prop)
      throw std::logic_error("coverage fell below the test zero proportion");
  return s;
}

metrics::SeriesScore missing_score(const std::string& item_id) {
  metrics::SeriesScore s;
  s.item_id = item_id;
  s.sq.assign(metrics::scored_levels().size(), std::nullopt);
  s.srps = std::nullopt;
  s.rmsse = std::nullopt;
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

const ModelResult& ExperimentResult::result_for(Model m) const {
  for (const auto& r : models)
    if (r.model == m) return r;
  throw std::invalid_argument("model not part of this experiment: " + to_string(m));
}

double ExperimentResult::aggregate_value(Model m, const std::string& metric) const {
  for (const auto& row : result_for(m).aggregate)
    if (row.metric == metric) return row.value;
  return std::numeric_limits<double>::quiet_NaN();
}

ExperimentResult run_experiment(const std::vector<data::SeriesRecord>& series,
                                const ExperimentConfig& config) {
  if (series.empty()) throw std::invalid_argument("run_experiment: no series");
  if (config.models.empty()) throw std::invalid_argument("run_experiment: no models selected");
  const int workers = std::max(1, config.parallelism);

  ExperimentResult result;
  result.dataset_name = config.dataset_name;
  result.models.resize(config.models.size());
  for (std::size_t k = 0; k < config.models.size(); ++k) {
    result.models[k].model = config.models[k];
    result.models[k].outcomes.resize(series.size());
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= series.size()) break;
      for (std::size_t k = 0; k < config.models.size(); ++k) {
        SeriesOutcome& out = result.models[k].outcomes[i];
        out.item_id = series[i].item_id;
        const auto start = std::chrono::steady_clock::now();
        try {
          const ForecastOut fc = forecast_one(config.models[k], series[i], config);
          out.quantiles = fc.qf;
          out.mean_forecast = fc.mean;
          out.score = score_series(series[i], fc);
        } catch (const TrainingError&) {
          out.failed = true;
          out.score = missing_score(series[i].item_id);
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (auto& mr : result.models) {
    std::vector<metrics::SeriesScore> scores;
    std::vector<double> secs;
    for (const auto& o : mr.outcomes) {
      scores.push_back(o.score);
      secs.push_back(o.seconds);
      if (o.failed) ++mr.failures;
    }
    mr.aggregate = metrics::aggregate(scores);
    mr.seconds_mean = num::mean(secs);
    mr.seconds_std = num::stddev(secs);
  }

  // Significance family: every scored metric x model pair of this run.
  const auto& sl = metrics::scored_levels();
  std::vector<std::string> metric_names;
  for (double q : sl) metric_names.push_back("sQ_" + fmt(q));
  metric_names.push_back("sRPS_0.5+");
  metric_names.push_back("RMSSE");

  auto losses_of = [&](const ModelResult& mr, std::size_t metric_idx,
                       const std::vector<bool>& keep) {
    std::vector<double> out;
    for (std::size_t i = 0; i < mr.outcomes.size(); ++i) {
      if (!keep[i]) continue;
      const auto& s = mr.outcomes[i].score;
      const std::optional<double> v = metric_idx < sl.size() ? s.sq[metric_idx]
                                      : metric_idx == sl.size() ? s.srps
                                                                : s.rmsse;
      out.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    return out;
  };

  std::vector<std::vector<double>> fam_a, fam_b;
  std::vector<SignificanceRow> rows;
  for (std::size_t a = 0; a < result.models.size(); ++a)
    for (std::size_t b = a + 1; b < result.models.size(); ++b)
      for (std::size_t mi = 0; mi < metric_names.size(); ++mi) {
        // Keep series where both models produced the metric.
        std::vector<bool> keep(series.size(), false);
        for (std::size_t i = 0; i < series.size(); ++i) {
          auto defined = [&](const ModelResult& mr) {
            const auto& s = mr.outcomes[i].score;
            const auto v = mi < sl.size() ? s.sq[mi] : mi == sl.size() ? s.srps : s.rmsse;
            return v.has_value();
          };
          keep[i] = defined(result.models[a]) && defined(result.models[b]);
        }
        fam_a.push_back(losses_of(result.models[a], mi, keep));
        fam_b.push_back(losses_of(result.models[b], mi, keep));
        SignificanceRow row;
        row.metric = metric_names[mi];
        row.model_a = result.models[a].model;
        row.model_b = result.models[b].model;
        rows.push_back(row);
      }
  const auto tests = metrics::paired_fdr_test(fam_a, fam_b);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!tests[k].has_value()) continue;
    rows[k].test = *tests[k];
    result.significance.push_back(rows[k]);
  }
  return result;
}

void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "forecasts");

  std::ofstream scores(fs::path(out_dir) / "scores.csv");
  scores << "dataset,model,metric,value,excluded_count\n";
  for (const auto& mr : result.models)
    for (const auto& row : mr.aggregate)
      scores << result.dataset_name << ',' << to_string(mr.model) << ',' << row.metric << ','
             << fmt(row.value) << ',' << row.excluded << '\n';

  std::ofstream times(fs::path(out_dir) / "timings.csv");
  times << "dataset,model,seconds_mean,seconds_std,failures\n";
  for (const auto& mr : result.models)
    times << result.dataset_name << ',' << to_string(mr.model) << ',' << fmt(mr.seconds_mean)
          << ',' << fmt(mr.seconds_std) << ',' << mr.failures << '\n';

  std::ofstream sig(fs::path(out_dir) / "significance.csv");
  sig << "dataset,metric,model_a,model_b,t_stat,p_value,p_adjusted,verdict\n";
  for (const auto& row : result.significance) {
    const char* verdict = row.test.verdict == metrics::Verdict::ABetter      ? "a_better"
                          : row.test.verdict == metrics::Verdict::BBetter   ? "b_better"
                                                                            : "indistinguishable";
    sig << result.dataset_name << ',' << row.metric << ',' << to_string(row.model_a) << ','
        << to_string(row.model_b) << ',' << fmt(row.test.t_stat) << ',' << fmt(row.test.p_value)
        << ',' << fmt(row.test.p_adjusted) << ',' << verdict << '\n';
  }

  for (const auto& mr : result.models) {
    std::ofstream fc(fs::path(out_dir) / "forecasts" / (to_string(mr.model) + ".csv"));
    fc << "item_id,step";
    for (double q : metrics::report_levels()) fc << ",q" << fmt(q);
    fc << ",mean\n";
    for (const auto& o : mr.outcomes) {
      if (o.failed) continue;
      for (int step = 0; step < o.quantiles.horizon(); ++step) {
        fc << o.item_id << ',' << step + 1;
        for (std::size_t k = 0; k < o.quantiles.levels.size(); ++k)
          fc << ',' << fmt(o.quantiles.at(step, k));
        fc << ',' << fmt(o.mean_forecast[step]) << '\n';
      }
    }
  }
}

ExperimentResult evaluate_forecasts(const std::string& forecasts_dir,
                                    const std::vector<data::SeriesRecord>& series,
                                    const std::string& dataset_name) {
  std::map<std::string, const data::SeriesRecord*> by_id;
  for (const auto& rec : series) by_id[rec.item_id] = &rec;

  ExperimentResult result;
  result.dataset_name = dataset_name;

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(forecasts_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no forecast CSVs in " + forecasts_dir);

  for (const auto& file : files) {
    ModelResult mr;
    mr.model = model_from_string(file.stem().string());

    std::ifstream in(file);
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, ForecastOut> parsed;
    const std::size_t n_levels = metrics::report_levels().size();
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 || line.empty()) continue;
      std::vector<std::string> fields;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        const auto c = line.find(',', pos);
        fields.push_back(line.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
      if (fields.size() != 2 + n_levels + 1)
        throw DataError(file.string() + " line " + std::to_string(line_no) + ": bad column count");
      auto& fo = parsed[fields[0]];
      if (fo.qf.levels.empty()) fo.qf.levels = metrics::report_levels();
      std::vector<double> row(n_levels);
      for (std::size_t k = 0; k < n_levels; ++k) row[k] = std::stod(fields[2 + k]);
      fo.qf.values.push_back(std::move(row));
      fo.mean.push_back(std::stod(fields.back()));
    }

    for (const auto& rec : series) {
      SeriesOutcome out;
      out.item_id = rec.item_id;
      const auto it = parsed.find(rec.item_id);
      if (it == parsed.end()) {
        out.failed = true;
        out.score = missing_score(rec.item_id);
        ++mr.failures;
      } else {
        out.quantiles = it->second.qf;
        out.mean_forecast = it->second.mean;
        out.score = score_series(rec, it->second);
      }
      mr.outcomes.push_back(std::move(out));
    }
    std::vector<metrics::SeriesScore> scores;
    for (const auto& o : mr.outcomes) scores.push_back(o.score);
    mr.aggregate = metrics::aggregate(scores);
    result.models.push_back(std::move(mr));
  }
  return result;
}

}  // namespace igp::bench
