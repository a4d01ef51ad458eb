#include "igp/tweedie.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace igp::tweedie {
namespace {

// boost's Lanczos lgamma: thread-safe, ~1e-15 relative accuracy.
double lgamma(double x) { return boost::math::lgamma(x); }
double digamma(double x) { return boost::math::digamma(x); }

constexpr std::int64_t kMaxPeakIndex = 1'000'000'000'000ll;  // scan infeasible beyond

}  // namespace

CompoundParams to_compound(const TweedieParams& p) {
  const double lambda = std::pow(p.mu, 2.0 - p.rho) / (p.phi * (2.0 - p.rho));
  const double alpha = (2.0 - p.rho) / (p.rho - 1.0);
  const double beta = 1.0 / (p.phi * (p.rho - 1.0) * std::pow(p.mu, p.rho - 1.0));
  return CompoundParams(lambda, alpha, beta);
}

TweedieParams from_compound(const CompoundParams& c) {
  // Invert: alpha fixes rho, then lambda and beta fix mu and phi.
  const double rho = (c.alpha + 2.0) / (c.alpha + 1.0);
  const double mu = c.lambda * c.alpha / c.beta;
  const double phi = std::pow(mu, 2.0 - rho) / (c.lambda * (2.0 - rho));
  return TweedieParams(mu, phi, rho);
}

double prob_zero(const TweedieParams& p) {
  return std::exp(-std::pow(p.mu, 2.0 - p.rho) / (p.phi * (2.0 - p.rho)));
}

double log_v(std::int64_t j, const TruncationWorkspace& ws) {
  const double jd = static_cast<double>(j);
  return jd * ws.log_z - lgamma(1.0 + jd) - lgamma(ws.alpha * jd);
}

double log_v_slope(double j, const TruncationWorkspace& ws) {
  return ws.log_z - std::log(j) - ws.alpha * std::log(ws.alpha * j);
}

TruncationWorkspace truncate_series(double y, const TweedieParams& p) {
  if (!(y > 0.0) || !std::isfinite(y)) throw std::invalid_argument("truncate_series: y must be positive");

  const double alpha = (2.0 - p.rho) / (p.rho - 1.0);
  const double log_z = alpha * std::log(y) - alpha * std::log(p.rho - 1.0) -
                       (1.0 + alpha) * std::log(p.phi) - std::log(2.0 - p.rho);
  if (!std::isfinite(log_z)) throw NumericRangeError("truncate_series: z not representable");

  const double j_peak = std::pow(y, 2.0 - p.rho) / (p.phi * (2.0 - p.rho));
  if (!std::isfinite(j_peak) || j_peak > static_cast<double>(kMaxPeakIndex))
    throw NumericRangeError("truncate_series: peak index out of range");

  TruncationWorkspace ws;
  ws.alpha = alpha;
  ws.log_z = log_z;
  ws.z = std::exp(log_z);  // may overflow to +inf; only log_z is used below
  ws.c_w = log_z + (1.0 + alpha) - alpha * std::log(alpha);
  ws.j_max = std::max<std::int64_t>(1, std::llround(j_peak));

  const double log_v_peak = log_v(ws.j_max, ws);

  std::int64_t j = ws.j_max;
  while (log_v_peak - log_v(j + 1, ws) < TruncationWorkspace::log_threshold) ++j;
  ws.j_hi = j + 1;

  j = ws.j_max;
  while (j > 1 && log_v_peak - log_v(j - 1, ws) < TruncationWorkspace::log_threshold) --j;
  ws.j_lo = (j == 1) ? 1 : j - 1;

  return ws;
}

namespace {

// Exponential part of the (mu, phi, rho) density for y > 0:
// (1/phi) (y mu^(1-rho)/(1-rho) - mu^(2-rho)/(2-rho)).
double exponent_part(double y, const TweedieParams& p) {
  return (y * std::pow(p.mu, 1.0 - p.rho) / (1.0 - p.rho) -
          std::pow(p.mu, 2.0 - p.rho) / (2.0 - p.rho)) /
         p.phi;
}

// log A(y) plus term-weighted expectations needed by the gradients:
// E[j] and E[dlogV/drho] under the softmax weights of the window.
struct SeriesEval {
  double log_a;
  double mean_j;
  double mean_dlogv_drho;
};

SeriesEval eval_series(double y, const TweedieParams& p, const TruncationWorkspace& ws,
                       bool with_grads) {
  const double anchor = log_v(ws.j_max, ws);
  const double d_alpha = -1.0 / ((p.rho - 1.0) * (p.rho - 1.0));
  const double dlogz_drho = d_alpha * (std::log(y) - std::log(p.rho - 1.0) - std::log(p.phi)) -
                            ws.alpha / (p.rho - 1.0) + 1.0 / (2.0 - p.rho);

  double sum = 0.0, sum_j = 0.0, sum_drho = 0.0;
  for (std::int64_t j = ws.j_lo; j <= ws.j_hi; ++j) {
    const double w = std::exp(log_v(j, ws) - anchor);
    sum += w;
    if (with_grads) {
      const double jd = static_cast<double>(j);
      sum_j += w * jd;
      sum_drho += w * (jd * dlogz_drho - jd * d_alpha * digamma(ws.alpha * jd));
    }
  }
  SeriesEval out;
  out.log_a = anchor + std::log(sum) - std::log(y);
  out.mean_j = with_grads ? sum_j / sum : 0.0;
  out.mean_dlogv_drho = with_grads ? sum_drho / sum : 0.0;
  return out;
}

// d/drho of mu^x / x evaluated at x = 1-rho or x = 2-rho (dx/drho = -1).
double d_power_term(double mu, double x) {
  return std::pow(mu, x) * (1.0 - x * std::log(mu)) / (x * x);
}

}  // namespace

double log_density(double y, const TweedieParams& p) {
  if (y < 0.0 || !std::isfinite(y)) throw std::invalid_argument("log_density: y must be >= 0");
  if (y == 0.0)
    return -std::pow(p.mu, 2.0 - p.rho) / (p.phi * (2.0 - p.rho));
  const TruncationWorkspace ws = truncate_series(y, p);
  return eval_series(y, p, ws, false).log_a + exponent_part(y, p);
}

Grad log_density_grad(double y, const TweedieParams& p) {
  if (y < 0.0 || !std::isfinite(y)) throw std::invalid_argument("log_density_grad: y must be >= 0");
  Grad g{};
  const double mu = p.mu, phi = p.phi, rho = p.rho;
  if (y == 0.0) {
    // log p0 = -mu^(2-rho) / (phi (2-rho))
    g.d_mu = -std::pow(mu, 1.0 - rho) / phi;
    g.d_phi = std::pow(mu, 2.0 - rho) / (phi * phi * (2.0 - rho));
    g.d_rho = -d_power_term(mu, 2.0 - rho) / phi;
    return g;
  }
  const TruncationWorkspace ws = truncate_series(y, p);
  const SeriesEval se = eval_series(y, p, ws, true);
  const double expo = exponent_part(y, p);

  // A(y) does not depend on mu.
  g.d_mu = (y * std::pow(mu, -rho) - std::pow(mu, 1.0 - rho)) / phi;
  // dlogV/dphi = -j (1+alpha) / phi.
  g.d_phi = -(1.0 + ws.alpha) * se.mean_j / phi - expo / phi;
  g.d_rho = se.mean_dlogv_drho +
            (y * d_power_term(mu, 1.0 - rho) - d_power_term(mu, 2.0 - rho)) / phi;
  return g;
}

double sample_tweedie1(const TweedieParams& p, std::mt19937_64& eng) {
  const CompoundParams c = to_compound(p);
  std::poisson_distribution<std::int64_t> pois(c.lambda);
  const std::int64_t n = pois(eng);
  if (n == 0) return 0.0;
  // Sum of n iid Gamma(alpha, beta) is Gamma(n*alpha, beta).
  std::gamma_distribution<double> gam(static_cast<double>(n) * c.alpha, 1.0 / c.beta);
  return gam(eng);
}

std::vector<double> sample_tweedie(const TweedieParams& p, int n, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample_tweedie: n must be >= 1");
  auto eng = rng::make_engine(rng_seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = sample_tweedie1(p, eng);
  return out;
}

double approx_log_density(double y, double mu, double rho) {
  return y * std::pow(mu, 1.0 - rho) / (1.0 - rho) - std::pow(mu, 2.0 - rho) / (2.0 - rho);
}

}  // namespace igp::tweedie
