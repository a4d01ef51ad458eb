#include "igp/likelihood.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace igp::lik {
namespace {

void require_count(double y) {
  if (y < 0.0 || y != std::floor(y))
    throw std::domain_error("negbin: y must be a nonnegative integer");
}

double rho_to_u(double rho) {
  const double s = (rho - LikelihoodSpec::rho_lo) / LikelihoodSpec::rho_width;
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("likelihood: rho outside the bijection range");
  return std::log(s / (1.0 - s));
}

}  // namespace

double negbin_log_pmf(double y, const NegBinParams& nb) {
  require_count(y);
  return boost::math::lgamma(y + nb.r) - boost::math::lgamma(nb.r) -
         boost::math::lgamma(y + 1.0) + nb.r * std::log(nb.p_succ) +
         y * std::log1p(-nb.p_succ);
}

double negbin_log_pmf_dr(double y, const NegBinParams& nb) {
  require_count(y);
  return boost::math::digamma(y + nb.r) - boost::math::digamma(nb.r) + std::log(nb.p_succ);
}

LikelihoodSpec LikelihoodSpec::negbin(double p_succ) {
  if (!(p_succ > 0.0 && p_succ < 1.0)) throw std::invalid_argument("likelihood: p must be in (0,1)");
  LikelihoodSpec s;
  s.kind = Kind::NegBin;
  s.u[0] = std::log(p_succ / (1.0 - p_succ));
  return s;
}

LikelihoodSpec LikelihoodSpec::tweedie(double phi, double rho) {
  if (!(phi > 1e-6)) throw std::invalid_argument("likelihood: phi must exceed 1e-6");
  LikelihoodSpec s;
  s.kind = Kind::Tweedie;
  s.u[0] = inv_softplus(phi - 1e-6);
  s.u[1] = rho_to_u(rho);
  return s;
}

LikelihoodSpec LikelihoodSpec::tweedie_approx(double rho) {
  LikelihoodSpec s;
  s.kind = Kind::TweedieApprox;
  s.u[0] = rho_to_u(rho);
  return s;
}

double loglik_point(const LikelihoodSpec& spec, double y, double f) {
  const double m = softplus(f);
  switch (spec.kind) {
    case Kind::NegBin:
      return negbin_log_pmf(y, NegBinParams(m, spec.p_succ()));
    case Kind::Tweedie:
      return tweedie::log_density(y, tweedie::TweedieParams(m, spec.phi(), spec.rho()));
    case Kind::TweedieApprox:
      return tweedie::approx_log_density(y, m, spec.rho());
  }
  throw std::logic_error("unreachable");
}

double loglik_grad_f(const LikelihoodSpec& spec, double y, double f) {
  return loglik_point_eval(spec, y, f).d_f;
}

PointEval loglik_point_eval(const LikelihoodSpec& spec, double y, double f) {
  PointEval out;
  const double m = softplus(f);
  const double dm_df = sigmoid(f);
  switch (spec.kind) {
    case Kind::NegBin: {
      const double p = spec.p_succ();
      const NegBinParams nb(m, p);
      out.loglik = negbin_log_pmf(y, nb);
      out.d_f = negbin_log_pmf_dr(y, nb) * dm_df;
      // d/dp = r/p - y/(1-p), chained through p = sigmoid(u0).
      out.d_u[0] = (m / p - y / (1.0 - p)) * p * (1.0 - p);
      return out;
    }
    case Kind::Tweedie: {
      const double phi = spec.phi(), rho = spec.rho();
      const auto g = tweedie::log_density_grad(y, tweedie::TweedieParams(m, phi, rho));
      out.loglik = tweedie::log_density(y, tweedie::TweedieParams(m, phi, rho));
      out.d_f = g.d_mu * dm_df;
      out.d_u[0] = g.d_phi * sigmoid(spec.u[0]);
      const double s = sigmoid(spec.u[1]);
      out.d_u[1] = g.d_rho * LikelihoodSpec::rho_width * s * (1.0 - s);
      return out;
    }
    case Kind::TweedieApprox: {
      const double rho = spec.rho();
      out.loglik = tweedie::approx_log_density(y, m, rho);
      // d/dmu of y mu^(1-rho)/(1-rho) - mu^(2-rho)/(2-rho).
      out.d_f = (y * std::pow(m, -rho) - std::pow(m, 1.0 - rho)) * dm_df;
      const double a = 1.0 - rho, b = 2.0 - rho;
      const double d_rho = y * std::pow(m, a) * (1.0 - a * std::log(m)) / (a * a) -
                           std::pow(m, b) * (1.0 - b * std::log(m)) / (b * b);
      const double s = sigmoid(spec.u[0]);
      out.d_u[0] = d_rho * LikelihoodSpec::rho_width * s * (1.0 - s);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

double sample_obs1(const LikelihoodSpec& spec, double f, std::mt19937_64& eng) {
  const double m = softplus(f);
  switch (spec.kind) {
    case Kind::NegBin: {
      // Gamma-Poisson mixture; valid for real r.
      const double p = spec.p_succ();
      std::gamma_distribution<double> gam(m, (1.0 - p) / p);
      std::poisson_distribution<std::int64_t> pois(std::max(gam(eng), 1e-12));
      return static_cast<double>(pois(eng));
    }
    case Kind::Tweedie:
      return tweedie::sample_tweedie1(tweedie::TweedieParams(m, spec.phi(), spec.rho()), eng);
    case Kind::TweedieApprox: {
      // Normalized form of the approximate density.
      std::exponential_distribution<double> ex(std::pow(m, 1.0 - spec.rho()) / (spec.rho() - 1.0));
      return ex(eng);
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<double> sample_obs(const LikelihoodSpec& spec, double f, int n, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample_obs: n must be >= 1");
  auto eng = rng::make_engine(rng_seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = sample_obs1(spec, f, eng);
  return out;
}

}  // namespace igp::lik
