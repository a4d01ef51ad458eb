#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "igp/common.hpp"
#include "igp/tweedie.hpp"

// Observation models on top of the latent GP value f. The likelihood
// parameter linked to f is always softplus(f); the remaining
// hyper-parameters theta_lik are stored unconstrained and are shared by
// every time point of one series.

namespace igp::lik {

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Overflow-safe log(1 + e^x).
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Inverse of softplus: log(e^y - 1).
inline double inv_softplus(double y) {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

/// Negative binomial with pmf C(y+r-1, y) p^r (1-p)^y for real r > 0:
/// mean r(1-p)/p, variance r(1-p)/p^2. Mean and variance grow linearly in r
/// and p controls the overdispersion.
struct NegBinParams {
  double r;
  double p_succ;

  NegBinParams(double r_, double p_) : r(r_), p_succ(p_) {
    if (!(r > 0.0)) throw std::invalid_argument("negbin: r must be positive");
    if (!(p_succ > 0.0 && p_succ < 1.0)) throw std::invalid_argument("negbin: p must be in (0,1)");
  }
};

double negbin_log_pmf(double y, const NegBinParams& nb);
// d log pmf / dr at fixed p.
double negbin_log_pmf_dr(double y, const NegBinParams& nb);

enum class Kind { NegBin, Tweedie, TweedieApprox };

/// Likelihood choice plus its hyper-parameters theta_lik, stored as
/// unconstrained reals with fixed bijections:
///   NegBin:        p    = sigmoid(u0)
///   Tweedie:       phi  = softplus(u0) + 1e-6
///                  rho  = (1 + 1e-4) + (1 - 2e-4) * sigmoid(u1)
///   TweedieApprox: rho  = same bijection on u0
struct LikelihoodSpec {
  Kind kind = Kind::Tweedie;
  std::array<double, 2> u{0.0, 0.0};

  static constexpr double rho_lo = 1.0 + 1e-4;
  static constexpr double rho_width = 1.0 - 2e-4;

  static LikelihoodSpec negbin(double p_succ);
  static LikelihoodSpec tweedie(double phi, double rho);
  static LikelihoodSpec tweedie_approx(double rho);

  int n_params() const { return kind == Kind::Tweedie ? 2 : 1; }

  double p_succ() const { return sigmoid(u[0]); }
  double phi() const { return softplus(u[0]) + 1e-6; }
  double rho() const {
    const double uu = kind == Kind::Tweedie ? u[1] : u[0];
    return rho_lo + rho_width * sigmoid(uu);
  }
};

double loglik_point(const LikelihoodSpec& spec, double y, double f);

/// d loglik / df; equals the mu- (or r-) derivative times sigmoid(f).
double loglik_grad_f(const LikelihoodSpec& spec, double y, double f);

/// Value plus derivatives in f and in the unconstrained theta_lik.
struct PointEval {
  double loglik = 0.0;
  double d_f = 0.0;
  std::array<double, 2> d_u{0.0, 0.0};
};
PointEval loglik_point_eval(const LikelihoodSpec& spec, double y, double f);

/// One draw from the observation distribution at latent value f.
double sample_obs1(const LikelihoodSpec& spec, double f, std::mt19937_64& eng);
std::vector<double> sample_obs(const LikelihoodSpec& spec, double f, int n, std::uint64_t rng_seed);

}  // namespace igp::lik
