#pragma once

#include <cstdint>
#include <vector>

#include "igp/common.hpp"

// Tweedie distribution with power rho in (1, 2): a compound Poisson-Gamma
// with a point mass at zero and a continuous density on y > 0. The density
// normalizer A(y) is an infinite series sum_j V(j) evaluated by truncation:
// the terms are log-concave in j, so a scan outward from the peak j_max
// finds a window [j_lo, j_hi] whose omitted tails are below e^-37 relative
// to the peak term.

namespace igp::tweedie {

/// (mu, phi, rho) parametrization: mean, dispersion, power.
/// Var[Y] = phi * mu^rho.
struct TweedieParams {
  double mu;
  double phi;
  double rho;

  TweedieParams(double mu_, double phi_, double rho_) : mu(mu_), phi(phi_), rho(rho_) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("tweedie: mu must be positive");
    if (!(phi > 0.0) || !std::isfinite(phi)) throw std::invalid_argument("tweedie: phi must be positive");
    if (!(rho > 1.0 && rho < 2.0)) throw std::invalid_argument("tweedie: rho must lie in (1, 2)");
  }
};

/// (lambda, alpha, beta) parametrization: Poisson rate, Gamma shape, Gamma rate.
struct CompoundParams {
  double lambda;
  double alpha;
  double beta;

  CompoundParams(double lambda_, double alpha_, double beta_)
      : lambda(lambda_), alpha(alpha_), beta(beta_) {
    if (!(lambda > 0.0 && alpha > 0.0 && beta > 0.0))
      throw std::invalid_argument("tweedie: compound parameters must be positive");
  }
};

CompoundParams to_compound(const TweedieParams& p);
TweedieParams from_compound(const CompoundParams& c);

/// State of the series truncation for A(y) at a given (y, params).
///
/// z may round to +inf for extreme but valid inputs (alpha large); the scan
/// itself works on log_z. j_lo <= j_max <= j_hi, and the first term outside
/// either bound is already below e^-37 relative to V(j_max).
struct TruncationWorkspace {
  double z;        // y^alpha (rho-1)^-alpha / (phi^(1+alpha) (2-rho))
  double log_z;
  double c_w;      // log z + (1+alpha) - alpha log alpha
  double alpha;
  std::int64_t j_max;
  std::int64_t j_lo;
  std::int64_t j_hi;
  static constexpr double log_threshold = 37.0;
};

/// Locate the summation window for A(y). Throws NumericRangeError when the
/// peak index or log z is outside the range the scan can handle.
TruncationWorkspace truncate_series(double y, const TweedieParams& p);

/// log V(j) = j log z - lgamma(1+j) - lgamma(alpha j).
double log_v(std::int64_t j, const TruncationWorkspace& ws);

/// Stirling-form derivative d log V / dj ~ log z - log j - alpha log(alpha j);
/// exp of it at j_lo-1 / j_hi+1 is the geometric rate bounding the omitted tails.
double log_v_slope(double j, const TruncationWorkspace& ws);

/// P(Y = 0) = exp(-lambda).
double prob_zero(const TweedieParams& p);

/// Log density; the point mass at y = 0, the continuous density for y > 0.
double log_density(double y, const TweedieParams& p);

struct Grad {
  double d_mu;
  double d_phi;
  double d_rho;
};

/// Partial derivatives of log_density in (mu, phi, rho). All three are exact:
/// d/dmu touches only the exponential part, d/dphi and d/drho differentiate
/// the series term-wise under the same truncation window (d/drho needs
/// digamma(alpha j) for the Gamma-function factor).
Grad log_density_grad(double y, const TweedieParams& p);

/// n compound Poisson-Gamma draws; N = 0 yields exactly 0.
std::vector<double> sample_tweedie(const TweedieParams& p, int n, std::uint64_t rng_seed);
double sample_tweedie1(const TweedieParams& p, std::mt19937_64& eng);

/// The density implied by the Tweedie loss: A(y) = 1 and phi = 1.
/// Returns y mu^(1-rho)/(1-rho) - mu^(2-rho)/(2-rho). Normalized it is a
/// negative exponential with rate mu^(1-rho)/(rho-1).
double approx_log_density(double y, double mu, double rho);

}  // namespace igp::tweedie
