#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "igp/gp.hpp"
#include "igp/likelihood.hpp"
#include "igp/variational.hpp"

// Sparse variational GP trainer and forecaster. The ELBO expectation term
// is a Monte-Carlo estimate over the marginals of q(f) at the training
// inputs (reparametrized, so it is a smooth deterministic function of the
// parameters at a fixed seed); the KL term is exact. All parameters are
// optimized jointly with Adam; training restarts from scratch on numerical
// failure.

namespace igp::svgp {

struct TrainConfig {
  int max_iters = 100;
  double learning_rate = 0.1;
  int mc_samples = 16;
  int patience = 10;
  double min_rel_improvement = 1e-4;
  int max_restarts = 3;
  std::uint64_t rng_seed = 0;
};

struct FitReport {
  int iterations = 0;
  double final_elbo = 0.0;
  int restarts = 0;
  std::vector<double> elbo_trajectory;
};

struct FitResult {
  VariationalState state;
  gp::KernelParams kernel;
  gp::MeanParams mean;
  lik::LikelihoodSpec likelihood;
  FitReport report;
};

/// Monte-Carlo draws from the forecast distribution: one row per sample,
/// one column per horizon step. scale_factor has already been applied;
/// when rounded is set every entry is an integer.
struct ForecastSamples {
  Eigen::MatrixXd draws;
  double scale_factor = 1.0;
  bool rounded = false;
};

/// All training inputs when T <= m_cap; otherwise m_cap distinct inputs
/// sampled without replacement with weight log(1 + i/T) on position i,
/// sorted ascending.
Eigen::VectorXd init_inducing(const Eigen::VectorXd& t, int m_cap, std::uint64_t rng_seed);

struct ElboValue {
  double value = 0.0;
  double expectation = 0.0;
  double kl = 0.0;
};

ElboValue elbo(const VariationalState& vs, const gp::KernelParams& kp, const gp::MeanParams& mp,
               const lik::LikelihoodSpec& spec, const Eigen::VectorXd& y,
               const Eigen::VectorXd& t, int mc_samples, std::uint64_t rng_seed);

/// Gradient of the fixed-seed ELBO estimate with respect to every
/// unconstrained parameter. d_ls rows/cols above the diagonal are zero;
/// diagonal entries are derivatives in the softplus pre-image of ls(k,k).
struct ElboGradient {
  ElboValue parts;
  double d_c = 0.0;
  double d_u_lengthscale = 0.0;
  double d_u_outputscale = 0.0;
  std::array<double, 2> d_u_lik{0.0, 0.0};
  Eigen::VectorXd d_z;
  Eigen::VectorXd d_vm;
  Eigen::MatrixXd d_ls;
};

ElboGradient elbo_grad(const VariationalState& vs, const gp::KernelParams& kp,
                       const gp::MeanParams& mp, const lik::LikelihoodSpec& spec,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& t, int mc_samples,
                       std::uint64_t rng_seed);

/// Adam over all unconstrained parameters; early stopping on stalled
/// relative ELBO improvement; restart with a fresh seed on non-finite
/// values or factorization failure. Throws TrainingError when every
/// restart fails.
FitResult fit(const Eigen::VectorXd& series, const Eigen::VectorXd& t,
              const lik::LikelihoodSpec& lik0, const TrainConfig& cfg);

/// Joint latent draws at t_star passed through the observation model,
/// then multiplied by scale_factor and optionally rounded to counts.
ForecastSamples forecast(const FitResult& model, const Eigen::VectorXd& t_star,
                         int n_samples = 50'000, bool round_counts = true,
                         double scale_factor = 1.0, std::uint64_t rng_seed = 0);

}  // namespace igp::svgp
