#pragma once

#include <Eigen/Dense>

#include "igp/common.hpp"
#include "igp/likelihood.hpp"
#include "igp/variational.hpp"

// Finite-dimensional Gaussian machinery: RBF kernel, jittered Cholesky,
// conditioning, KL divergence, and the predictive latent of the sparse
// variational posterior. Solves go through triangular factors, never
// explicit inverses.

namespace igp::gp {

/// RBF kernel hyper-parameters, stored unconstrained (softplus bijection).
struct KernelParams {
  double u_lengthscale = 0.0;
  double u_outputscale = 0.0;

  static KernelParams from_values(double lengthscale, double outputscale) {
    if (!(lengthscale > 0.0 && outputscale > 0.0))
      throw std::invalid_argument("kernel: lengthscale and outputscale must be positive");
    KernelParams k;
    k.u_lengthscale = lik::inv_softplus(lengthscale);
    k.u_outputscale = lik::inv_softplus(outputscale);
    return k;
  }
  double lengthscale() const { return lik::softplus(u_lengthscale); }
  double outputscale() const { return lik::softplus(u_outputscale); }
};

/// Constant prior mean m(t) = c.
struct MeanParams {
  double c = 0.0;
};

/// Mean vector and covariance of a finite GP marginal.
struct LatentGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// k(t_i, t_j) = sigma^2 exp(-(t_i - t_j)^2 / (2 l^2)) for all pairs.
Eigen::MatrixXd rbf_kernel(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                           const KernelParams& kp);

/// 1e-6 x mean diagonal, floored away from zero.
double default_jitter(const Eigen::MatrixXd& a);

/// Lower factor L with L L^T = A + jitter I. Escalates the jitter by 10x
/// while factorization fails, up to 1e-2 (relative to the diagonal scale
/// when that is larger); throws NotPositiveDefiniteError past the cap.
Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& a, double jitter);

/// Condition a joint Gaussian over (a, b) on observed b values.
/// The leading dim_a entries of the joint refer to a.
LatentGaussian condition(const LatentGaussian& joint, int dim_a,
                         const Eigen::VectorXd& observed_b);

/// KL(q || p) between Gaussians of equal dimension, exact closed form.
double kl_gaussians(const LatentGaussian& q, const LatentGaussian& p);

/// Marginal of the variational posterior at t_star:
///   mean = c + K*m Kmm^-1 (vm - c 1)
///   cov  = K** - K*m Kmm^-1 Km* + K*m Kmm^-1 S Kmm^-1 Km*
/// Exact for any horizon; no autoregressive sampling involved.
LatentGaussian predictive_latent(const svgp::VariationalState& vs, const KernelParams& kp,
                                 const MeanParams& mp, const Eigen::VectorXd& t_star);

}  // namespace igp::gp
