#include "igp/gp.hpp"

namespace igp::gp {

Eigen::MatrixXd rbf_kernel(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2,
                           const KernelParams& kp) {
  const double l2 = 2.0 * kp.lengthscale() * kp.lengthscale();
  const double s2 = kp.outputscale();
  Eigen::MatrixXd k(t1.size(), t2.size());
  for (Eigen::Index i = 0; i < t1.size(); ++i)
    for (Eigen::Index j = 0; j < t2.size(); ++j) {
      const double d = t1[i] - t2[j];
      k(i, j) = s2 * std::exp(-d * d / l2);
    }
  return k;
}

double default_jitter(const Eigen::MatrixXd& a) {
  const double md = a.rows() > 0 ? a.diagonal().cwiseAbs().mean() : 1.0;
  return 1e-6 * std::max(md, 1e-6);
}

Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& a, double jitter) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_psd: matrix must be square");
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().mean());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("cholesky_psd: matrix must be symmetric");

  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  const double cap = 1e-2 * scale;
  double j = std::max(jitter, 0.0);
  while (true) {
    Eigen::MatrixXd work = sym;
    work.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    j = j > 0.0 ? 10.0 * j : 1e-10 * scale;
    if (j > cap) throw NotPositiveDefiniteError("cholesky_psd: jitter escalation exhausted");
  }
}

LatentGaussian condition(const LatentGaussian& joint, int dim_a,
                         const Eigen::VectorXd& observed_b) {
  const int n = joint.dim();
  const int dim_b = n - dim_a;
  if (dim_a < 0 || dim_b < 1 || observed_b.size() != dim_b)
    throw std::invalid_argument("condition: inconsistent partition sizes");

  const auto mean_a = joint.mean.head(dim_a);
  const auto mean_b = joint.mean.tail(dim_b);
  const Eigen::MatrixXd c_aa = joint.cov.topLeftCorner(dim_a, dim_a);
  const Eigen::MatrixXd c_ab = joint.cov.topRightCorner(dim_a, dim_b);
  const Eigen::MatrixXd c_bb = joint.cov.bottomRightCorner(dim_b, dim_b);

  const Eigen::MatrixXd l = cholesky_psd(c_bb, default_jitter(c_bb));
  // gain = C_ab C_bb^-1, via two triangular solves on the transpose.
  Eigen::MatrixXd w = l.triangularView<Eigen::Lower>().solve(c_ab.transpose());
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(w);

  LatentGaussian out;
  out.mean = mean_a + w.transpose() * (observed_b - mean_b);
  out.cov = c_aa - w.transpose() * c_ab.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

double kl_gaussians(const LatentGaussian& q, const LatentGaussian& p) {
  const int n = q.dim();
  if (p.dim() != n) throw std::invalid_argument("kl_gaussians: dimension mismatch");

  const Eigen::MatrixXd lp = cholesky_psd(p.cov, default_jitter(p.cov));
  const Eigen::MatrixXd lq = cholesky_psd(q.cov, default_jitter(q.cov));

  // tr(P^-1 Q) = ||Lp^-1 Lq||_F^2, quadratic term via one solve.
  const Eigen::MatrixXd w = lp.triangularView<Eigen::Lower>().solve(lq);
  const Eigen::VectorXd v = lp.triangularView<Eigen::Lower>().solve(p.mean - q.mean);

  const double logdet_p = 2.0 * lp.diagonal().array().log().sum();
  const double logdet_q = 2.0 * lq.diagonal().array().log().sum();
  const double kl =
      0.5 * (w.squaredNorm() + v.squaredNorm() - n + logdet_p - logdet_q);
  return std::max(kl, 0.0);
}

LatentGaussian predictive_latent(const svgp::VariationalState& vs, const KernelParams& kp,
                                 const MeanParams& mp, const Eigen::VectorXd& t_star) {
  const int m = vs.num_inducing();
  const Eigen::MatrixXd k_mm = rbf_kernel(vs.z, vs.z, kp);
  const Eigen::MatrixXd k_ms = rbf_kernel(vs.z, t_star, kp);
  const Eigen::MatrixXd k_ss = rbf_kernel(t_star, t_star, kp);

  const Eigen::MatrixXd l = cholesky_psd(k_mm, default_jitter(k_mm));
  // c = Kmm^-1 Km*
  Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(k_ms);
  const Eigen::MatrixXd b = c;  // L^-1 Km*
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(c);

  const Eigen::MatrixXd d = vs.ls.transpose() * c;

  LatentGaussian out;
  out.mean = Eigen::VectorXd::Constant(t_star.size(), mp.c) +
             c.transpose() * (vs.vm - Eigen::VectorXd::Constant(m, mp.c));
  out.cov = k_ss - b.transpose() * b + d.transpose() * d;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace igp::gp
