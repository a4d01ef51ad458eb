#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <igp/gp.hpp>

#include "support.hpp"

using namespace igp;
using gp::KernelParams;
using gp::LatentGaussian;

namespace {

Eigen::VectorXd linspace(int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / std::max(1, n - 1);
  return v;
}

Eigen::MatrixXd random_psd(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = nd(eng);
  return b * b.transpose();
}

Eigen::VectorXd random_vec(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(eng);
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("gp");

TEST_CASE("rbf kernel basics") {
  const auto kp = KernelParams::from_values(3.0, 1.7);
  CHECK(kp.lengthscale() == doctest::Approx(3.0));
  CHECK(kp.outputscale() == doctest::Approx(1.7));

  const Eigen::VectorXd t = linspace(8, 1.0, 8.0);
  const Eigen::MatrixXd k = gp::rbf_kernel(t, t, kp);
  for (int i = 0; i < 8; ++i) CHECK(k(i, i) == doctest::Approx(1.7));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  Eigen::VectorXd far(1), origin(1);
  far[0] = 1e4;
  origin[0] = 0.0;
  CHECK(gp::rbf_kernel(origin, far, kp)(0, 0) < 1e-300);

  // PSD: min eigenvalue of a 50-point Gram matrix stays above -1e-8.
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> unif(0.0, 50.0);
  Eigen::VectorXd tr(50);
  for (int i = 0; i < 50; ++i) tr[i] = unif(eng);
  const Eigen::MatrixXd gram = gp::rbf_kernel(tr, tr, kp);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("cholesky with jitter escalation") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd l = gp::cholesky_psd(eye, 1e-6);
  CHECK((l - eye).cwiseAbs().maxCoeff() < 1e-6);

  std::mt19937_64 eng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd a = random_psd(6, eng);
    const Eigen::MatrixXd lo = gp::cholesky_psd(a, 1e-10);
    CHECK((lo * lo.transpose() - a).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, a.norm()));
  }

  // Rank deficient: outer product of one vector.
  const Eigen::VectorXd v = random_vec(5, eng);
  const Eigen::MatrixXd rank1 = v * v.transpose();
  CHECK_NOTHROW(gp::cholesky_psd(rank1, gp::default_jitter(rank1)));

  Eigen::MatrixXd indef = eye;
  indef(2, 2) = -5.0;
  CHECK_THROWS_AS(gp::cholesky_psd(indef, 1e-10), NotPositiveDefiniteError);
  CHECK_THROWS_AS(gp::cholesky_psd(Eigen::MatrixXd::Ones(3, 2), 1e-6), std::invalid_argument);
}

TEST_CASE("gaussian conditioning") {
  std::mt19937_64 eng(11);

  // Independent blocks leave the a-marginal untouched.
  {
    LatentGaussian joint;
    joint.mean = random_vec(4, eng);
    joint.cov = Eigen::MatrixXd::Zero(4, 4);
    joint.cov.topLeftCorner(2, 2) = random_psd(2, eng) + Eigen::MatrixXd::Identity(2, 2);
    joint.cov.bottomRightCorner(2, 2) = random_psd(2, eng) + Eigen::MatrixXd::Identity(2, 2);
    const auto cond = gp::condition(joint, 2, random_vec(2, eng));
    CHECK((cond.mean - joint.mean.head(2)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((cond.cov - joint.cov.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-5);
  }

  // Bivariate closed form.
  {
    LatentGaussian joint;
    joint.mean = Eigen::VectorXd::Zero(2);
    joint.mean << 1.0, -2.0;
    joint.cov = Eigen::MatrixXd(2, 2);
    joint.cov << 2.0, 0.6, 0.6, 1.5;
    Eigen::VectorXd obs(1);
    obs << 0.5;
    const auto cond = gp::condition(joint, 1, obs);
    CHECK(cond.mean[0] == doctest::Approx(1.0 + 0.6 / 1.5 * (0.5 - -2.0)).epsilon(1e-5));
    CHECK(cond.cov(0, 0) == doctest::Approx(2.0 - 0.6 * 0.6 / 1.5).epsilon(1e-5));
  }

  // Conditioning on the mean of b leaves the mean of a unchanged.
  {
    LatentGaussian joint;
    joint.mean = random_vec(5, eng);
    joint.cov = random_psd(5, eng) + Eigen::MatrixXd::Identity(5, 5);
    const auto cond = gp::condition(joint, 3, joint.mean.tail(2));
    CHECK((cond.mean - joint.mean.head(3)).cwiseAbs().maxCoeff() < 1e-10);
  }

  // Marginalize-then-condition equals condition-then-marginalize.
  for (int k = 0; k < 25; ++k) {
    LatentGaussian joint;  // over (a1, a2, b) with dims (1, 1, 2)
    joint.mean = random_vec(4, eng);
    joint.cov = random_psd(4, eng) + Eigen::MatrixXd::Identity(4, 4);
    const Eigen::VectorXd obs = random_vec(2, eng);

    LatentGaussian dropped;  // (a1, b)
    dropped.mean = Eigen::VectorXd(3);
    dropped.mean << joint.mean[0], joint.mean[2], joint.mean[3];
    dropped.cov = Eigen::MatrixXd(3, 3);
    const std::array<int, 3> keep{0, 2, 3};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dropped.cov(i, j) = joint.cov(keep[i], keep[j]);

    const auto path1 = gp::condition(dropped, 1, obs);
    const auto path2 = gp::condition(joint, 2, obs);
    CHECK(std::abs(path1.mean[0] - path2.mean[0]) < 1e-10);
    CHECK(std::abs(path1.cov(0, 0) - path2.cov(0, 0)) < 1e-10);
  }
}

TEST_CASE("kl divergence") {
  std::mt19937_64 eng(13);

  LatentGaussian a;
  a.mean = random_vec(3, eng);
  a.cov = random_psd(3, eng) + Eigen::MatrixXd::Identity(3, 3);
  CHECK(gp::kl_gaussians(a, a) < 1e-10);

  LatentGaussian q1, p1;
  q1.mean = Eigen::VectorXd::Zero(1);
  p1.mean = Eigen::VectorXd::Ones(1);
  q1.cov = p1.cov = Eigen::MatrixXd::Ones(1, 1);
  CHECK(gp::kl_gaussians(q1, p1) == doctest::Approx(0.5).epsilon(1e-5));

  for (int k = 0; k < 30; ++k) {
    LatentGaussian q, p;
    q.mean = random_vec(4, eng);
    p.mean = random_vec(4, eng);
    q.cov = random_psd(4, eng) + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    p.cov = random_psd(4, eng) + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    CHECK(gp::kl_gaussians(q, p) >= 0.0);
  }
}

TEST_CASE("predictive latent") {
  const auto kp = KernelParams::from_values(2.5, 1.3);
  const gp::MeanParams mp{0.4};

  // Concentrated q(u) at the inducing inputs interpolates vm.
  {
    svgp::VariationalState vs;
    vs.z = linspace(6, 1.0, 6.0);
    vs.vm = random_vec(6, *new std::mt19937_64(21));
    vs.ls = 1e-8 * Eigen::MatrixXd::Identity(6, 6);
    const auto lat = gp::predictive_latent(vs, kp, mp, vs.z);
    CHECK((lat.mean - vs.vm).cwiseAbs().maxCoeff() < 1e-3);
  }

  // Far from everything the variance reverts to the outputscale.
  {
    svgp::VariationalState vs;
    vs.z = linspace(5, 1.0, 5.0);
    vs.vm = Eigen::VectorXd::Ones(5);
    vs.ls = Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd far(1);
    far[0] = 1e5;
    const auto lat = gp::predictive_latent(vs, kp, mp, far);
    CHECK(lat.mean[0] == doctest::Approx(mp.c));
    CHECK(lat.cov(0, 0) == doctest::Approx(kp.outputscale()).epsilon(1e-8));
  }
}

TEST_CASE("predictive latent reproduces the exact gp posterior") {
  // Gaussian surrogate likelihood on a 5-point toy, inducing points at the
  // training inputs: setting q(u) to the exact posterior of u makes the
  // sparse predictive identical to brute-force conditioning.
  std::mt19937_64 eng(31);
  const auto kp = KernelParams::from_values(2.0, 1.5);
  const gp::MeanParams mp{0.3};
  const double noise = 0.05;

  const Eigen::VectorXd t = linspace(5, 1.0, 5.0);
  const Eigen::VectorXd y = random_vec(5, eng);
  const Eigen::VectorXd t_star = linspace(4, 6.0, 9.0);

  const Eigen::MatrixXd k_tt = gp::rbf_kernel(t, t, kp);
  const Eigen::MatrixXd k_st = gp::rbf_kernel(t_star, t, kp);
  const Eigen::MatrixXd k_ss = gp::rbf_kernel(t_star, t_star, kp);
  const Eigen::MatrixXd noisy = k_tt + noise * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd noisy_inv = noisy.inverse();
  const Eigen::VectorXd resid = y - Eigen::VectorXd::Constant(5, mp.c);

  // Brute-force exact posterior at t_star.
  const Eigen::VectorXd mean_star =
      Eigen::VectorXd::Constant(4, mp.c) + k_st * noisy_inv * resid;
  const Eigen::MatrixXd cov_star = k_ss - k_st * noisy_inv * k_st.transpose();

  // Exact posterior of u = f(t) feeds the variational state.
  svgp::VariationalState vs;
  vs.z = t;
  vs.vm = Eigen::VectorXd::Constant(5, mp.c) + k_tt * noisy_inv * resid;
  const Eigen::MatrixXd s_u = k_tt - k_tt * noisy_inv * k_tt;
  vs.ls = gp::cholesky_psd(s_u, 1e-12);
  const auto lat = gp::predictive_latent(vs, kp, mp, t_star);

  CHECK((lat.mean - mean_star).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((lat.cov - cov_star).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_SUITE_END();
