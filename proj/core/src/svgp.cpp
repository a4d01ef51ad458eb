#include "igp/svgp.hpp"

#include <algorithm>
#include <numeric>

namespace igp::svgp {
namespace {

constexpr double kVarFloor = 1e-12;

struct Marginals {
  Eigen::MatrixXd k_mm;      // without jitter
  Eigen::MatrixXd k_mt;
  Eigen::MatrixXd l_k;       // chol(k_mm + jitter I)
  Eigen::MatrixXd c;         // (k_mm + jitter I)^-1 k_mt
  Eigen::MatrixXd d;         // ls^T c
  Eigen::VectorXd one_minus_csum;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;       // floored
  Eigen::VectorXd var_raw;
  double jitter = 0.0;
};

Marginals marginals(const VariationalState& vs, const gp::KernelParams& kp,
                    const gp::MeanParams& mp, const Eigen::VectorXd& t) {
  Marginals w;
  const int m = vs.num_inducing();
  const Eigen::Index n = t.size();
  w.k_mm = gp::rbf_kernel(vs.z, vs.z, kp);
  w.k_mt = gp::rbf_kernel(vs.z, t, kp);
  w.jitter = gp::default_jitter(w.k_mm);
  w.l_k = gp::cholesky_psd(w.k_mm, w.jitter);

  w.c = w.l_k.triangularView<Eigen::Lower>().solve(w.k_mt);
  const Eigen::VectorXd q_diag = w.c.colwise().squaredNorm();  // diag(Ktm Kmm^-1 Kmt)
  w.l_k.transpose().triangularView<Eigen::Upper>().solveInPlace(w.c);
  w.d = vs.ls.transpose() * w.c;

  w.one_minus_csum = Eigen::VectorXd::Ones(n) - w.c.colwise().sum().transpose();
  w.mean = mp.c * w.one_minus_csum + w.c.transpose() * vs.vm;
  const double s2 = kp.outputscale();
  w.var_raw = Eigen::VectorXd::Constant(n, s2) - q_diag + w.d.colwise().squaredNorm().transpose();
  w.var = w.var_raw.cwiseMax(kVarFloor);
  return w;
}

double kl_value(const VariationalState& vs, const gp::MeanParams& mp,
                const Eigen::MatrixXd& k_mm) {
  gp::LatentGaussian q{vs.vm, vs.s()};
  gp::LatentGaussian p{Eigen::VectorXd::Constant(vs.num_inducing(), mp.c), k_mm};
  return gp::kl_gaussians(q, p);
}

Eigen::MatrixXd draw_eps(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto eng = rng::make_engine(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd eps(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) eps(i, j) = nd(eng);
  return eps;
}

// Flat parameter layout used by the optimizer:
// [c, u_len, u_out, u_lik..., z..., vm..., ls lower triangle row-major
//  with the diagonal in softplus pre-image].
struct ParamPack {
  int m = 0;
  int n_lik = 0;

  int size() const { return 3 + n_lik + 2 * m + m * (m + 1) / 2; }

  Eigen::VectorXd pack(const VariationalState& vs, const gp::KernelParams& kp,
                       const gp::MeanParams& mp, const lik::LikelihoodSpec& spec) const {
    Eigen::VectorXd x(size());
    x[0] = mp.c;
    x[1] = kp.u_lengthscale;
    x[2] = kp.u_outputscale;
    int at = 3;
    for (int i = 0; i < n_lik; ++i) x[at++] = spec.u[i];
    for (int i = 0; i < m; ++i) x[at++] = vs.z[i];
    for (int i = 0; i < m; ++i) x[at++] = vs.vm[i];
    for (int r = 0; r < m; ++r)
      for (int col = 0; col <= r; ++col)
        x[at++] = (r == col) ? lik::inv_softplus(vs.ls(r, col)) : vs.ls(r, col);
    return x;
  }

  void unpack(const Eigen::VectorXd& x, VariationalState& vs, gp::KernelParams& kp,
              gp::MeanParams& mp, lik::LikelihoodSpec& spec) const {
    mp.c = x[0];
    kp.u_lengthscale = x[1];
    kp.u_outputscale = x[2];
    int at = 3;
    for (int i = 0; i < n_lik; ++i) spec.u[i] = x[at++];
    vs.z.resize(m);
    vs.vm.resize(m);
    for (int i = 0; i < m; ++i) vs.z[i] = x[at++];
    for (int i = 0; i < m; ++i) vs.vm[i] = x[at++];
    vs.ls = Eigen::MatrixXd::Zero(m, m);
    for (int r = 0; r < m; ++r)
      for (int col = 0; col <= r; ++col) {
        const double v = x[at++];
        vs.ls(r, col) = (r == col) ? lik::softplus(v) : v;
      }
  }

  Eigen::VectorXd pack_grad(const ElboGradient& g) const {
    Eigen::VectorXd x(size());
    x[0] = g.d_c;
    x[1] = g.d_u_lengthscale;
    x[2] = g.d_u_outputscale;
    int at = 3;
    for (int i = 0; i < n_lik; ++i) x[at++] = g.d_u_lik[i];
    for (int i = 0; i < m; ++i) x[at++] = g.d_z[i];
    for (int i = 0; i < m; ++i) x[at++] = g.d_vm[i];
    for (int r = 0; r < m; ++r)
      for (int col = 0; col <= r; ++col) x[at++] = g.d_ls(r, col);
    return x;
  }
};

}  // namespace

Eigen::VectorXd init_inducing(const Eigen::VectorXd& t, int m_cap, std::uint64_t rng_seed) {
  const Eigen::Index n = t.size();
  if (n < 1) throw std::invalid_argument("init_inducing: empty input");
  Eigen::VectorXd sorted = t;
  std::sort(sorted.data(), sorted.data() + n);
  if (n <= m_cap) return sorted;

  // Weighted sampling without replacement (exponential-key one-pass):
  // position i (1-based) has weight log(1 + i/n), favoring recent inputs.
  auto eng = rng::make_engine(rng_seed);
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
  std::vector<std::pair<double, Eigen::Index>> keys(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::log1p(static_cast<double>(i + 1) / static_cast<double>(n));
    keys[i] = {std::log(unif(eng)) / w, i};
  }
  std::partial_sort(keys.begin(), keys.begin() + m_cap, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  Eigen::VectorXd z(m_cap);
  for (int k = 0; k < m_cap; ++k) z[k] = sorted[keys[k].second];
  std::sort(z.data(), z.data() + m_cap);
  return z;
}

ElboValue elbo(const VariationalState& vs, const gp::KernelParams& kp, const gp::MeanParams& mp,
               const lik::LikelihoodSpec& spec, const Eigen::VectorXd& y,
               const Eigen::VectorXd& t, int mc_samples, std::uint64_t rng_seed) {
  if (y.size() == 0 || y.size() != t.size()) throw std::invalid_argument("elbo: data mismatch");
  const Marginals w = marginals(vs, kp, mp, t);
  const Eigen::MatrixXd eps = draw_eps(mc_samples, t.size(), rng_seed);

  double acc = 0.0;
  for (int s = 0; s < mc_samples; ++s)
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double f = w.mean[i] + std::sqrt(w.var[i]) * eps(s, i);
      acc += lik::loglik_point(spec, y[i], f);
    }
  ElboValue out;
  out.expectation = acc / mc_samples;
  out.kl = kl_value(vs, mp, w.k_mm);
  out.value = out.expectation - out.kl;
  return out;
}

ElboGradient elbo_grad(const VariationalState& vs, const gp::KernelParams& kp,
                       const gp::MeanParams& mp, const lik::LikelihoodSpec& spec,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& t, int mc_samples,
                       std::uint64_t rng_seed) {
  if (y.size() == 0 || y.size() != t.size()) throw std::invalid_argument("elbo_grad: data mismatch");
  const int m = vs.num_inducing();
  const Eigen::Index n = t.size();
  const Marginals w = marginals(vs, kp, mp, t);
  const Eigen::MatrixXd eps = draw_eps(mc_samples, n, rng_seed);

  ElboGradient g;
  g.d_z = Eigen::VectorXd::Zero(m);
  g.d_vm = Eigen::VectorXd::Zero(m);
  g.d_ls = Eigen::MatrixXd::Zero(m, m);

  // Expectation pass: accumulate value, dE/dmean, dE/dvar, dE/dtheta.
  Eigen::VectorXd gm = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd gv = Eigen::VectorXd::Zero(n);
  double acc = 0.0;
  for (int s = 0; s < mc_samples; ++s)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sd = std::sqrt(w.var[i]);
      const double f = w.mean[i] + sd * eps(s, i);
      const auto pe = lik::loglik_point_eval(spec, y[i], f);
      acc += pe.loglik;
      gm[i] += pe.d_f;
      if (w.var_raw[i] > kVarFloor) gv[i] += pe.d_f * eps(s, i) / (2.0 * sd);
      g.d_u_lik[0] += pe.d_u[0];
      g.d_u_lik[1] += pe.d_u[1];
    }
  const double inv_s = 1.0 / mc_samples;
  gm *= inv_s;
  gv *= inv_s;
  g.d_u_lik[0] *= inv_s;
  g.d_u_lik[1] *= inv_s;

  g.parts.expectation = acc * inv_s;
  g.parts.kl = kl_value(vs, mp, w.k_mm);
  g.parts.value = g.parts.expectation - g.parts.kl;

  // Mean and variance paths.
  g.d_c += gm.dot(w.one_minus_csum);
  g.d_vm += w.c * gm;

  const Eigen::VectorXd vm_minus_c = vs.vm.array() - mp.c;
  Eigen::MatrixXd grad_c_mat = vm_minus_c * gm.transpose();          // mean path
  grad_c_mat.noalias() += vs.ls * (2.0 * w.d * gv.asDiagonal());     // s path
  grad_c_mat.noalias() -= w.k_mt * gv.asDiagonal();                  // q path
  Eigen::MatrixXd grad_ls = 2.0 * w.c * gv.asDiagonal() * w.d.transpose();
  Eigen::MatrixXd grad_kmt = -(w.c * gv.asDiagonal());

  // Back through C = M^-1 Kmt.
  Eigen::MatrixXd c_hat = w.l_k.triangularView<Eigen::Lower>().solve(grad_c_mat);
  w.l_k.transpose().triangularView<Eigen::Upper>().solveInPlace(c_hat);
  grad_kmt += c_hat;
  Eigen::MatrixXd grad_m = -c_hat * w.c.transpose();

  double d_s2 = gv.sum();  // k(t,t) diagonal term of the marginal variance

  // KL path (subtracted from the ELBO).
  {
    Eigen::MatrixXd minv = Eigen::MatrixXd::Identity(m, m);
    w.l_k.triangularView<Eigen::Lower>().solveInPlace(minv);
    w.l_k.transpose().triangularView<Eigen::Upper>().solveInPlace(minv);

    const Eigen::VectorXd d_vec = Eigen::VectorXd::Constant(m, mp.c) - vs.vm;
    const Eigen::VectorXd w_vec = minv * d_vec;
    const Eigen::MatrixXd y_mat = minv * vs.ls;

    g.d_c -= w_vec.sum();
    g.d_vm += w_vec;
    grad_m -= 0.5 * (minv - y_mat * y_mat.transpose() - w_vec * w_vec.transpose());

    Eigen::MatrixXd grad_ls_kl = y_mat;
    grad_ls_kl.diagonal() -= vs.ls.diagonal().cwiseInverse();
    grad_ls -= grad_ls_kl;
  }

  // Lower-triangular projection; diagonal through the softplus bijection.
  for (int r = 0; r < m; ++r) {
    for (int col = 0; col <= r; ++col) {
      double val = grad_ls(r, col);
      if (r == col) val *= lik::sigmoid(lik::inv_softplus(vs.ls(r, r)));
      g.d_ls(r, col) = val;
    }
  }

  // Kernel-parameter and inducing-input chain rule over both Gram blocks.
  const double ell = kp.lengthscale();
  const double s2 = kp.outputscale();
  const double inv_l2 = 1.0 / (ell * ell);
  const double inv_l3 = inv_l2 / ell;
  double d_len = 0.0;
  if (s2 > 1e-6) d_s2 += 1e-6 * grad_m.trace();  // jitter = 1e-6 x mean diagonal
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double diff = vs.z[i] - vs.z[j];
      const double k = w.k_mm(i, j);
      const double gmm = grad_m(i, j);
      d_s2 += gmm * k / s2;
      d_len += gmm * k * diff * diff * inv_l3;
      const double dk_dzi = -k * diff * inv_l2;  // entry (i,j): z_i slot; z_j slot is the negative
      g.d_z[i] += gmm * dk_dzi;
      g.d_z[j] -= gmm * dk_dzi;
    }
  for (int i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = vs.z[i] - t[j];
      const double k = w.k_mt(i, j);
      const double gkt = grad_kmt(i, j);
      d_s2 += gkt * k / s2;
      d_len += gkt * k * diff * diff * inv_l3;
      g.d_z[i] -= gkt * k * diff * inv_l2;
    }

  g.d_u_lengthscale = d_len * lik::sigmoid(kp.u_lengthscale);
  g.d_u_outputscale = d_s2 * lik::sigmoid(kp.u_outputscale);
  return g;
}

namespace {

struct Adam {
  Eigen::VectorXd m1, m2;
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int step_count = 0;

  explicit Adam(int dim, double lr_) : m1(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)), lr(lr_) {}

  void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    ++step_count;
    m1 = beta1 * m1 + (1.0 - beta1) * grad;
    m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, step_count);
    const double c2 = 1.0 - std::pow(beta2, step_count);
    x -= (lr / c1) * m1.cwiseQuotient(((m2 / c2).cwiseSqrt().array() + eps).matrix());
  }
};

lik::LikelihoodSpec default_init(const lik::LikelihoodSpec& lik0) { return lik0; }

}  // namespace

FitResult fit(const Eigen::VectorXd& series, const Eigen::VectorXd& t,
              const lik::LikelihoodSpec& lik0, const TrainConfig& cfg) {
  if (series.size() < 2 || series.size() != t.size())
    throw std::invalid_argument("fit: series must have length >= 2 and match t");
  const auto n = static_cast<double>(series.size());

  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    const std::uint64_t seed = cfg.rng_seed + static_cast<std::uint64_t>(attempt);

    FitResult res;
    res.state.z = init_inducing(t, 200, seed);
    const int m = res.state.num_inducing();
    res.state.vm = Eigen::VectorXd::Zero(m);
    res.state.ls = Eigen::MatrixXd::Identity(m, m);
    res.kernel = gp::KernelParams::from_values(std::max(2.0, n / 10.0), 1.0);
    res.mean = gp::MeanParams{0.0};
    res.likelihood = default_init(lik0);
    res.report.restarts = attempt;

    ParamPack pack{m, res.likelihood.n_params()};
    Eigen::VectorXd x = pack.pack(res.state, res.kernel, res.mean, res.likelihood);
    Adam adam(pack.size(), cfg.learning_rate);

    auto sub_eng = rng::make_engine(seed ^ 0x5eedf17ull);
    double best = -std::numeric_limits<double>::infinity();
    int stalled = 0;
    bool failed = false;

    for (int it = 0; it < cfg.max_iters; ++it) {
      ElboGradient eg;
      try {
        eg = elbo_grad(res.state, res.kernel, res.mean, res.likelihood, series, t,
                       cfg.mc_samples, sub_eng());
      } catch (const NotPositiveDefiniteError&) {
        failed = true;
      } catch (const NumericRangeError&) {
        failed = true;
      }
      if (!failed) {
        const Eigen::VectorXd grad = pack.pack_grad(eg);
        if (!std::isfinite(eg.parts.value) || !grad.allFinite()) failed = true;
        if (!failed) {
          res.report.elbo_trajectory.push_back(eg.parts.value);
          res.report.iterations = it + 1;
          res.report.final_elbo = eg.parts.value;
          const bool improved =
              !std::isfinite(best) ||
              eg.parts.value > best + cfg.min_rel_improvement * std::max(1.0, std::abs(best));
          if (improved) {
            best = eg.parts.value;
            stalled = 0;
          } else if (++stalled >= cfg.patience) {
            break;
          }
          adam.step(x, -grad);
          pack.unpack(x, res.state, res.kernel, res.mean, res.likelihood);
        }
      }
      if (failed) break;
    }
    if (!failed) return res;
  }
  throw TrainingError("fit: optimization failed after all restarts");
}

ForecastSamples forecast(const FitResult& model, const Eigen::VectorXd& t_star, int n_samples,
                         bool round_counts, double scale_factor, std::uint64_t rng_seed) {
  if (n_samples < 1 || t_star.size() < 1) throw std::invalid_argument("forecast: bad arguments");
  if (!(scale_factor > 0.0)) throw std::invalid_argument("forecast: scale factor must be positive");
  const Eigen::Index h = t_star.size();
  const gp::LatentGaussian lat =
      gp::predictive_latent(model.state, model.kernel, model.mean, t_star);
  const Eigen::MatrixXd l = gp::cholesky_psd(lat.cov, gp::default_jitter(lat.cov));

  auto eng = rng::make_engine(rng_seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  ForecastSamples out;
  out.scale_factor = scale_factor;
  out.rounded = round_counts;
  out.draws.resize(n_samples, h);
  Eigen::VectorXd epsv(h);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < h; ++i) epsv[i] = nd(eng);
    const Eigen::VectorXd f = lat.mean + l * epsv;
    for (Eigen::Index i = 0; i < h; ++i) {
      double v = lik::sample_obs1(model.likelihood, f[i], eng) * scale_factor;
      if (round_counts) v = std::round(v);
      out.draws(s, i) = v;
    }
  }
  return out;
}

}  // namespace igp::svgp
