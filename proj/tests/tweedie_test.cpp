#include <doctest.h>

#include <igp/tweedie.hpp>

#include "support.hpp"

using namespace igp;
using tweedie::TweedieParams;

namespace {

const std::vector<double> kMuGrid{0.5, 1.0, 2.0};
const std::vector<double> kPhiGrid{0.5, 1.0, 2.0};
const std::vector<double> kRhoGrid{1.1, 1.5, 1.9};

double density(double y, const TweedieParams& p) { return std::exp(tweedie::log_density(y, p)); }

double quad_upper(const TweedieParams& p) {
  return p.mu + 40.0 * std::sqrt(p.phi * std::pow(p.mu, p.rho));
}

// Quadrature of the continuous part over (0, mu + 40 sd). The density
// behaves like y^(alpha-1) near zero; for alpha < 1 that is an integrable
// singularity carrying real mass, so integrate in u = y^alpha there.
double positive_mass(const TweedieParams& p) {
  const double upper = quad_upper(p);
  const double alpha = (2.0 - p.rho) / (p.rho - 1.0);
  if (alpha >= 1.0)
    return test::integrate([&](double y) { return density(std::max(y, 1e-300), p); }, 0.0, upper,
                           1e-10);
  const double inv_a = 1.0 / alpha;
  return test::integrate(
      [&](double u) {
        const double y = std::pow(u, inv_a);
        return density(std::max(y, 1e-300), p) * inv_a * std::pow(u, inv_a - 1.0);
      },
      0.0, std::pow(upper, alpha), 1e-10);
}

}  // namespace

TEST_SUITE_BEGIN("tweedie");

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(TweedieParams(0.0, 1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(TweedieParams(1.0, -1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(TweedieParams(1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TweedieParams(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("compound reparametrization") {
  const auto c1 = tweedie::to_compound(TweedieParams(1.0, 1.0, 1.5));
  CHECK(c1.lambda == doctest::Approx(2.0));
  CHECK(c1.alpha == doctest::Approx(1.0));
  CHECK(c1.beta == doctest::Approx(2.0));

  // mu=2: lambda = 2 sqrt(2), alpha = 1, beta = sqrt(2); cross-checked via
  // the compound moments lambda a/b = mu and lambda a(a+1)/b^2 = phi mu^rho.
  const auto c2 = tweedie::to_compound(TweedieParams(2.0, 1.0, 1.5));
  CHECK(c2.lambda == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(c2.alpha == doctest::Approx(1.0));
  CHECK(c2.beta == doctest::Approx(std::sqrt(2.0)));
  CHECK(c2.lambda * c2.alpha / c2.beta == doctest::Approx(2.0));
  CHECK(c2.lambda * c2.alpha * (c2.alpha + 1.0) / (c2.beta * c2.beta) ==
        doctest::Approx(1.0 * std::pow(2.0, 1.5)));
}

TEST_CASE("round trip to relative 1e-12") {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const TweedieParams p(0.05 + 10.0 * unif(eng), 0.05 + 5.0 * unif(eng),
                          1.001 + 0.998 * unif(eng));
    const auto back = tweedie::from_compound(tweedie::to_compound(p));
    CHECK(test::rel_err(back.mu, p.mu) < 1e-12);
    CHECK(test::rel_err(back.phi, p.phi) < 1e-12);
    CHECK(test::rel_err(back.rho, p.rho) < 1e-12);
  }
}

TEST_CASE("prob_zero values and monotonicity") {
  CHECK(tweedie::prob_zero(TweedieParams(1.0, 1.0, 1.5)) == doctest::Approx(std::exp(-2.0)));

  // Poisson limit of the zero mass as rho -> 1+.
  for (double mu : kMuGrid)
    CHECK(std::abs(tweedie::prob_zero(TweedieParams(mu, 1.0, 1.0 + 1e-6)) - std::exp(-mu)) < 1e-4);

  for (double phi : kPhiGrid)
    for (double rho : kRhoGrid) {
      double prev = 1.0;
      for (double mu = 0.25; mu < 8.0; mu *= 1.7) {
        const double p0 = tweedie::prob_zero(TweedieParams(mu, phi, rho));
        CHECK(p0 > 0.0);
        CHECK(p0 < prev);
        prev = p0;
      }
    }
}

TEST_CASE("truncation window matches the reference term counts") {
  auto count = [](double y, double phi, double rho) {
    const auto ws = tweedie::truncate_series(y, TweedieParams(1.0, phi, rho));
    return ws.j_hi - ws.j_lo + 1;
  };
  // Reference counts 16 / 2 / 14; +-2 allows rounding-convention drift.
  CHECK(std::abs(count(1.0, 1.0, 1.5) - 16) <= 2);
  CHECK(std::abs(count(0.1, 0.5, 1.01) - 2) <= 2);
  CHECK(std::abs(count(10.0, 5.0, 1.5) - 14) <= 2);
}

TEST_CASE("truncation workspace invariants") {
  std::vector<double> ys{0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  for (double y : ys)
    for (double phi : kPhiGrid)
      for (double rho : kRhoGrid) {
        const TweedieParams p(1.0, phi, rho);
        const auto ws = tweedie::truncate_series(y, p);
        REQUIRE(ws.j_lo >= 1);
        REQUIRE(ws.j_lo <= ws.j_max);
        REQUIRE(ws.j_max <= ws.j_hi);

        const double peak = tweedie::log_v(ws.j_max, ws);
        CHECK(peak - tweedie::log_v(ws.j_hi + 1, ws) >= ws.log_threshold);
        if (ws.j_lo > 1) CHECK(peak - tweedie::log_v(ws.j_lo - 1, ws) >= ws.log_threshold);

        // log V concave in j across (and just beyond) the window.
        for (std::int64_t j = std::max<std::int64_t>(1, ws.j_lo - 2); j + 2 <= ws.j_hi + 2; ++j) {
          const double second_diff = tweedie::log_v(j + 2, ws) - 2.0 * tweedie::log_v(j + 1, ws) +
                                     tweedie::log_v(j, ws);
          CHECK(second_diff <= 1e-9);
        }

        // Geometric bounds on the omitted mass, relative to V(j_max).
        double omitted = 0.0;
        if (ws.j_lo > 1) {
          const double slope = tweedie::log_v_slope(static_cast<double>(ws.j_lo) - 1.0, ws);
          omitted += std::exp(tweedie::log_v(ws.j_lo - 1, ws) - peak) / (1.0 - std::exp(-slope));
        }
        const double slope_hi = tweedie::log_v_slope(static_cast<double>(ws.j_hi) + 1.0, ws);
        omitted += std::exp(tweedie::log_v(ws.j_hi + 1, ws) - peak) / (1.0 - std::exp(slope_hi));
        CHECK(omitted <= std::exp(-30.0));
      }
}

TEST_CASE("truncation rejects out-of-range inputs") {
  CHECK_THROWS_AS(tweedie::truncate_series(1e300, TweedieParams(1.0, 1e-300, 1.5)),
                  NumericRangeError);
  CHECK_THROWS_AS(tweedie::truncate_series(-1.0, TweedieParams(1.0, 1.0, 1.5)),
                  std::invalid_argument);
}

TEST_CASE("density normalizes on the parameter grid") {
  for (double mu : kMuGrid)
    for (double phi : kPhiGrid)
      for (double rho : kRhoGrid) {
        const TweedieParams p(mu, phi, rho);
        const double total = tweedie::prob_zero(p) + positive_mass(p);
        CHECK(std::abs(total - 1.0) < 1e-6);
      }
}

TEST_CASE("log density point values") {
  CHECK(tweedie::log_density(0.0, TweedieParams(1.0, 1.0, 1.5)) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(tweedie::log_density(-0.5, TweedieParams(1.0, 1.0, 1.5)),
                  std::invalid_argument);
}

TEST_CASE("density agrees with binned Monte-Carlo frequencies") {
  const TweedieParams p(1.0, 1.0, 1.5);
  const int n = 1'000'000;
  const auto draws = tweedie::sample_tweedie(p, n, 20240915);
  for (double x : {0.5, 1.0, 2.0}) {
    const double h = 0.04;
    const double prob = test::integrate([&](double y) { return density(y, p); }, x - h / 2,
                                        x + h / 2, 1e-12);
    double hits = 0.0;
    for (double d : draws)
      if (d >= x - h / 2 && d < x + h / 2) hits += 1.0;
    const double freq = hits / n;
    const double se = std::sqrt(prob * (1.0 - prob) / n);
    CHECK(std::abs(freq - prob) < 3.0 * se + 1e-9);
  }
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 60; ++k) {
    const double mu = 0.2 + 3.0 * unif(eng);
    const double phi = 0.2 + 3.0 * unif(eng);
    const double rho = 1.05 + 0.9 * unif(eng);
    const double y = unif(eng) < 0.25 ? 0.0 : 0.05 + 6.0 * unif(eng);

    const auto g = tweedie::log_density_grad(y, TweedieParams(mu, phi, rho));
    const double fd_mu = test::central_diff(
        [&](double m) { return tweedie::log_density(y, TweedieParams(m, phi, rho)); }, mu);
    const double fd_phi = test::central_diff(
        [&](double f) { return tweedie::log_density(y, TweedieParams(mu, f, rho)); }, phi);
    const double fd_rho = test::central_diff(
        [&](double r) { return tweedie::log_density(y, TweedieParams(mu, phi, r)); }, rho, 1e-6);

    CHECK(test::rel_err(g.d_mu, fd_mu) < 1e-4);
    CHECK(test::rel_err(g.d_phi, fd_phi) < 1e-4);
    CHECK(test::rel_err(g.d_rho, fd_rho) < 1e-4);
  }
}

TEST_CASE("gradient closed forms at zero and score mean") {
  const TweedieParams p(1.3, 0.8, 1.4);
  const auto g0 = tweedie::log_density_grad(0.0, p);
  CHECK(g0.d_mu == doctest::Approx(-std::pow(p.mu, 1.0 - p.rho) / p.phi));

  // E[d log p / d mu] = 0 at the data-generating parameters.
  const int n = 1'000'000;
  const auto draws = tweedie::sample_tweedie(p, n, 777);
  std::vector<double> scores;
  scores.reserve(n);
  for (double y : draws) scores.push_back(tweedie::log_density_grad(y, p).d_mu);
  const double se = std::sqrt(test::var_of(scores) / n);
  CHECK(std::abs(test::mean_of(scores)) < 3.0 * se);
}

TEST_CASE("sampler moments and zero fraction") {
  const TweedieParams p(1.5, 1.2, 1.6);
  const int n = 1'000'000;
  const auto draws = tweedie::sample_tweedie(p, n, 31337);

  double zeros = 0.0;
  for (double d : draws)
    if (d == 0.0) zeros += 1.0;
  const double p0 = tweedie::prob_zero(p);
  CHECK(std::abs(zeros / n - p0) < 3.0 * std::sqrt(p0 * (1.0 - p0) / n));

  const double var_p = p.phi * std::pow(p.mu, p.rho);
  CHECK(std::abs(test::mean_of(draws) - p.mu) < 4.0 * std::sqrt(var_p / n));
  CHECK(test::var_of(draws) == doctest::Approx(var_p).epsilon(0.02));

  CHECK(tweedie::sample_tweedie(p, 64, 5) == tweedie::sample_tweedie(p, 64, 5));
}

TEST_CASE("sampler distribution matches the quadrature CDF") {
  const TweedieParams p(1.0, 1.0, 1.5);
  const int n = 1'000'000;
  auto draws = tweedie::sample_tweedie(p, n, 424242);
  std::vector<double> pos;
  for (double d : draws)
    if (d > 0.0) pos.push_back(d);
  std::sort(pos.begin(), pos.end());

  // CDF of the positive part on a grid, interpolated at the sample points.
  const double upper = quad_upper(p);
  const int grid_n = 4000;
  std::vector<double> grid(grid_n + 1), cdf(grid_n + 1, 0.0);
  for (int i = 0; i <= grid_n; ++i) grid[i] = upper * i / grid_n;
  for (int i = 1; i <= grid_n; ++i)
    cdf[i] = cdf[i - 1] + test::integrate([&](double y) { return density(std::max(y, 1e-300), p); },
                                          grid[i - 1], grid[i], 1e-11);
  const double mass = 1.0 - tweedie::prob_zero(p);
  auto cdf_at = [&](double x) {
    if (x >= upper) return 1.0;
    const double pos_idx = x / upper * grid_n;
    const int i = static_cast<int>(pos_idx);
    const double frac = pos_idx - i;
    return ((1.0 - frac) * cdf[i] + frac * cdf[std::min(i + 1, grid_n)]) / mass;
  };

  double ks = 0.0;
  const double m = static_cast<double>(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double f = cdf_at(pos[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / m));
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / m));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("tweedie-loss approximation") {
  // Identical to the negated loss, by construction.
  for (double y : {0.0, 0.3, 1.0, 4.0})
    for (double mu : kMuGrid)
      for (double rho : kRhoGrid) {
        const double loss = -y * std::pow(mu, 1.0 - rho) / (1.0 - rho) +
                            std::pow(mu, 2.0 - rho) / (2.0 - rho);
        CHECK(tweedie::approx_log_density(y, mu, rho) == doctest::Approx(-loss));
      }

  // mu = 1: the penalty term is 1/(2-rho) for every y.
  for (double rho : kRhoGrid) {
    const double pen1 = tweedie::approx_log_density(1.0, 1.0, rho) - 1.0 / (1.0 - rho);
    const double pen2 = tweedie::approx_log_density(3.0, 1.0, rho) - 3.0 / (1.0 - rho);
    CHECK(pen1 == doctest::Approx(-1.0 / (2.0 - rho)));
    CHECK(pen2 == doctest::Approx(-1.0 / (2.0 - rho)));
  }

  // Normalized, it is a negative exponential with rate mu^(1-rho)/(rho-1).
  for (double mu : {0.5, 2.0})
    for (double rho : {1.3, 1.7}) {
      const double rate = std::pow(mu, 1.0 - rho) / (rho - 1.0);
      const double c = rate * std::exp(std::pow(mu, 2.0 - rho) / (2.0 - rho));
      const double total = test::integrate(
          [&](double y) { return c * std::exp(tweedie::approx_log_density(y, mu, rho)); }, 0.0,
          60.0 / rate, 1e-10);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
      // And its density equals rate * exp(-rate y).
      CHECK(c * std::exp(tweedie::approx_log_density(1.0, mu, rho)) ==
            doctest::Approx(rate * std::exp(-rate)).epsilon(1e-10));
    }
}

TEST_SUITE_END();
