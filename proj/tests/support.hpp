#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <vector>

// Test-side oracles, independent of the implementation paths they check:
// adaptive Gauss-Kronrod quadrature, central finite differences, and a
// seeded generator of intermittent count series.

namespace igp::test {

namespace detail {

// G7/K15 nodes and weights (positive half).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {0.129484966168870, 0.279705391489277,
                                            0.381830050505119, 0.417959183673469};

inline void gk15(const std::function<double(double)>& f, double a, double b, double& k15,
                 double& g7) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  k15 = 0.0;
  g7 = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = hw * kKronrodNodes[i];
    const double fv = i == 7 ? f(c) : f(c - dx) + f(c + dx);
    k15 += kKronrodWeights[i] * fv;
    if (i % 2 == 1) g7 += kGaussWeights[i / 2] * fv;
  }
  k15 *= hw;
  g7 *= hw;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integral of f over [a, b]: repeatedly
/// bisect the segment with the largest |K15 - G7| until the summed error
/// estimate is below tol (integrable endpoint singularities included).
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
  struct Segment {
    double a, b, value, err;
    bool operator<(const Segment& o) const { return err < o.err; }
  };
  auto make = [&](double lo, double hi) {
    double k15, g7;
    detail::gk15(f, lo, hi, k15, g7);
    return Segment{lo, hi, k15, std::abs(k15 - g7)};
  };
  std::priority_queue<Segment> queue;
  queue.push(make(a, b));
  double total_err = queue.top().err;
  for (int round = 0; round < 4000 && total_err > tol; ++round) {
    const Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = make(worst.a, mid);
    const Segment right = make(mid, worst.b);
    total_err += left.err + right.err - worst.err;
    queue.push(left);
    queue.push(right);
  }
  double sum = 0.0;
  while (!queue.empty()) {
    sum += queue.top().value;
    queue.pop();
  }
  return sum;
}

/// Central difference with a step relative to the magnitude of x.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double rel_step = 1e-5) {
  const double h = rel_step * std::max(std::abs(x), 1.0);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-8);
}

/// Statistics helpers for Monte-Carlo assertions.
inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double var_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

/// Seeded intermittent count series: two-state occurrence chain plus small
/// positive demands with a slowly drifting rate.
struct SynthSeries {
  std::string item_id;
  std::vector<double> values;
};

inline std::vector<SynthSeries> synth_dataset(int n_series, int length, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SynthSeries> out;
  out.reserve(n_series);
  for (int s = 0; s < n_series; ++s) {
    const double p01 = 0.1 + 0.5 * unif(eng);   // zero -> positive
    const double p11 = 0.2 + 0.6 * unif(eng);   // positive -> positive
    const double demand_mean = 1.0 + 4.0 * unif(eng);
    std::poisson_distribution<int> demand(demand_mean);
    SynthSeries ss;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "item_%04d", s);
    ss.item_id = buf;
    bool positive = false;
    bool has_zero = false;
    for (int t = 0; t < length; ++t) {
      positive = unif(eng) < (positive ? p11 : p01);
      const double v = positive ? 1.0 + demand(eng) : 0.0;
      if (v == 0.0) has_zero = true;
      ss.values.push_back(v);
    }
    if (!has_zero) ss.values[length / 2] = 0.0;  // keep everything intermittent
    out.push_back(std::move(ss));
  }
  return out;
}

}  // namespace igp::test
