#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace igp {

/// Input outside the representable numeric range of an algorithm
/// (e.g. a series-truncation window too wide to scan).
struct NumericRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A matrix could not be factorized even after jitter escalation.
struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Optimization did not produce a finite state after all restarts.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace rng {

// splitmix64; used to whiten user-supplied seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// FNV-1a. std::hash is not stable across implementations, and per-series
// seeds must not move when a dataset is subset or reordered.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t master, std::string_view key) {
  std::uint64_t s = master ^ fnv1a(key);
  return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  std::uint64_t s = seed;
  std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
  return std::mt19937_64(seq);
}

}  // namespace rng

namespace num {

inline double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double stddev(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(n - 1));
}

}  // namespace num
}  // namespace igp
