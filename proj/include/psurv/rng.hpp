#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psurv {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream owned by replication `index` under `master`.
/// Distinct (master, index) pairs give decorrelated streams.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_stream(std::uint64_t master, std::uint64_t index) {
  return Engine(stream_seed(master, index));
}

/// Uniform variate on the open interval (0, 1); never returns 0 or 1.
inline double uniform_open01(Engine& rng) {
  return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

inline bool bernoulli(Engine& rng, double p) { return uniform_open01(rng) < p; }

/// Number of trials up to and including the first success, success prob `p`.
inline std::uint64_t geometric_trials(Engine& rng, double p) {
  if (p >= 1.0) return 1;
  const double u = uniform_open01(rng);
  const double k = std::floor(std::log(u) / std::log1p(-p));
  if (k >= 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(k) + 1;
}

}  // namespace psurv
