#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>

namespace qoesim {

/// Engine used throughout. Its output sequence is fixed by the standard, so
/// together with the hand-written variate transforms below every draw is
/// reproducible across platforms and standard libraries.
using Rng = std::mt19937_64;

/// Pipeline stages that own an independent random stream.
enum class Stage : std::uint64_t {
  kTopology = 1,
  kUnderperforming = 2,
  kMobility = 3,
  kTolerance = 4,
  kLabelNoise = 5,
  kDelivery = 6,
  kClassifier = 7,
  kCalibration = 8,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hierarchical seed derivation: derive_seed(master, {rep, stage, user}).
/// Each component is folded through splitmix64 so that neighbouring indices
/// yield unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(parent);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline std::uint64_t stage_seed(std::uint64_t master, std::uint64_t repetition, Stage stage) {
  return derive_seed(master, {repetition, static_cast<std::uint64_t>(stage)});
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Standard normal via Box-Muller (one variate per call; the pair's second
/// half is discarded to keep the stream position a function of call count).
inline double standard_normal(Rng& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace qoesim
