#pragma once

#include <cstdint>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "entx/errors.hpp"

namespace entx::mc {

// splitmix64 output function.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based uniform stream. Stream (seed, stream_id) is independent of
// every other stream, so trials can be evaluated in any order, or in
// parallel, and still reproduce bit-identical results.
class TrialRng {
public:
  explicit TrialRng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(mix64(seed + 0x9E3779B97F4A7C15ull) ^
               mix64(stream_id + 0xD1B54A32D192ED03ull)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Standard normal via Box-Muller; two fresh uniforms per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
  std::uint64_t state_;
};

// Samples an index from a nonnegative weight vector by CDF inversion.
// Weights must sum to 1 within 1e-6; they are renormalized internally.
inline int sample_outcome(std::span<const double> weights, double u) {
  if (weights.empty()) throw DimensionMismatch("sample_outcome: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (w < -1e-12 || !std::isfinite(w))
      throw NotNormalized("sample_outcome: negative or non-finite weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw NotNormalized("sample_outcome: weights sum to " + std::to_string(total));
  double target = u * total;
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = static_cast<int>(i);
    acc += weights[i];
    if (target < acc && weights[i] > 0.0) return static_cast<int>(i);
  }
  return last_positive;
}

inline int sample_outcome(std::span<const double> weights, TrialRng& rng) {
  return sample_outcome(weights, rng.uniform());
}

//------------------------------------------------------------------------------
// Frequency estimation
//------------------------------------------------------------------------------

struct TrialStats {
  long long trials = 0;
  std::vector<long long> counts;     // branch index -> hit count
  std::vector<double> frequencies;   // counts / trials
  std::vector<double> std_error;     // binomial sqrt(f(1-f)/trials)
};

// Runs `trials` independent trials of a protocol. Each trial draws from its
// own stream derived from (seed, trial_index); the reduction over counts is
// plain integer addition, so the result does not depend on evaluation order.
template <typename Protocol>
TrialStats estimate_success(Protocol&& protocol, long long trials, std::uint64_t seed) {
  if (trials < 1) throw DimensionMismatch("estimate_success: trials must be >= 1");
  TrialStats stats;
  stats.trials = trials;
  for (long long t = 0; t < trials; ++t) {
    TrialRng rng(seed, static_cast<std::uint64_t>(t));
    int branch = std::forward<Protocol>(protocol)(rng);
    if (branch < 0) throw NumericalFailure("estimate_success: negative branch index");
    if (static_cast<std::size_t>(branch) >= stats.counts.size())
      stats.counts.resize(static_cast<std::size_t>(branch) + 1, 0);
    ++stats.counts[static_cast<std::size_t>(branch)];
  }
  stats.frequencies.resize(stats.counts.size());
  stats.std_error.resize(stats.counts.size());
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    double f = static_cast<double>(stats.counts[i]) / static_cast<double>(trials);
    stats.frequencies[i] = f;
    stats.std_error[i] = std::sqrt(f * (1.0 - f) / static_cast<double>(trials));
  }
  return stats;
}

}  // namespace entx::mc
