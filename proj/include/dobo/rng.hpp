#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace dobo::rng {

// SplitMix64 finalizer: bijective 64-bit mixer with full avalanche. Used both
// to hash stream keys and to produce the output sequence.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kStreamStep = 0x9E3779B97F4A7C15ull;

// What a stream is consumed for. Folding the purpose into the key keeps draws
// for different uses independent even when the other key fields coincide.
enum class Purpose : std::uint64_t {
  kPerturbation = 1,  // estimator direction u
  kInit = 2,          // initial decisions
  kLossNoise = 3,     // per-round loss noise
  kTargetCoin = 4,    // target path coin flips
  kProbe = 5,         // standalone/test draws
};

// Counter-based pseudo-random stream. The key fully determines the sequence;
// there is no global state, so draws are reproducible across platforms,
// thread schedules, and call sites.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : state_(key) {}

  std::uint64_t next_u64() noexcept {
    state_ += kStreamStep;
    return mix64(state_);
  }

  // Uniform on [0, 1).
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); safe as a log() argument.
  double next_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_double();
  }

  bool next_bernoulli(double p) noexcept { return next_double() < p; }

  // Standard normal via Box-Muller. Always consumes exactly two words so the
  // draw count per call never depends on the values drawn.
  double next_gaussian() noexcept {
    const double radius = std::sqrt(-2.0 * std::log(next_open()));
    return radius * std::cos(2.0 * std::numbers::pi * next_double());
  }

  Eigen::VectorXd next_gaussian_vector(int dimension) {
    Eigen::VectorXd v(dimension);
    for (int c = 0; c < dimension; ++c) v[c] = next_gaussian();
    return v;
  }

 private:
  std::uint64_t state_;
};

// Key derivation: fold the fields through the mixer one at a time so nearby
// (seed, replicate, agent, round) tuples land in unrelated streams.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate,
                                   std::uint64_t agent, std::uint64_t round,
                                   Purpose purpose) noexcept {
  std::uint64_t h = mix64(seed ^ 0x8000000000000001ull);
  h = mix64(h ^ (replicate + kStreamStep));
  h = mix64(h ^ (agent + 2 * kStreamStep));
  h = mix64(h ^ (round + 3 * kStreamStep));
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) + 4 * kStreamStep));
  return h;
}

inline Stream stream(std::uint64_t seed, std::uint64_t replicate,
                     std::uint64_t agent, std::uint64_t round,
                     Purpose purpose) noexcept {
  return Stream(stream_key(seed, replicate, agent, round, purpose));
}

// (seed, replicate) pair threaded through the optimizer; per-agent, per-round
// streams are derived where they are consumed.
struct StreamFactory {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  Stream make(std::uint64_t agent, std::uint64_t round,
              Purpose purpose) const noexcept {
    return stream(seed, replicate, agent, round, purpose);
  }
};

}  // namespace dobo::rng
