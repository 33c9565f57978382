#pragma once

#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <random>

namespace mqn {

// splitmix64 finalizer, used for seeding and stream derivation
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// xoshiro256** engine. Cheap to seed, so every trial and subsystem gets its
// own stream derived from (master seed, subsystem, counter).
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x = mix64(x);
      w = x;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  // standard normal, Marsaglia polar method on uniform(); the spare value
  // stays with the engine. std::normal_distribution goes through
  // generate_canonical, which is several times slower in the trial loop.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Poisson draw without per-call setup (the mean changes on every call in the
// kernel): inversion below 10, Hormann's PTRS rejection above.
inline int poisson_draw(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  if (mean < 10.0) {
    const double u = rng.uniform();
    double p = std::exp(-mean), cdf = p;
    int k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }
  const double slam = std::sqrt(mean), loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<int>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<int>(k);
  }
}

enum class Stream : std::uint64_t {
  NodeA = 1,
  NodeB = 2,
  NodeC = 3,
  Server = 4,
  Detectors = 5,
  Verification = 6,
  Scheduler = 7,
  Cycle = 8,
  Analysis = 9,
  Jobs = 10,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t counter) {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(s) * 0x632be59bd9b4e019ULL)) + counter);
}

inline Rng make_stream(std::uint64_t master, Stream s, std::uint64_t counter) {
  return Rng(derive_seed(master, s, counter));
}

}  // namespace mqn
