#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gex {

// One step of the splitmix64 output function; a bijection on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed derivation used for every replica and sub-stream:
//   derive_seed(master, stream, index)
//     = splitmix64(splitmix64(master ^ splitmix64(stream)) + index * 0x9E3779B97F4A7C15)
// Independent of worker count and scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Pinned generator: std::mt19937_64 (bit-exact by the standard) with
// hand-written conversions, so draws do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return eng_(); }

  std::uint64_t bits() { return eng_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0,n), n >= 1, exact (Lemire rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(eng_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  // +1 with probability (1+rho)/2.
  int rademacher(double rho) { return uniform() < 0.5 * (1.0 + rho) ? 1 : -1; }

  std::uint64_t poisson(double mean);
  std::uint64_t binomial(std::uint64_t n, double p);

  // Index drawn from unnormalized nonnegative weights with the given total.
  std::size_t categorical(const double* weights, std::size_t count, double total);

 private:
  std::mt19937_64 eng_;
};

}  // namespace gex
